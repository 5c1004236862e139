#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levelcross/crossings.hpp"
#include "levelcross/kernels.hpp"
#include "levelcross/quadrature.hpp"

namespace lcx::cli {

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2, kStatistical = 3 };

// Flag values shared by every subcommand.
struct KernelOptions {
  std::string kernel = "sdho";
  double omega0 = 1.0, zeta = 0.5, theta = 1.0;
  double sigma = 1.0, tau = 1.0, alpha = 1.0;
  double tau_f = 3.0, tau_e = 30.0;
};

Kernel build_kernel(const KernelOptions& o);

// Sets a KernelOptions field (tau-f, tau-e spelled with dashes), kappa (OU: tau_e = tau_f / kappa)
// or u by name. psi (u = psi * amplitude) is resolved by run_sweep once the kernel is built.
void set_parameter(KernelOptions& o, double& u, const std::string& name, double value);

struct Axis {
  std::string name;
  double min = 0.0, max = 1.0;
  int points = 2;
  bool log = false;
  std::vector<double> values() const;
};
// "name:min:max:points" with an optional ":log" suffix.
Axis parse_axis(const std::string& text);

struct SweepSpec {
  KernelOptions kernel;
  double u = 0.0;
  std::vector<Axis> axes;
  std::vector<std::string> quantities{"mean_rate", "var_rate", "fano"};
  CrossingMode mode = CrossingMode::Up;
  std::optional<double> horizon;
  std::optional<QuadratureSpec> quadrature;  // kernel default when empty; tolerances/tail overridden
  double rel_tol = 0, abs_tol = 0, tail_cutoff = 0;  // 0 keeps the default
  int jobs = 0;
  void validate() const;
};

struct SweepTable {
  std::vector<std::string> columns;
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows;
  bool all_ok = true;
};

SweepTable run_sweep(const SweepSpec& spec);
void write_csv(const SweepTable& t, std::ostream& os);
void write_json(const SweepTable& t, std::ostream& os);
// Reads a file written by write_csv.
SweepTable read_csv(std::istream& is);

struct SuiteResult {
  std::string name;
  bool pass;
  std::string detail;
};
// Oracle suites run by `verify`; `draws` scales the random sample sizes.
std::vector<SuiteResult> run_verify_suites(int draws, std::uint64_t seed);

// Entry point of the levelcross executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lcx::cli
