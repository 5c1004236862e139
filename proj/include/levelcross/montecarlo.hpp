#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "levelcross/crossings.hpp"
#include "levelcross/kernels.hpp"
#include "levelcross/quadrature.hpp"

namespace lcx {

// ExactSde steps the underlying linear SDE with its exact Gaussian transition (SDHO and OU only);
// Circulant samples any kernel on the grid by circulant embedding; Auto prefers the SDE.
enum class SimMethod { Auto, ExactSde, Circulant };

struct SimConfig {
  Kernel kernel;
  double horizon = 120.0;
  double dt = 0.01;
  long trials = 5000;
  std::uint64_t seed = 1;
  double u = 0.0;
  CrossingMode mode = CrossingMode::Up;
  SimMethod method = SimMethod::Auto;
  int bootstrap = 1000;
  int threads = 0;  // 0: hardware concurrency
  int max_padding_doublings = 7;
  // At the padding cap, negative circulant eigenvalues are clamped if the resulting change in any
  // covariance is at most this times r0; otherwise simulation fails.
  double embedding_tolerance = 1e-10;

  explicit SimConfig(Kernel k) : kernel(std::move(k)) {}
  // Throws ParameterError on dt <= 0, trials < 2 or a horizon shorter than one step.
  void validate() const;
  // dt above 0.05 tau_fast resolves the fastest timescale poorly.
  bool coarse_step() const;
  std::size_t samples() const;
};

// dt = factor * tau_slow.
double default_dt(const Kernel& k, double factor = 0.01);

struct SimEstimate {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double fano = 0.0;      // variance / mean, NaN when mean == 0
  double mean_se = 0.0;
  double variance_se = 0.0;
  double fano_se = 0.0;  // bootstrap
  long trials = 0;
  long long total_crossings = 0;
  bool coarse_step = false;
  std::vector<long> counts;
};

// Stationary sampled trajectories; trial i always yields the same path.
class PathSimulator {
 public:
  virtual ~PathSimulator() = default;
  std::size_t samples() const { return n_; }
  double dt() const { return dt_; }
  // Fills x (and the velocity or driving input in aux when non-null and available).
  virtual void sample(std::uint64_t trial, std::vector<double>& x, std::vector<double>* aux = nullptr) const = 0;
  virtual bool has_aux() const { return false; }
  // Bound on |sampled covariance - r| over the path lags (0 when exact).
  virtual double covariance_error() const { return 0.0; }

 protected:
  PathSimulator(std::size_t n, double dt, std::uint64_t seed) : n_(n), dt_(dt), seed_(seed) {}
  std::size_t n_;
  double dt_;
  std::uint64_t seed_;
};

// (x, v) of the damped oscillator; aux receives v.
std::unique_ptr<PathSimulator> simulate_sdho_paths(const SimConfig& config);
// y of the filtered system; aux receives the driving OU input x.
std::unique_ptr<PathSimulator> simulate_ou_system_paths(const SimConfig& config);
// Any kernel, via circulant embedding of r(|i-j| dt).
std::unique_ptr<PathSimulator> simulate_kernel_paths(const Kernel& kernel, const SimConfig& config);
std::unique_ptr<PathSimulator> make_simulator(const SimConfig& config);

// Up: x_i < u <= x_{i+1}; Down: x_{i+1} < u <= x_i; Total: both.
long count_crossings(const std::vector<double>& path, double u, CrossingMode mode);

SimEstimate estimate_stats(const SimConfig& config);
// One estimate per level from the same set of paths.
std::vector<SimEstimate> estimate_stats_multi(const SimConfig& config, const std::vector<double>& levels);
SimEstimate summarize_counts(std::vector<long> counts, int bootstrap, std::uint64_t seed);

// Writes "time x" rows for one trajectory.
void dump_path(const PathSimulator& sim, std::uint64_t trial, const std::string& file);

struct BruteSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-24;
  int max_subdivisions = 4000;
};

struct BruteResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

// Two-crossing density at lag t minus the independent product, integrated over velocities
// directly from the 4x4 Gaussian density of (X_0, X_t, X'_0, X'_t).
BruteResult bruteforce_integrand_up(const Kernel& k, double u, double t, const BruteSpec& spec = {});
BruteResult bruteforce_integrand_total(const Kernel& k, double u, double t, const BruteSpec& spec = {});
BruteResult bruteforce_integrand(const Kernel& k, double u, double t, CrossingMode mode, const BruteSpec& spec = {});

struct TheoremValues {
  double up;
  double total;
  double up_error;
  double total_error;
};
// Direct 2D quadrature of (y^2 - x^2) e^{-alpha (x - gamma)^2 - beta y^2} over |x| < y, and of its
// absolute value over the plane.
TheoremValues bruteforce_theorem_integrals(double alpha, double beta, double gamma, const BruteSpec& spec = {});

// Finite-horizon count variance from the brute-force integrand.
BruteResult bruteforce_variance(const Kernel& k, double u, double horizon, CrossingMode mode,
                                const BruteSpec& spec = {1e-8, 1e-20, 2000});

struct LemmaCheck {
  int lemma;
  double closed;
  double numeric;
  double rel_error;
};
// Lemmas 1..6 of the canonical-integral derivation; x is used by lemma 1 only.
LemmaCheck check_lemma(int lemma, double alpha, double beta, double gamma, double x = 0.5);

}  // namespace lcx
