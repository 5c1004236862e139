#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "levelcross/real.hpp"

namespace lcx {

enum class Family { Sdho, OuMeanRevert, RationalQuadratic, SquaredExponential, Custom };

std::string family_name(Family f);
Family parse_family(const std::string& name);

// (r, p, q) = (r(t), r'(t), -r''(t)) at lag t.
template <class R> struct Derivatives {
  R r = 0;
  R p = 0;
  R q = 0;
  R t = 0;
};
using KernelDerivatives = Derivatives<double>;

struct SdhoParams {
  double omega0;
  double zeta;
  double theta;
};

struct OuParams {
  double sigma;
  double tau_f;
  double tau_e;
};

struct RqParams {
  double sigma;
  double tau;
  double alpha;
};

struct SeParams {
  double sigma;
  double tau;
};

struct CustomParams {
  std::string name;
  std::function<KernelDerivatives(double)> eval;
  double tau_slow;
};

using KernelParams = std::variant<SdhoParams, OuParams, RqParams, SeParams, CustomParams>;

// Kernel shape in units where amplitude and timescale are 1.
struct ShapeParams {
  Family family;
  std::vector<double> values;  // sdho: {zeta}; ou: {kappa}; rq: {alpha}; se: {}
};

class Kernel {
 public:
  explicit Kernel(KernelParams params);

  Family family() const { return family_; }
  const KernelParams& params() const { return params_; }
  double r0() const { return r0_; }
  double q0() const { return q0_; }
  double tau_slow() const { return tau_slow_; }
  double tau_fast() const { return tau_fast_; }
  // sqrt(r0/q0)
  double tau_curvature() const { return std::sqrt(r0_ / q0_); }

  // Scale parameters of the family: r(t) = amplitude^2 g(t/timescale; shape).
  double amplitude() const;
  double timescale() const;
  ShapeParams shape() const;

  KernelDerivatives eval(double t) const;
  // Same closed forms in binary128; custom kernels fall back to double.
  Derivatives<quad> eval_extended(quad t) const;
  bool has_extended() const { return family_ != Family::Custom; }

  std::string describe() const;

 private:
  KernelParams params_;
  Family family_;
  double r0_ = 0, q0_ = 0, tau_slow_ = 0, tau_fast_ = 0;
};

Kernel make_sdho(double omega0, double zeta, double theta);
// taylor_fallback=false makes |kappa-1| < kOuUnitGuard a SingularParameterError.
Kernel make_ou_mean_revert(double sigma, double tau_f, double tau_e, bool taylor_fallback = true);
Kernel make_rational_quadratic(double sigma, double tau, double alpha);
Kernel make_squared_exponential(double sigma, double tau);
Kernel make_custom(std::string name, std::function<KernelDerivatives(double)> eval, double tau_slow);
Kernel make_from_shape(const ShapeParams& shape, double amplitude, double timescale);

constexpr double kOuUnitGuard = 1e-6;
constexpr double kSdhoUnitGuard = 1e-6;

// Overdamped SDHO with the same bi-exponential decay as the OU-driven process.
SdhoParams map_ou_to_sdho(const OuParams& ou);

struct ValidityCheck {
  std::string name;
  bool pass;
  double value;
  std::string detail;
};

struct ValidityReport {
  std::vector<ValidityCheck> checks;
  bool all_pass() const;
  bool passes(const std::string& name) const;
  const ValidityCheck* find(const std::string& name) const;
  // Checks required before integrating to infinity.
  bool asymptotic_ok() const;
  std::string summary() const;
};

std::vector<double> validity_grid(const Kernel& k, int points = 512, double lo = 1e-6, double hi = 20.0);
ValidityReport check_validity(const Kernel& k, const std::vector<double>& grid, double eps);
ValidityReport check_validity(const Kernel& k);

}  // namespace lcx
