#pragma once

#include <optional>
#include <string>

#include "levelcross/kernels.hpp"
#include "levelcross/quadrature.hpp"

namespace lcx {

// Down statistics coincide with Up.
enum class CrossingMode { Up, Down, Total };

std::string mode_name(CrossingMode m);
CrossingMode parse_mode(const std::string& s);

struct CrossingParams {
  double alpha;
  double beta;
  double gamma;
  double delta;
  double det;        // (r0^2 - r^2) / (4 alpha beta)
  double r0_sq_gap;  // r0^2 - r^2
  double t;
  double u;
};

// Standard: double arithmetic, with lag parameters taken from binary128 kernel values at short lags.
// Extended: the whole integrand in binary128.
// Automatic: Standard, promoted to Extended when the result cancels against the product term.
enum class Precision { Standard, Extended, Automatic };

CrossingParams abg_params(const Kernel& k, double u, double t);
// alpha, beta, gamma, delta from explicit moments; no kernel involved.
CrossingParams abg_from_moments(double r0, double q0, double r, double p, double q, double u);

double mean_rate(const Kernel& k, double u, CrossingMode mode);
double mean_count(const Kernel& k, double u, double horizon, CrossingMode mode);

double integrand_up(const Kernel& k, double u, double t, Precision prec = Precision::Automatic);
double integrand_total(const Kernel& k, double u, double t, Precision prec = Precision::Automatic);
double integrand(const Kernel& k, double u, double t, CrossingMode mode, Precision prec = Precision::Automatic);

// Level-zero forms written with arctan instead of Owen's T.
double zero_level_integrand_up(const Kernel& k, double t);
double zero_level_integrand_total(const Kernel& k, double t);

// Right-hand sides of the canonical Gaussian integrals over |x| < y (up) and |y^2 - x^2| over the plane (total).
struct CanonicalIntegrals {
  double up;
  double total;
};
CanonicalIntegrals canonical_integrals(double alpha, double beta, double gamma);

struct CrossingStats {
  CrossingMode mode = CrossingMode::Up;
  double u = 0.0;
  bool asymptotic = false;
  double horizon = 0.0;  // finite T, or +inf when asymptotic
  double mean = 0.0;     // count for finite T, rate when asymptotic
  double variance = 0.0;
  double fano = 0.0;     // NaN for finite T
  double integral = 0.0;
  double integral_error = 0.0;
  long evaluations = 0;
  bool converged = false;
  bool clamped = false;
  std::string diagnostic;
};

// Defaults for the kernel: time scale tau_slow, exponential tail map for
// exponentially decaying families and the algebraic map for rational quadratic.
QuadratureSpec default_quadrature(const Kernel& k);

// Integrals start at this lag; [0, t_min] is handled as a single panel.
double lag_floor(const Kernel& k);

CrossingStats variance_count(const Kernel& k, double u, double horizon, CrossingMode mode,
                             std::optional<QuadratureSpec> spec = std::nullopt);
CrossingStats variance_rate_asymptotic(const Kernel& k, double u, CrossingMode mode,
                                       std::optional<QuadratureSpec> spec = std::nullopt);
double fano(const Kernel& k, double u, CrossingMode mode, std::optional<QuadratureSpec> spec = std::nullopt);

// horizon = nullopt for the asymptotic rate.
CrossingStats zero_level_stats(const Kernel& k, std::optional<double> horizon, CrossingMode mode,
                               std::optional<QuadratureSpec> spec = std::nullopt);

struct DimensionlessView {
  double psi;
  ShapeParams shape;
};
DimensionlessView dimensionless_view(const Kernel& k, double u);
double dimensionless_fano(const ShapeParams& shape, double psi, CrossingMode mode,
                          std::optional<QuadratureSpec> spec = std::nullopt);

}  // namespace lcx
