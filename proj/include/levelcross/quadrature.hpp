#pragma once

#include <functional>

namespace lcx {

enum class EndpointPolicy { Closed, OpenLeft };

// ExponentialMap: t = lo + s*(-log(1-x)), s = 4*time_scale; integrand decaying like e^{-t/time_scale} maps to O((1-x)^3).
// AlgebraicMap:   t = lo + s*((1-x)^-4 - 1), s = time_scale; for power-law tails.
// FixedCutoff:    integrate to lo + cutoff_multiple*time_scale, tail bounded by the last panel.
enum class TailPolicy { ExponentialMap, AlgebraicMap, FixedCutoff };

struct QuadratureSpec {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  EndpointPolicy endpoint = EndpointPolicy::Closed;
  TailPolicy tail = TailPolicy::ExponentialMap;
  double cutoff_multiple = 50.0;
  double time_scale = 1.0;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

using Integrand = std::function<double(double)>;

QuadratureResult integrate_finite(const Integrand& f, double lo, double hi, const QuadratureSpec& spec = {});
QuadratureResult integrate_semi_infinite(const Integrand& f, double lo, const QuadratureSpec& spec = {});

// One 21-point Kronrod panel with its embedded 10-point Gauss error estimate.
QuadratureResult gauss_kronrod_21(const Integrand& f, double lo, double hi);

}  // namespace lcx
