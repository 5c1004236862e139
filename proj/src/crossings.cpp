#include "levelcross/crossings.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "levelcross/errors.hpp"
#include "levelcross/special.hpp"

namespace lcx {

namespace {

template <class R> struct Lag {
  R alpha, beta, gamma, delta, det, gap;
};

template <class R> Lag<R> lag_params(R r0, R q0, R r, R p, R q, R u) {
  const R gap = (r0 - r) * (r0 + r);
  if (!(gap > 0)) throw DegenerateLagError("r0^2 - r^2 is not positive at this lag");
  R d1 = p * p + (q - q0) * (r + r0);
  R d2 = p * p + (q + q0) * (r - r0);
  // Both are negative; below their rounding floor the sign is noise and the integrand is insensitive to them.
  const R floor1 = 64 * epsilon<R>() * (p * p + xp::abs((q - q0) * (r + r0)));
  const R floor2 = 64 * epsilon<R>() * (p * p + xp::abs((q + q0) * (r - r0)));
  if (d1 > -floor1) d1 = -floor1;
  if (d2 > -floor2) d2 = -floor2;
  Lag<R> L;
  L.alpha = -(r + r0) / (2 * d1);
  L.beta = -(r0 - r) / (2 * d2);
  L.gamma = xp::sqrt(R(2)) * p * u / (r + r0);
  L.delta = 1 / (r + r0);
  L.det = d1 * d2;
  L.gap = gap;
  if (!(L.alpha > 0) || !(L.beta > 0) || !xp::isfinite(L.alpha) || !xp::isfinite(L.beta))
    throw DegenerateLagError("alpha or beta not positive at this lag (lag below double resolution)");
  return L;
}

double short_lag(const Kernel& k) { return 0.1 * k.tau_curvature(); }

Lag<double> standard_params(const Kernel& k, double u, double t) {
  if (!(t > 0)) throw DomainError("lag must be positive");
  if (k.has_extended() && t < short_lag(k)) {
    const Derivatives<quad> d0 = k.eval_extended(0);
    const Derivatives<quad> d = k.eval_extended(t);
    const Lag<quad> L = lag_params<quad>(d0.r, d0.q, d.r, d.p, d.q, u);
    return {double(L.alpha), double(L.beta), double(L.gamma), double(L.delta), double(L.det), double(L.gap)};
  }
  const KernelDerivatives d = k.eval(t);
  return lag_params<double>(k.r0(), k.q0(), d.r, d.p, d.q, u);
}

// Bracket of the two-crossing density with the independent product term removed.
template <class R> R closed_form(const Lag<R>& L, R u, R r0, R q0, bool total) {
  const R a = L.alpha, b = L.beta, g = L.gamma;
  const R apb = a + b;
  const R sab = xp::sqrt(a * b);
  const R du2 = L.delta * u * u;
  R term1 = xp::exp(-du2 - a * g * g) / (2 * sab);
  if (g != 0)
    term1 += xp::exp(-du2 - a * b * g * g / apb) * sqrt_pi<R>() * g * xp::sqrt(apb) / (2 * sab) *
             xp::erf(a * g / xp::sqrt(apb));
  const R h = g * xp::sqrt(2 * a * b / apb);
  const R ot = owens_t(h, xp::sqrt(a / b));
  const R coef = pi<R>() * (a - b - 2 * a * b * g * g) / (a * b) * xp::exp(-du2);
  const R four_pi2 = 4 * pi<R>() * pi<R>();
  const R lead = total ? 4 * (term1 + coef * (ot - R(1) / 8)) : term1 + coef * ot;
  const R product = (total ? 4 : 1) * q0 / r0 * xp::exp(-u * u / r0);
  return (lead / xp::sqrt(L.gap) - product) / four_pi2;
}

double integrand_standard(const Kernel& k, double u, double t, bool total) {
  return closed_form<double>(standard_params(k, u, t), u, k.r0(), k.q0(), total);
}

double integrand_extended(const Kernel& k, double u, double t, bool total) {
  if (!k.has_extended()) return integrand_standard(k, u, t, total);
  const Derivatives<quad> d0 = k.eval_extended(0);
  const Derivatives<quad> d = k.eval_extended(t);
  const Lag<quad> L = lag_params<quad>(d0.r, d0.q, d.r, d.p, d.q, u);
  return double(closed_form<quad>(L, u, d0.r, d0.q, total));
}

double integrand_at(const Kernel& k, double u, double t, bool total, Precision prec) {
  if (!(t > 0)) throw DomainError("lag must be positive");
  switch (prec) {
    case Precision::Standard: return integrand_standard(k, u, t, total);
    case Precision::Extended: return integrand_extended(k, u, t, total);
    case Precision::Automatic: {
      const double v = integrand_standard(k, u, t, total);
      const double product = (total ? 4 : 1) * k.q0() / k.r0() * std::exp(-u * u / k.r0());
      if (std::abs(v) < 1e-6 * product) return integrand_extended(k, u, t, total);
      return v;
    }
  }
  return 0.0;
}

// Beyond a few correlation times the integrand is a small difference of O(1) terms; the
// map Jacobian of the infinite tail amplifies its roundoff, so switch to the wide evaluation.
double lag_integrand(const Kernel& k, double u, double t, bool total) {
  return integrand_at(k, u, t, total, t > 4 * k.tau_slow() ? Precision::Automatic : Precision::Standard);
}

bool is_total(CrossingMode m) { return m == CrossingMode::Total; }

struct LagIntegral {
  double value = 0, error = 0;
  long evaluations = 0;
  bool converged = false;
};

// f integrated over (0, hi] (hi = +inf for the asymptotic case); the first panel [0, t_min] uses a two-level
// midpoint rule, since the integrand there is computed from ill-conditioned near-origin moments.
LagIntegral lag_integral(const Kernel& k, const std::function<double(double)>& f, double hi, double natural,
                         const QuadratureSpec& spec_in) {
  QuadratureSpec spec = spec_in;
  spec.abs_tol = spec_in.abs_tol * natural;
  double t0 = lag_floor(k);
  if (std::isfinite(hi) && t0 > hi / 2) t0 = hi / 2;
  QuadratureResult body = std::isfinite(hi) ? integrate_finite(f, t0, hi, spec) : integrate_semi_infinite(f, t0, spec);
  const double m1 = t0 * f(t0 / 2);
  const double m2 = 0.5 * t0 * (f(t0 / 4) + f(3 * t0 / 4));
  LagIntegral out;
  out.value = body.value + m2;
  out.error = body.error + std::abs(m2 - m1) + 1e-15 * std::abs(m2);
  out.evaluations = body.evaluations + 3;
  out.converged = body.converged && out.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(out.value));
  return out;
}

template <class R> R zero_form(const Lag<R>& L, R r0, R q0, bool total) {
  const R a = L.alpha, b = L.beta;
  const R ratio = xp::sqrt(a / b);
  const R p2 = pi<R>() * pi<R>();
  if (total) {
    const R bracket = 1 / xp::sqrt(a * b) + (a - b) / (a * b) * xp::atan((ratio - 1) / (ratio + 1));
    return bracket / (2 * p2 * xp::sqrt(L.gap)) - q0 / (p2 * r0);
  }
  const R bracket = 1 / xp::sqrt(a * b) + (a - b) / (a * b) * xp::atan(ratio);
  return bracket / (8 * p2 * xp::sqrt(L.gap)) - q0 / (4 * p2 * r0);
}

double zero_level_at(const Kernel& k, double t, bool total) {
  if (k.has_extended() && t > 4 * k.tau_slow()) {
    const Derivatives<quad> d0 = k.eval_extended(0);
    const Derivatives<quad> d = k.eval_extended(t);
    return double(zero_form<quad>(lag_params<quad>(d0.r, d0.q, d.r, d.p, d.q, quad(0)), d0.r, d0.q, total));
  }
  return zero_form<double>(standard_params(k, 0.0, t), k.r0(), k.q0(), total);
}

void require_finite_ok(const Kernel& k) {
  ValidityReport rep = check_validity(k);
  for (const char* n : {"variance positive", "curvature positive", "even at origin", "bounded by variance", "geman"})
    if (!rep.passes(n)) throw ValidityError("kernel fails validity check '" + std::string(n) + "':\n" + rep.summary());
}

void require_asymptotic_ok(const Kernel& k) {
  ValidityReport rep = check_validity(k);
  if (!rep.asymptotic_ok()) throw ValidityError("kernel fails the long-time validity checks:\n" + rep.summary());
}

// Integral scale: (mean up-rate)^2 * tau_slow.
double natural_scale(const Kernel& k, double u) {
  const double m = mean_rate(k, u, CrossingMode::Up);
  return m * m * k.tau_slow();
}

CrossingStats finish_finite(const Kernel& k, double u, double horizon, CrossingMode mode, const LagIntegral& J) {
  CrossingStats s;
  s.mode = mode;
  s.u = u;
  s.asymptotic = false;
  s.horizon = horizon;
  s.mean = mean_count(k, u, horizon, mode);
  s.integral = J.value;
  s.integral_error = J.error;
  s.evaluations = J.evaluations;
  s.converged = J.converged;
  s.fano = std::numeric_limits<double>::quiet_NaN();
  const double raw = s.mean + 2 * horizon * J.value;
  const double err = 2 * horizon * J.error;
  s.variance = raw;
  if (raw < 0) {
    if (raw < -10 * err) {
      std::ostringstream os;
      os.precision(17);
      os << "variance " << raw << " is negative beyond ten times its error estimate " << err;
      throw NegativeVarianceError(os.str());
    }
    s.variance = 0;
    s.clamped = true;
    s.diagnostic = "negative variance within roundoff clamped to zero";
  }
  if (!s.converged) s.diagnostic += (s.diagnostic.empty() ? "" : "; ") + std::string("lag quadrature did not converge");
  return s;
}

}  // namespace

std::string mode_name(CrossingMode m) {
  switch (m) {
    case CrossingMode::Up: return "up";
    case CrossingMode::Down: return "down";
    case CrossingMode::Total: return "total";
  }
  return "?";
}

CrossingMode parse_mode(const std::string& s) {
  if (s == "up") return CrossingMode::Up;
  if (s == "down") return CrossingMode::Down;
  if (s == "total") return CrossingMode::Total;
  throw ParameterError("unknown crossing mode '" + s + "' (expected up|down|total)");
}

CrossingParams abg_params(const Kernel& k, double u, double t) {
  const Lag<double> L = standard_params(k, u, t);
  return {L.alpha, L.beta, L.gamma, L.delta, L.det, L.gap, t, u};
}

CrossingParams abg_from_moments(double r0, double q0, double r, double p, double q, double u) {
  const Lag<double> L = lag_params<double>(r0, q0, r, p, q, u);
  return {L.alpha, L.beta, L.gamma, L.delta, L.det, L.gap, std::numeric_limits<double>::quiet_NaN(), u};
}

double mean_rate(const Kernel& k, double u, CrossingMode mode) {
  const double up = std::sqrt(k.q0() / k.r0()) * std::exp(-u * u / (2 * k.r0())) / (2 * std::numbers::pi);
  return is_total(mode) ? 2 * up : up;
}

double mean_count(const Kernel& k, double u, double horizon, CrossingMode mode) {
  if (!(horizon > 0)) throw DomainError("horizon must be positive");
  return horizon * mean_rate(k, u, mode);
}

double integrand_up(const Kernel& k, double u, double t, Precision prec) { return integrand_at(k, u, t, false, prec); }
double integrand_total(const Kernel& k, double u, double t, Precision prec) { return integrand_at(k, u, t, true, prec); }
double integrand(const Kernel& k, double u, double t, CrossingMode mode, Precision prec) {
  return integrand_at(k, u, t, is_total(mode), prec);
}

double zero_level_integrand_up(const Kernel& k, double t) {
  return zero_level_at(k, t, false);
}

double zero_level_integrand_total(const Kernel& k, double t) {
  return zero_level_at(k, t, true);
}

CanonicalIntegrals canonical_integrals(double alpha, double beta, double gamma) {
  if (!(alpha > 0) || !(beta > 0)) throw DomainError("canonical integrals need alpha > 0 and beta > 0");
  const double a = alpha, b = beta, g = gamma;
  const double apb = a + b, ab = a * b;
  const double pi = std::numbers::pi;
  double lead = std::exp(-a * g * g) / (2 * ab);
  if (g != 0)
    lead += std::exp(-a * b * g * g / apb) * std::sqrt(pi) * g * std::sqrt(apb) / (2 * ab) * std::erf(a * g / std::sqrt(apb));
  const double ot = owens_t(g * std::sqrt(2 * ab / apb), std::sqrt(a / b));
  const double coef = pi * (a - b - 2 * ab * g * g) / std::pow(ab, 1.5);
  return {lead + coef * ot, 4 * lead + 4 * coef * (ot - 0.125)};
}

QuadratureSpec default_quadrature(const Kernel& k) {
  QuadratureSpec s;
  s.time_scale = k.tau_slow();
  s.endpoint = EndpointPolicy::OpenLeft;
  s.tail = k.family() == Family::RationalQuadratic ? TailPolicy::AlgebraicMap : TailPolicy::ExponentialMap;
  return s;
}

double lag_floor(const Kernel& k) { return 1e-7 * k.tau_slow(); }

CrossingStats variance_count(const Kernel& k, double u, double horizon, CrossingMode mode,
                             std::optional<QuadratureSpec> spec) {
  if (!(horizon > 0)) throw DomainError("horizon must be positive");
  require_finite_ok(k);
  const QuadratureSpec qs = spec.value_or(default_quadrature(k));
  const bool total = is_total(mode);
  auto f = [&](double t) { return (1 - t / horizon) * lag_integrand(k, u, t, total); };
  const LagIntegral J = lag_integral(k, f, horizon, natural_scale(k, u), qs);
  return finish_finite(k, u, horizon, mode, J);
}

CrossingStats variance_rate_asymptotic(const Kernel& k, double u, CrossingMode mode, std::optional<QuadratureSpec> spec) {
  require_asymptotic_ok(k);
  const QuadratureSpec qs = spec.value_or(default_quadrature(k));
  const bool total = is_total(mode);
  auto f = [&](double t) { return lag_integrand(k, u, t, total); };
  const LagIntegral J = lag_integral(k, f, std::numeric_limits<double>::infinity(), natural_scale(k, u), qs);
  CrossingStats s;
  s.mode = mode;
  s.u = u;
  s.asymptotic = true;
  s.horizon = std::numeric_limits<double>::infinity();
  s.mean = mean_rate(k, u, mode);
  s.variance = s.mean + 2 * J.value;
  const double weight = (total ? 2 : 4) * std::numbers::pi * std::sqrt(k.r0() / k.q0()) * std::exp(u * u / (2 * k.r0()));
  s.fano = 1 + weight * J.value;
  s.integral = J.value;
  s.integral_error = J.error;
  s.evaluations = J.evaluations;
  s.converged = J.converged;
  if (s.variance < 0) {
    if (s.variance < -10 * 2 * J.error) throw NegativeVarianceError("negative asymptotic variance rate");
    s.variance = 0;
    s.fano = 0;
    s.clamped = true;
    s.diagnostic = "negative variance within roundoff clamped to zero";
  }
  if (!s.converged) s.diagnostic += (s.diagnostic.empty() ? "" : "; ") + std::string("lag quadrature did not converge");
  return s;
}

double fano(const Kernel& k, double u, CrossingMode mode, std::optional<QuadratureSpec> spec) {
  const CrossingStats s = variance_rate_asymptotic(k, u, mode, spec);
  if (!s.converged) throw ConvergenceError("Fano factor quadrature did not converge");
  return s.fano;
}

CrossingStats zero_level_stats(const Kernel& k, std::optional<double> horizon, CrossingMode mode,
                               std::optional<QuadratureSpec> spec) {
  const QuadratureSpec qs = spec.value_or(default_quadrature(k));
  const bool total = is_total(mode);
  auto base = [&](double t) { return total ? zero_level_integrand_total(k, t) : zero_level_integrand_up(k, t); };
  const double natural = natural_scale(k, 0.0);
  if (horizon) {
    if (!(*horizon > 0)) throw DomainError("horizon must be positive");
    require_finite_ok(k);
    const double T = *horizon;
    auto f = [&](double t) { return (1 - t / T) * base(t); };
    return finish_finite(k, 0.0, T, mode, lag_integral(k, f, T, natural, qs));
  }
  require_asymptotic_ok(k);
  const LagIntegral J = lag_integral(k, base, std::numeric_limits<double>::infinity(), natural, qs);
  CrossingStats s;
  s.mode = mode;
  s.asymptotic = true;
  s.horizon = std::numeric_limits<double>::infinity();
  // Level-zero mean rate sqrt(q0/r0)/(2 pi), doubled for total crossings.
  s.mean = (total ? 2 : 1) * std::sqrt(k.q0() / k.r0()) / (2 * std::numbers::pi);
  s.variance = s.mean + 2 * J.value;
  s.fano = 1 + (total ? 2 : 4) * std::numbers::pi * std::sqrt(k.r0() / k.q0()) * J.value;
  s.integral = J.value;
  s.integral_error = J.error;
  s.evaluations = J.evaluations;
  s.converged = J.converged;
  return s;
}

DimensionlessView dimensionless_view(const Kernel& k, double u) { return {u / k.amplitude(), k.shape()}; }

double dimensionless_fano(const ShapeParams& shape, double psi, CrossingMode mode, std::optional<QuadratureSpec> spec) {
  const Kernel k = make_from_shape(shape, 1.0, 1.0);
  return fano(k, psi, mode, spec);
}

}  // namespace lcx
