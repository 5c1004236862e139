#include "levelcross/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levelcross/errors.hpp"
#include "levelcross/quadrature.hpp"

namespace lcx {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << v << ")";
    throw ParameterError(os.str());
  }
}

// e^{-a t} cos(nu t) and e^{-a t} sin(nu t)/nu with nu^2 = omega0^2 (1 - zeta^2) of either sign.
// Near nu^2 t^2 = 0 a power series keeps the critically damped case and its neighbourhood exact.
template <class R> void damped_pair(R omega0, R zeta, R t, R& ec, R& es) {
  const R a = zeta * omega0;
  const R nu2 = omega0 * omega0 * (1 - zeta * zeta);
  const R x = nu2 * t * t;
  if (xp::abs(x) < R(0.25)) {
    R c = 1, s = 1, term_c = 1, term_s = 1;
    for (int k = 1; k < 40; ++k) {
      term_c *= -x / R((2 * k - 1) * (2 * k));
      term_s *= -x / R((2 * k) * (2 * k + 1));
      c += term_c;
      s += term_s;
      if (xp::abs(term_c) < epsilon<R>() * R(1e-3)) break;
    }
    const R e = xp::exp(-a * t);
    ec = e * c;
    es = e * s * t;
  } else if (nu2 > 0) {
    const R nu = xp::sqrt(nu2);
    const R e = xp::exp(-a * t);
    ec = e * xp::cos(nu * t);
    es = e * xp::sin(nu * t) / nu;
  } else {
    const R mu = xp::sqrt(-nu2);
    const R l2 = a + mu;
    const R l1 = omega0 * omega0 / l2;
    const R e1 = xp::exp(-l1 * t);
    const R e2 = xp::exp(-l2 * t);
    ec = (e1 + e2) / 2;
    es = (e1 - e2) / (2 * mu);
  }
}

template <class R> Derivatives<R> eval_sdho(const SdhoParams& k, R t) {
  const R w = k.omega0, z = k.zeta, th = k.theta;
  const R a = z * w;
  R ec, es;
  damped_pair<R>(w, z, t, ec, es);
  Derivatives<R> d;
  d.t = t;
  const R nu2 = w * w * (1 - z * z);
  if (nu2 < 0 && xp::abs(nu2 * t * t) >= R(0.25)) {
    // Two-exponential form avoids cancelling e1 terms in r and q.
    const R mu = xp::sqrt(-nu2);
    const R l2 = a + mu;
    const R l1 = w * w / l2;
    const R e1 = xp::exp(-l1 * t);
    const R e2 = xp::exp(-l2 * t);
    d.r = th / (w * w) * (l2 * e1 - l1 * e2) / (2 * mu);
    d.q = th * (l2 * e2 - l1 * e1) / (2 * mu);
  } else {
    d.r = th / (w * w) * (ec + a * es);
    d.q = th * (ec - a * es);
  }
  d.p = -th * es;
  return d;
}

template <class R> Derivatives<R> eval_ou(const OuParams& k, R t) {
  const R sigma2 = R(k.sigma) * R(k.sigma);
  const R te = k.tau_e;
  const R kappa = R(k.tau_f) / te;
  const R eps = kappa - 1;
  const R s = t / te;
  Derivatives<R> d;
  d.t = t;
  if (xp::abs(eps) < R(kOuUnitGuard)) {
    // Second order in (kappa - 1) about the repeated-root limit.
    const R b = sigma2 * (1 + eps) / (2 + eps);
    const R c2 = eps / 2 - eps * eps / 2;
    const R c3 = eps * eps / 6;
    const R e = xp::exp(-s);
    const R poly = 1 + s + c2 * s * s + c3 * s * s * s;
    const R d1 = (2 * c2 - 1) * s + (3 * c3 - c2) * s * s - c3 * s * s * s;
    const R d2 = (2 * c2 - 1) + (1 - 4 * c2 + 6 * c3) * s + (c2 - 6 * c3) * s * s + c3 * s * s * s;
    d.r = b * e * poly;
    d.p = b * e * d1 / te;
    d.q = -b * e * d2 / (te * te);
    return d;
  }
  // dd = e^{-s} - e^{-s/kappa}, evaluated without cancellation for small s*|kappa-1|.
  const R ee = xp::exp(-s);
  const R ef = xp::exp(-s / kappa);
  const R z = s * eps / kappa;
  const R dd = xp::abs(z) < 1 ? -ee * xp::expm1(z) : ee - ef;
  const R ratio = dd / (1 - kappa);
  d.r = sigma2 * kappa / (1 + kappa) * (ef + ratio);
  d.p = -sigma2 * kappa / (1 + kappa) * ratio / te;
  d.q = sigma2 / (1 + kappa) * (ef - kappa * ratio) / (te * te);
  return d;
}

template <class R> Derivatives<R> eval_rq(const RqParams& k, R t) {
  const R sigma2 = R(k.sigma) * R(k.sigma);
  const R tau = k.tau, alpha = k.alpha;
  const R x = t * t / (2 * alpha * tau * tau);
  const R base = xp::exp(-alpha * xp::log1p(x));
  Derivatives<R> d;
  d.t = t;
  d.r = sigma2 * base;
  d.p = -sigma2 * t / (tau * tau) * base / (1 + x);
  d.q = sigma2 / (tau * tau) * base / ((1 + x) * (1 + x)) * (1 - (2 * alpha + 1) * x);
  return d;
}

template <class R> Derivatives<R> eval_se(const SeParams& k, R t) {
  const R sigma2 = R(k.sigma) * R(k.sigma);
  const R tau = k.tau;
  const R g = xp::exp(-t * t / (2 * tau * tau));
  Derivatives<R> d;
  d.t = t;
  d.r = sigma2 * g;
  d.p = -sigma2 * t / (tau * tau) * g;
  d.q = sigma2 / (tau * tau) * (1 - t * t / (tau * tau)) * g;
  return d;
}

template <class R> Derivatives<R> eval_any(const KernelParams& params, R t) {
  return std::visit(overloaded{
                        [&](const SdhoParams& k) { return eval_sdho<R>(k, t); },
                        [&](const OuParams& k) { return eval_ou<R>(k, t); },
                        [&](const RqParams& k) { return eval_rq<R>(k, t); },
                        [&](const SeParams& k) { return eval_se<R>(k, t); },
                        [&](const CustomParams& k) {
                          KernelDerivatives v = k.eval(static_cast<double>(t));
                          return Derivatives<R>{R(v.r), R(v.p), R(v.q), t};
                        },
                    },
                    params);
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::Sdho: return "sdho";
    case Family::OuMeanRevert: return "ou";
    case Family::RationalQuadratic: return "rq";
    case Family::SquaredExponential: return "se";
    case Family::Custom: return "custom";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "sdho") return Family::Sdho;
  if (name == "ou") return Family::OuMeanRevert;
  if (name == "rq") return Family::RationalQuadratic;
  if (name == "se") return Family::SquaredExponential;
  throw ParameterError("unknown kernel family '" + name + "' (expected sdho|ou|rq|se)");
}

Kernel::Kernel(KernelParams params) : params_(std::move(params)) {
  std::visit(overloaded{
                 [&](const SdhoParams& k) {
                   family_ = Family::Sdho;
                   if (k.zeta > 1) {
                     const double root = std::sqrt(k.zeta * k.zeta - 1);
                     tau_slow_ = (k.zeta + root) / k.omega0;  // 1/(omega0 (zeta - root))
                     tau_fast_ = 1.0 / (k.omega0 * (k.zeta + root));
                   } else {
                     tau_slow_ = 1.0 / (k.zeta * k.omega0);
                     tau_fast_ = 1.0 / k.omega0;
                   }
                 },
                 [&](const OuParams& k) {
                   family_ = Family::OuMeanRevert;
                   tau_slow_ = std::max(k.tau_f, k.tau_e);
                   tau_fast_ = std::min(k.tau_f, k.tau_e);
                 },
                 [&](const RqParams& k) {
                   family_ = Family::RationalQuadratic;
                   tau_slow_ = tau_fast_ = k.tau;
                 },
                 [&](const SeParams& k) {
                   family_ = Family::SquaredExponential;
                   tau_slow_ = tau_fast_ = k.tau;
                 },
                 [&](const CustomParams& k) {
                   family_ = Family::Custom;
                   tau_slow_ = tau_fast_ = k.tau_slow;
                 },
             },
             params_);
  KernelDerivatives d0 = eval(0.0);
  r0_ = d0.r;
  q0_ = d0.q;
}

KernelDerivatives Kernel::eval(double t) const {
  if (!(t >= 0)) throw DomainError("kernel lag must be non-negative");
  return eval_any<double>(params_, t);
}

Derivatives<quad> Kernel::eval_extended(quad t) const {
  if (!(t >= 0)) throw DomainError("kernel lag must be non-negative");
  return eval_any<quad>(params_, t);
}

double Kernel::amplitude() const {
  return std::visit(overloaded{
                        [](const SdhoParams& k) { return std::sqrt(k.theta) / k.omega0; },
                        [](const OuParams& k) { return k.sigma; },
                        [](const RqParams& k) { return k.sigma; },
                        [](const SeParams& k) { return k.sigma; },
                        [this](const CustomParams&) { return std::sqrt(r0_); },
                    },
                    params_);
}

double Kernel::timescale() const {
  return std::visit(overloaded{
                        [](const SdhoParams& k) { return 1.0 / k.omega0; },
                        [](const OuParams& k) { return k.tau_e; },
                        [](const RqParams& k) { return k.tau; },
                        [](const SeParams& k) { return k.tau; },
                        [](const CustomParams& k) { return k.tau_slow; },
                    },
                    params_);
}

ShapeParams Kernel::shape() const {
  return std::visit(overloaded{
                        [](const SdhoParams& k) { return ShapeParams{Family::Sdho, {k.zeta}}; },
                        [](const OuParams& k) { return ShapeParams{Family::OuMeanRevert, {k.tau_f / k.tau_e}}; },
                        [](const RqParams& k) { return ShapeParams{Family::RationalQuadratic, {k.alpha}}; },
                        [](const SeParams&) { return ShapeParams{Family::SquaredExponential, {}}; },
                        [](const CustomParams&) -> ShapeParams {
                          throw ParameterError("custom kernels have no shape parametrisation");
                        },
                    },
                    params_);
}

std::string Kernel::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const SdhoParams& k) { os << "sdho(omega0=" << k.omega0 << ", zeta=" << k.zeta << ", theta=" << k.theta << ")"; },
                 [&](const OuParams& k) { os << "ou(sigma=" << k.sigma << ", tau_f=" << k.tau_f << ", tau_e=" << k.tau_e << ")"; },
                 [&](const RqParams& k) { os << "rq(sigma=" << k.sigma << ", tau=" << k.tau << ", alpha=" << k.alpha << ")"; },
                 [&](const SeParams& k) { os << "se(sigma=" << k.sigma << ", tau=" << k.tau << ")"; },
                 [&](const CustomParams& k) { os << "custom(" << k.name << ")"; },
             },
             params_);
  return os.str();
}

Kernel make_sdho(double omega0, double zeta, double theta) {
  require_positive(omega0, "omega0");
  require_positive(theta, "theta");
  if (!(zeta > 0) || !std::isfinite(zeta))
    throw ParameterError("zeta must be positive; zeta = 0 is an undamped oscillator whose correlations never decay");
  return Kernel(SdhoParams{omega0, zeta, theta});
}

Kernel make_ou_mean_revert(double sigma, double tau_f, double tau_e, bool taylor_fallback) {
  require_positive(sigma, "sigma");
  require_positive(tau_f, "tau_f");
  require_positive(tau_e, "tau_e");
  if (!taylor_fallback && std::abs(tau_f / tau_e - 1) < kOuUnitGuard)
    throw SingularParameterError("tau_f/tau_e is within the unit-ratio guard and the series fallback is disabled");
  return Kernel(OuParams{sigma, tau_f, tau_e});
}

Kernel make_rational_quadratic(double sigma, double tau, double alpha) {
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  require_positive(alpha, "alpha");
  return Kernel(RqParams{sigma, tau, alpha});
}

Kernel make_squared_exponential(double sigma, double tau) {
  require_positive(sigma, "sigma");
  require_positive(tau, "tau");
  return Kernel(SeParams{sigma, tau});
}

Kernel make_custom(std::string name, std::function<KernelDerivatives(double)> eval, double tau_slow) {
  require_positive(tau_slow, "tau_slow");
  if (!eval) throw ParameterError("custom kernel needs an evaluator");
  return Kernel(CustomParams{std::move(name), std::move(eval), tau_slow});
}

Kernel make_from_shape(const ShapeParams& shape, double amplitude, double timescale) {
  auto need = [&](std::size_t n) {
    if (shape.values.size() != n) throw ParameterError("wrong number of shape parameters for " + family_name(shape.family));
  };
  switch (shape.family) {
    case Family::Sdho:
      need(1);
      // r0 = theta/omega0^2 = amplitude^2, omega0 = 1/timescale
      return make_sdho(1.0 / timescale, shape.values[0], amplitude * amplitude / (timescale * timescale));
    case Family::OuMeanRevert:
      need(1);
      return make_ou_mean_revert(amplitude, shape.values[0] * timescale, timescale);
    case Family::RationalQuadratic:
      need(1);
      return make_rational_quadratic(amplitude, timescale, shape.values[0]);
    case Family::SquaredExponential:
      need(0);
      return make_squared_exponential(amplitude, timescale);
    case Family::Custom:
      break;
  }
  throw ParameterError("custom kernels have no shape parametrisation");
}

SdhoParams map_ou_to_sdho(const OuParams& ou) {
  // Decay rates 1/tau_e and 1/tau_f are the roots omega0 (zeta -+ sqrt(zeta^2 - 1)).
  const double le = 1.0 / ou.tau_e, lf = 1.0 / ou.tau_f;
  const double omega0 = std::sqrt(le * lf);
  const double zeta = (le + lf) / (2.0 * omega0);
  const double kappa = ou.tau_f / ou.tau_e;
  const double r0 = ou.sigma * ou.sigma * kappa / (1.0 + kappa);
  return {omega0, zeta, r0 * omega0 * omega0};
}

// ---- validity ---------------------------------------------------------------

bool ValidityReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidityCheck& c) { return c.pass; });
}

const ValidityCheck* ValidityReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

bool ValidityReport::passes(const std::string& name) const {
  const ValidityCheck* c = find(name);
  return c != nullptr && c->pass;
}

bool ValidityReport::asymptotic_ok() const {
  for (const char* n : {"variance positive", "curvature positive", "even at origin", "bounded by variance", "decays",
                        "geman", "tail integrable"})
    if (!passes(n)) return false;
  return true;
}

std::string ValidityReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) os << (c.pass ? "pass " : "FAIL ") << c.name << ": " << c.detail << "\n";
  return os.str();
}

std::vector<double> validity_grid(const Kernel& k, int points, double lo, double hi) {
  std::vector<double> g(points);
  const double a = std::log(lo * k.tau_slow()), b = std::log(hi * k.tau_slow());
  for (int i = 0; i < points; ++i) g[i] = std::exp(a + (b - a) * i / (points - 1));
  return g;
}

namespace {

// Integral of f over [t0, t1] in the variable log t, one panel per decade.
std::vector<double> decade_integrals(const std::function<double(double)>& f, double t0, double t1) {
  std::vector<double> out;
  QuadratureSpec spec;
  spec.rel_tol = 1e-8;
  spec.abs_tol = 1e-300;
  spec.max_subdivisions = 200;
  for (double lo = std::log(t0); lo < std::log(t1) - 1e-12; lo += std::log(10.0)) {
    const double hi = std::min(lo + std::log(10.0), std::log(t1));
    auto g = [&](double v) {
      const double t = std::exp(v);
      return f(t) * t;
    };
    out.push_back(integrate_finite(g, lo, hi, spec).value);
  }
  return out;
}

}  // namespace

ValidityReport check_validity(const Kernel& k, const std::vector<double>& grid, double eps) {
  ValidityReport rep;
  std::ostringstream os;
  os.precision(6);
  auto fmt = [&](double v) {
    os.str("");
    os << v;
    return os.str();
  };

  const double r0 = k.r0(), q0 = k.q0();
  rep.checks.push_back({"variance positive", r0 > 0, r0, "r0 = " + fmt(r0)});
  rep.checks.push_back({"curvature positive", q0 > 0, q0, "q0 = " + fmt(q0)});
  const bool moments_ok = r0 > 0 && q0 > 0;

  const bool covers = !grid.empty() && grid.front() > 0 && grid.back() >= 10 * k.tau_slow() * (1 - 1e-12);
  rep.checks.push_back({"grid coverage", covers, grid.empty() ? 0.0 : grid.back(),
                        "grid must span (0, 10 tau_slow]"});

  if (moments_ok) {
    KernelDerivatives d0 = k.eval(0.0);
    const double scale = std::sqrt(r0 * q0);
    const double dev = std::max({std::abs(d0.p) / scale, std::abs(d0.r - r0) / r0, std::abs(d0.q - q0) / q0});
    // Symmetric difference at the smallest lag must vanish with the lag.
    double slope_dev = 0;
    if (!grid.empty()) {
      const double t = grid.front();
      const double ratio = k.eval(t).p / (-q0 * t);
      slope_dev = std::abs(ratio - 1);
    }
    const bool ok = dev <= 1e-10 && slope_dev <= 1e-3;
    rep.checks.push_back({"even at origin", ok, std::max(dev, slope_dev),
                          "|r'(0)|, r(0)-r0, -r''(0)-q0 deviation " + fmt(dev) + ", slope ratio deviation " + fmt(slope_dev)});
  }

  if (!moments_ok) rep.checks.push_back({"even at origin", false, 0.0, "needs r0 > 0 and q0 > 0"});

  if (r0 > 0) {
    double worst = 0;
    double at = 0;
    for (double t : grid) {
      const double v = std::abs(k.eval(t).r) / r0;
      if (v >= worst) {
        worst = v;
        at = t;
      }
    }
    rep.checks.push_back({"bounded by variance", worst < 1.0, worst, "max |r|/r0 = " + fmt(worst) + " at t = " + fmt(at)});
  }

  if (r0 > 0) {
    const double ts = k.tau_slow();
    const double v10 = std::abs(k.eval(10 * ts).r) / r0;
    bool ok = v10 < 1e-3;
    std::string detail = "|r(10 tau_slow)|/r0 = " + fmt(v10);
    if (!ok) {
      // Algebraic tails: require a decreasing envelope that falls below 1e-3 r0 within 1e6 tau_slow.
      double prev = v10;
      bool decreasing = true;
      double last = v10;
      for (double m = 100; m <= 1e6; m *= 10) {
        double env = 0;
        for (double f = 1; f < 10; f += 0.5) env = std::max(env, std::abs(k.eval(m * f * ts / 10).r) / r0);
        if (env > prev * (1 + 1e-12)) decreasing = false;
        prev = env;
        last = env;
      }
      ok = decreasing && last < 1e-3;
      detail += "; envelope at 1e6 tau_slow = " + fmt(last);
    }
    rep.checks.push_back({"decays", ok, v10, detail});
  }

  if (!moments_ok) {
    rep.checks.push_back({"geman", false, 0.0, "needs r0 > 0 and q0 > 0"});
  } else {
    // int_0^eps (r''(t) - r''(0))/t dt = int_0^eps (q0 - q(t))/t dt
    const bool ext = k.has_extended();
    const quad q0x = ext ? k.eval_extended(0).q : quad(q0);
    auto g = [&](double t) {
      if (ext) return static_cast<double>((q0x - k.eval_extended(t).q) / t);
      return (q0 - k.eval(t).q) / t;
    };
    std::vector<double> dec = decade_integrals(g, eps * 1e-12, eps);
    double total = 0, inner = 0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      total += dec[i];
      if (i < 3) inner += dec[i];
    }
    const bool ok = std::isfinite(total) && std::abs(inner) <= 1e-3 * std::max(std::abs(total), 1e-300);
    rep.checks.push_back({"geman", ok, total,
                          "integral " + fmt(total) + ", innermost three decades " + fmt(inner) + (ok ? " (finite)" : " (infinite)")});
  }

  auto tail_check = [&](const std::string& name, bool weighted) {
    const double ts = k.tau_slow();
    auto g = [&](double t) {
      KernelDerivatives d = k.eval(t);
      const double v = std::abs(d.r) + std::abs(d.p) + std::abs(d.q);
      return weighted ? t * v : v;
    };
    std::vector<double> dec = decade_integrals(g, 1e-6 * ts, 1e6 * ts);
    double total = 0;
    for (double v : dec) total += v;
    // Finite when the outermost decades are negligible, or shrink geometrically (power law steeper than 1/t).
    const double last = dec[dec.size() - 1], prev = dec[dec.size() - 2];
    const bool negligible = last + prev <= 1e-12 * total;
    const double ratio = prev > 0 ? last / prev : 0.0;
    const bool ok = std::isfinite(total) && (negligible || (ratio < 0.8 && last <= 0.1 * total));
    rep.checks.push_back({name, ok, total,
                          "integral to 1e6 tau_slow " + fmt(total) + ", last/previous decade ratio " + fmt(ratio) +
                              (ok ? " (finite)" : " (infinite)")});
  };
  tail_check("tail integrable", false);
  tail_check("piterbarg", true);
  return rep;
}

ValidityReport check_validity(const Kernel& k) { return check_validity(k, validity_grid(k), k.tau_slow()); }

}  // namespace lcx
