// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.
// Optional arguments select criteria by number, e.g. `acceptance 1 7`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "levelcross/crossings.hpp"
#include "levelcross/kernels.hpp"
#include "levelcross/montecarlo.hpp"
#include "levelcross/quadrature.hpp"
#include "levelcross/special.hpp"

using namespace lcx;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. Canonical Gaussian integrals: closed forms vs 2D adaptive quadrature.
Outcome theorem_integrals() {
  constexpr int kDraws = 200;
  constexpr double kTol = 1e-9, kSeconds = 60;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pos(0.1, 10.0), sym(-3.0, 3.0);
  double worst = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double a = pos(rng), b = pos(rng), g = sym(rng);
    const auto c = canonical_integrals(a, b, g);
    const auto n = bruteforce_theorem_integrals(a, b, g);
    worst = std::max({worst, rel(n.up, c.up), rel(n.total, c.total)});
  }
  const double s = seconds_since(t0);
  return {worst <= kTol && s < kSeconds,
          fmt("%d draws, worst rel %.2e (tol %.0e), %.1f s (limit %.0f s)", kDraws, worst, kTol, s, kSeconds)};
}

// 2. Closed-form integrands vs brute-force integration over velocities.
Outcome brute_force_integrands() {
  constexpr double kTol = 1e-7, kFloor = 1e-12, kSeconds = 300;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Kernel> kernels{make_sdho(1, 0.5, 1),          make_sdho(1, 1, 1),
                                    make_sdho(1, 2, 1),            make_ou_mean_revert(1, 3, 30),
                                    make_squared_exponential(1, 1), make_rational_quadratic(1, 1, 0.75)};
  double worst = 0;
  int cases = 0;
  std::string where;
  for (const auto& k : kernels)
    for (double lag : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
      for (double level : {0.0, 0.5, 1.5}) {
        const double t = lag * k.tau_slow(), u = level * std::sqrt(k.r0());
        for (auto mode : {CrossingMode::Up, CrossingMode::Total}) {
          const double closed = integrand(k, u, t, mode);
          const auto brute = bruteforce_integrand(k, u, t, mode);
          const double score = std::abs(closed - brute.value) / (kTol * std::max(std::abs(closed), kFloor));
          ++cases;
          if (score > worst) {
            worst = score;
            where = k.describe() + fmt(" t=%g u=%g %s", t, u, mode_name(mode).c_str());
          }
        }
      }
  const double s = seconds_since(t0);
  return {worst <= 1.0 && s < kSeconds,
          fmt("%d cases, worst |diff| / (1e-7 max(|I|, 1e-12)) = %.2e at %s, %.1f s (limit %.0f s)", cases, worst,
              where.c_str(), s, kSeconds)};
}

// 3. General path at u = 0 vs the dedicated zero-level forms.
Outcome zero_level() {
  constexpr double kTol = 1e-10;
  const std::vector<Kernel> kernels{make_sdho(1, 0.5, 1),          make_sdho(1, 1, 1),
                                    make_sdho(1, 2, 1),            make_ou_mean_revert(1, 3, 30),
                                    make_squared_exponential(1, 1), make_rational_quadratic(1, 1, 0.75)};
  double worst = 0;
  for (const auto& k : kernels)
    for (auto mode : {CrossingMode::Up, CrossingMode::Total}) {
      // both paths integrated well below the comparison tolerance
      QuadratureSpec q = default_quadrature(k);
      q.rel_tol = 1e-12;
      q.abs_tol = 1e-16;
      const auto g = variance_rate_asymptotic(k, 0.0, mode, q);
      const auto z = zero_level_stats(k, std::nullopt, mode, q);
      worst = std::max({worst, rel(g.mean, z.mean), rel(g.variance, z.variance), rel(g.fano, z.fano)});
    }
  return {worst <= kTol, fmt("6 kernels x 2 modes, worst rel %.2e over mean/variance rate/Fano (tol %.0e)", worst, kTol)};
}

// 4. Monte Carlo agreement for the oscillator.
Outcome monte_carlo() {
  constexpr double kMeanVarZ = 3, kFanoZ = 4, kSeconds = 600;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_mv = 0, worst_f = 0;
  std::string lines;
  bool coarse = false;
  for (double zeta : {0.5, 1.0, 2.0}) {
    const Kernel k = make_sdho(1, zeta, 1);
    SimConfig c(k);
    c.horizon = 120;
    c.dt = default_dt(k, 0.01);
    c.trials = 5000;
    c.seed = 3;
    c.mode = CrossingMode::Up;
    coarse = coarse || c.coarse_step();
    const std::vector<double> levels{0.0, 0.25, 0.5};
    const auto sims = estimate_stats_multi(c, levels);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto a = variance_count(k, levels[i], c.horizon, CrossingMode::Up);
      const auto& s = sims[i];
      const double zm = (s.mean - a.mean) / s.mean_se;
      const double zv = (s.variance - a.variance) / std::hypot(s.variance_se, 2 * c.horizon * a.integral_error);
      const double zf = (s.fano - a.variance / a.mean) / s.fano_se;
      worst_mv = std::max({worst_mv, std::abs(zm), std::abs(zv)});
      worst_f = std::max(worst_f, std::abs(zf));
      lines += fmt("\n    zeta=%.1f u=%.2f  z(mean)=%+.2f z(var)=%+.2f z(fano)=%+.2f", zeta, levels[i], zm, zv, zf);
    }
  }
  const double s = seconds_since(t0);
  return {worst_mv <= kMeanVarZ && worst_f <= kFanoZ && s < kSeconds,
          fmt("9 cells, worst |z| mean/variance %.2f (limit 3), Fano %.2f (limit 4), %.1f s (limit %.0f s)%s", worst_mv,
              worst_f, s, kSeconds, coarse ? ", zeta=2 step exceeds 0.05 tau_fast" : "") +
              lines};
}

// 5. Sign and structure claims.
Outcome structure() {
  std::string detail;
  bool a = true;
  for (double u : {0.0, 1.0, 2.0}) {
    const double m = mean_rate(make_sdho(1, 0.5, 1), u, CrossingMode::Up);
    for (double zeta : {0.25, 1.0, 2.0, 4.0}) a = a && mean_rate(make_sdho(1, zeta, 1), u, CrossingMode::Up) == m;
  }
  detail += fmt("(a) %s", a ? "mean rate identical across zeta" : "mean rate differs across zeta");

  bool b = true;
  for (double u : {0.0, 1.0}) {
    const double lo = fano(make_sdho(1, 0.5, 1), u, CrossingMode::Up), hi = fano(make_sdho(1, 2.5, 1), u, CrossingMode::Up);
    b = b && lo < 1 && hi > 1;
    detail += fmt("; (b) u=%g F(0.5)=%.4f F(2.5)=%.4f", u, lo, hi);
  }

  const auto rq = make_rational_quadratic(1, 1, 0.75);
  std::vector<double> f;
  for (int i = 0; i < 50; ++i) f.push_back(fano(rq, 4.0 * i / 49, CrossingMode::Up));
  std::size_t peak = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > f[peak]) peak = i;
  bool relaxing = peak + 1 < f.size();
  for (std::size_t i = peak + 1; i < f.size(); ++i) relaxing = relaxing && std::abs(f[i] - 1) < std::abs(f[i - 1] - 1);
  const bool c = f[peak] > 1 && relaxing;
  detail += fmt("; (c) max F=%.4f at psi=%.2f, F(4)=%.4f%s", f[peak], 4.0 * peak / 49, f.back(),
                relaxing ? " relaxing toward 1" : " not relaxing toward 1");

  int best = 0;
  double best_kappa = 0;
  for (int j = 0; j < 25; ++j) {
    const double kappa = 0.05 * std::pow(100.0, j / 24.0);
    const auto ou = make_ou_mean_revert(1, 3, 3 / kappa);
    int changes = 0;
    double prev = 0;
    for (int i = 0; i < 50; ++i) {
      const double d = fano(ou, 4.0 * i / 49 * ou.amplitude(), CrossingMode::Up) - 1;
      if (i > 0 && (d > 0) != (prev > 0)) ++changes;
      prev = d;
    }
    if (changes > best) {
      best = changes;
      best_kappa = kappa;
    }
  }
  const bool d = best >= 2;
  detail += fmt("; (d) most sign changes of F-1 along psi: %d at kappa=%.4g", best, best_kappa);
  // diagnostic only: the same grid read along kappa at fixed psi
  int across = 0;
  double across_psi = 0;
  for (int i = 0; i < 50; ++i) {
    const double psi = 4.0 * i / 49;
    int changes = 0;
    double prev = 0;
    for (int j = 0; j < 25; ++j) {
      const auto ou = make_ou_mean_revert(1, 3, 3 / (0.05 * std::pow(100.0, j / 24.0)));
      const double dd = fano(ou, psi * ou.amplitude(), CrossingMode::Up) - 1;
      if (j > 0 && (dd > 0) != (prev > 0)) ++changes;
      prev = dd;
    }
    if (changes > across) {
      across = changes;
      across_psi = psi;
    }
  }
  detail += fmt(" (along kappa at fixed psi: %d at psi=%.3g)", across, across_psi);
  return {a && b && c && d, detail};
}

// 6. Invariances.
Outcome invariances() {
  constexpr double kTau = 1e-8, kSign = 1e-10, kMap = 1e-8;
  double tau_dev = 0, scale_dev = 0, sign_dev = 0, map_dev = 0;
  for (double psi : {0.0, 0.5, 1.5, 3.0}) {
    const double rq1 = fano(make_rational_quadratic(1, 1, 0.75), psi, CrossingMode::Up);
    const double se1 = fano(make_squared_exponential(1, 1), psi, CrossingMode::Up);
    for (double tau : {0.5, 7.0}) {
      tau_dev = std::max(tau_dev, rel(fano(make_rational_quadratic(1, tau, 0.75), psi, CrossingMode::Up), rq1));
      tau_dev = std::max(tau_dev, rel(fano(make_squared_exponential(1, tau), psi, CrossingMode::Up), se1));
    }
    scale_dev = std::max(scale_dev, rel(fano(make_rational_quadratic(3, 1, 0.75), 3 * psi, CrossingMode::Up), rq1));
    scale_dev = std::max(scale_dev, rel(fano(make_squared_exponential(3, 1), 3 * psi, CrossingMode::Up), se1));
    scale_dev = std::max(scale_dev, rel(fano(make_sdho(1, 0.5, 9), 3 * psi, CrossingMode::Up), fano(make_sdho(1, 0.5, 1), psi, CrossingMode::Up)));
    const auto ou1 = make_ou_mean_revert(1, 3, 30), ou3 = make_ou_mean_revert(3, 3, 30);
    scale_dev = std::max(scale_dev, rel(fano(ou3, psi * std::sqrt(ou3.r0()), CrossingMode::Up), fano(ou1, psi * std::sqrt(ou1.r0()), CrossingMode::Up)));
  }
  for (const Kernel& k : {make_sdho(1, 0.5, 1), make_sdho(1, 2, 1), make_ou_mean_revert(1, 3, 30),
                          make_rational_quadratic(1, 1, 0.75), make_squared_exponential(1, 1)})
    for (auto mode : {CrossingMode::Up, CrossingMode::Total})
      for (double u : {0.4, 1.7}) {
        const auto p = variance_rate_asymptotic(k, u, mode), m = variance_rate_asymptotic(k, -u, mode);
        sign_dev = std::max({sign_dev, rel(m.mean, p.mean), rel(m.variance, p.variance), rel(m.fano, p.fano)});
      }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> zeta(0.05, 5), kappa(0.05, 5), shape(0.3, 10), lg(-4, 1.5), lev(-3, 3);
  std::uniform_int_distribution<int> fam(0, 3);
  int negative = 0;
  for (int i = 0; i < 10000; ++i) {
    Kernel k = make_squared_exponential(1, 1);
    switch (fam(rng)) {
      case 0: k = make_sdho(1, zeta(rng), 1); break;
      case 1: k = make_ou_mean_revert(1, 3, 3 / kappa(rng)); break;
      case 2: k = make_rational_quadratic(1, 1, shape(rng)); break;
      default: break;
    }
    const auto p = abg_params(k, lev(rng) * std::sqrt(k.r0()), std::pow(10.0, lg(rng)) * k.tau_slow());
    if (!(p.alpha > 0 && p.beta > 0)) ++negative;
  }
  for (double kap : {0.1, 0.5, 2.0})
    for (double psi : {0.0, 1.0, 2.5}) {
      const auto ou = make_ou_mean_revert(1, 3, 3 / kap);
      const auto sd = Kernel(map_ou_to_sdho(std::get<OuParams>(ou.params())));
      const double u = psi * std::sqrt(ou.r0());
      map_dev = std::max(map_dev, rel(fano(sd, u, CrossingMode::Up), fano(ou, u, CrossingMode::Up)));
    }
  const bool pass = tau_dev <= kTau && scale_dev <= kTau && sign_dev <= kSign && negative == 0 && map_dev <= kMap;
  return {pass, fmt("tau %.1e (tol 1e-8), psi scaling %.1e (tol 1e-8), u sign %.1e (tol 1e-10), "
                    "alpha/beta non-positive %d of 10000, OU vs oscillator %.1e (tol 1e-8)",
                    tau_dev, scale_dev, sign_dev, negative, map_dev)};
}

// 7. Owen's T and the lemma identities.
Outcome special_functions() {
  constexpr double kT = 1e-12, kZero = 1e-15, kLemma = 1e-9;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> hd(-6, 6), ad(-20, 20);
  QuadratureSpec q;
  q.rel_tol = 1e-15;
  q.abs_tol = 1e-20;
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double h = hd(rng), a = ad(rng);
    auto f = [h](double x) { return std::exp(-0.5 * h * h * (1 + x * x)) / (1 + x * x); };
    const double direct = (a < 0 ? -1 : 1) * integrate_finite(f, 0.0, std::abs(a), q).value / (2 * kPi);
    worst = std::max(worst, std::abs(owens_t(h, a) - direct));
  }
  double worst0 = 0;
  for (double a = -50; a <= 50; a += 0.1) worst0 = std::max(worst0, std::abs(owens_t(0.0, a) - std::atan(a) / (2 * kPi)));
  std::uniform_real_distribution<double> pos(0.1, 10), sym(-3, 3);
  double worst_lemma = 0;
  int which = 0;
  for (int lemma = 1; lemma <= 6; ++lemma)
    for (int i = 0; i < 50; ++i) {
      const auto r = check_lemma(lemma, pos(rng), pos(rng), sym(rng), sym(rng));
      if (r.rel_error > worst_lemma) {
        worst_lemma = r.rel_error;
        which = lemma;
      }
    }
  return {worst <= kT && worst0 <= kZero && worst_lemma <= kLemma,
          fmt("T vs quadrature %.1e (tol 1e-12), T(0,a) %.1e (tol 1e-15), lemmas %.1e at lemma %d (tol 1e-9)", worst,
              worst0, worst_lemma, which)};
}

// 8. Finite horizon approaches the asymptotic rate.
Outcome finite_horizon() {
  constexpr double kTol = 0.01;
  const auto k = make_sdho(1, 1, 1);
  const double T = 200 * k.tau_slow();
  double worst = 0;
  std::string d;
  for (auto mode : {CrossingMode::Up, CrossingMode::Total}) {
    const auto f = variance_count(k, 0.5, T, mode);
    const auto a = variance_rate_asymptotic(k, 0.5, mode);
    const double r = rel(f.variance / T, a.variance);
    worst = std::max(worst, r);
    d += fmt("%s%s %.3e", d.empty() ? "" : ", ", mode_name(mode).c_str(), r);
  }
  return {worst <= kTol, "relative gap " + d + " (tol 0.01)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"canonical integrals", theorem_integrals}, {"brute-force integrands", brute_force_integrands},
      {"zero-level consistency", zero_level},     {"Monte Carlo agreement", monte_carlo},
      {"sign and structure", structure},          {"invariances", invariances},
      {"special functions", special_functions},   {"finite-horizon convergence", finite_horizon}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s: %s\n", n, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
