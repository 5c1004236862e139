#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "levelcross/errors.hpp"
#include "levelcross/kernels.hpp"

using namespace lcx;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<Kernel> builtins() {
  return {make_sdho(1, 0.5, 1),          make_sdho(2, 1, 3),
          make_sdho(1, 2, 1),            make_ou_mean_revert(1, 3, 30),
          make_ou_mean_revert(2, 5, 0.7), make_rational_quadratic(1, 1, 0.75),
          make_rational_quadratic(2, 3, 4), make_squared_exponential(1.5, 0.4)};
}

}  // namespace

TEST_CASE("values at the origin") {
  auto d = make_sdho(1, 0.5, 1).eval(0);
  CHECK(d.r == doctest::Approx(1).epsilon(1e-15));
  CHECK(d.p == 0);
  CHECK(d.q == doctest::Approx(1).epsilon(1e-15));

  d = make_squared_exponential(1, 1).eval(0);
  CHECK(d.r == 1);
  CHECK(d.p == 0);
  CHECK(d.q == 1);

  d = make_rational_quadratic(1, 1, 0.75).eval(0);
  CHECK(d.r == 1);
  CHECK(d.q == doctest::Approx(1).epsilon(1e-15));

  const auto ou = make_ou_mean_revert(1, 3, 3.001);
  const double kappa = 3 / 3.001;
  CHECK(rel(ou.r0(), kappa / (1 + kappa)) < 1e-12);
  CHECK(rel(make_ou_mean_revert(1, 3, 30).r0(), 0.1 / 1.1) < 1e-14);
}

TEST_CASE("closed forms by substitution") {
  const auto crit = make_sdho(2, 1, 1);
  for (double t : {0.1, 0.7, 3.0}) CHECK(rel(crit.eval(t).r, 0.25 * std::exp(-2 * t) * (1 + 2 * t)) < 1e-14);
  CHECK(rel(make_squared_exponential(2, 3).eval(3).r, 4 * std::exp(-0.5)) < 1e-15);
  CHECK(rel(make_rational_quadratic(1, 1, 2).eval(1).r, 0.64) < 1e-15);
}

TEST_CASE("arbitrary-precision references") {
  // tests/oracles/reference_values.py
  CHECK(rel(make_sdho(1, 2, 1).eval(1).r, 0.82226342390180951728) < 1e-14);
  const auto d = make_rational_quadratic(1, 2, 0.75).eval(2);
  CHECK(rel(d.r, 0.6817316198804996211) < 1e-14);
  CHECK(rel(d.p, -0.20451948596414988633) < 1e-13);
  CHECK(rel(d.q, -0.040903897192829977266) < 1e-13);
}

TEST_CASE("equipartition for the oscillator") {
  for (double zeta : {0.1, 0.5, 1.0, 1.5, 3.0}) {
    const auto k = make_sdho(1.7, zeta, 2.3);
    CHECK(rel(k.r0(), 2.3 / (1.7 * 1.7)) < 1e-15);
    CHECK(rel(k.q0(), 2.3) < 1e-15);
  }
}

TEST_CASE("finite differences match analytic derivatives") {
  std::mt19937_64 rng(11);
  for (const auto& k : builtins()) {
    std::uniform_real_distribution<double> lag(0.05 * k.tau_slow(), 5 * k.tau_slow());
    const double h = 1e-5 * k.tau_slow();
    for (int i = 0; i < 100; ++i) {
      const double t = lag(rng);
      const auto d = k.eval(t);
      const double fp = (k.eval(t + h).r - k.eval(t - h).r) / (2 * h);
      const double fq = -(k.eval(t + h).p - k.eval(t - h).p) / (2 * h);
      CHECK(std::abs(fp - d.p) <= std::max(1e-6, 1e-4 * std::abs(d.p)));
      CHECK(std::abs(fq - d.q) <= std::max(1e-6, 1e-4 * std::abs(d.q)));
    }
  }
}

TEST_CASE("extended evaluation agrees with double") {
  for (const auto& k : builtins())
    for (double t : {0.01, 0.3, 2.0, 9.0}) {
      const double tt = t * k.tau_slow();
      const auto d = k.eval(tt);
      const auto e = k.eval_extended(tt);
      CHECK(std::abs(d.r - static_cast<double>(e.r)) <= 1e-14 * k.r0());
      CHECK(std::abs(d.q - static_cast<double>(e.q)) <= 1e-13 * k.q0());
    }
}

TEST_CASE("oscillator branches join continuously") {
  const auto lo = make_sdho(1, 1 - 1e-6, 1), mid = make_sdho(1, 1, 1), hi = make_sdho(1, 1 + 1e-6, 1);
  for (double t = 0; t <= 10; t += 0.25) {
    CHECK(rel(lo.eval(t).r, mid.eval(t).r) < 1e-4);
    CHECK(rel(hi.eval(t).r, mid.eval(t).r) < 1e-4);
  }
}

TEST_CASE("OU kernel near kappa = 1") {
  const auto k = make_ou_mean_revert(1, 3, 3 * (1 + 1e-8));
  const double te = 3 * (1 + 1e-8);
  for (double t : {0.0, 0.5, 2.0, 10.0}) CHECK(rel(k.eval(t).r, 0.5 * std::exp(-t / te) * (1 + t / te)) < 1e-6);
  CHECK_THROWS_AS(make_ou_mean_revert(1, 3, 3 * (1 + 1e-8), false), SingularParameterError);
  CHECK(std::abs(make_ou_mean_revert(1, 3, 30).eval(2000).r) < 1e-20);
}

TEST_CASE("OU maps onto the overdamped oscillator") {
  for (auto [s, tf, te] : {std::tuple{1.0, 3.0, 30.0}, {2.0, 5.0, 0.7}, {0.5, 1.0, 1.5}}) {
    const auto ou = make_ou_mean_revert(s, tf, te);
    const auto sd = Kernel(map_ou_to_sdho(std::get<OuParams>(ou.params())));
    for (double t = 0; t <= 10 * ou.tau_slow(); t += 0.37 * ou.tau_slow()) {
      const double a = ou.eval(t).r, b = sd.eval(t).r;
      CHECK(std::abs(a - b) <= 1e-10 * std::abs(a) + 1e-300);
    }
  }
}

TEST_CASE("rational quadratic approaches squared exponential") {
  // the pointwise relative gap grows like (t^2 / 2 tau^2)^2 / (2 alpha), 7.8e-5 at t = 5 tau
  const auto rq = make_rational_quadratic(1, 2, 1e6), se = make_squared_exponential(1, 2);
  for (double t = 0; t <= 10; t += 0.25) {
    CHECK(std::abs(rq.eval(t).r - se.eval(t).r) < 1e-5 * se.r0());
    if (t <= 5) CHECK(rel(rq.eval(t).r, se.eval(t).r) < 1e-5);
  }
}

TEST_CASE("slow timescales") {
  CHECK(rel(make_sdho(2, 0.5, 1).tau_slow(), 1.0) < 1e-15);
  CHECK(rel(make_sdho(1, 2, 1).tau_slow(), 1 / (2 - std::sqrt(3.0))) < 1e-14);
  CHECK(make_ou_mean_revert(1, 3, 30).tau_slow() == 30);
  CHECK(make_rational_quadratic(1, 7, 0.75).tau_slow() == 7);
}

TEST_CASE("constructor domains") {
  CHECK_THROWS_AS(make_sdho(1, 0, 1), ParameterError);
  CHECK_THROWS_AS(make_sdho(-1, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(make_sdho(1, 0.5, 0), ParameterError);
  CHECK_THROWS_AS(make_rational_quadratic(1, 1, 0), ParameterError);
  CHECK_THROWS_AS(make_squared_exponential(1, -1), ParameterError);
  CHECK_THROWS_AS(make_sdho(1, 0.5, 1).eval(-1), DomainError);
}

TEST_CASE("validity reports") {
  for (const auto& k : builtins()) {
    const auto rep = check_validity(k);
    CHECK_MESSAGE(rep.asymptotic_ok(), k.describe() << "\n" << rep.summary());
    // r ~ t^-1.5 makes the weighted tail integral diverge for alpha = 0.75
    const bool heavy = k.family() == Family::RationalQuadratic && k.shape().values[0] < 1;
    CHECK_MESSAGE(rep.all_pass() == !heavy, k.describe() << "\n" << rep.summary());
  }
  CHECK(check_validity(make_sdho(1, 0.5, 1)).all_pass());
  CHECK(check_validity(make_squared_exponential(1, 1)).all_pass());
  const auto flat = make_custom("flat", [](double t) { return KernelDerivatives{1.0, 0.0, 1e-3, t}; }, 1.0);
  const auto rep = check_validity(flat);
  CHECK_FALSE(rep.passes("bounded by variance"));
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("decay within ten slow timescales") {
  for (const auto& k : builtins()) {
    const bool heavy = k.family() == Family::RationalQuadratic && k.shape().values[0] < 1;
    if (heavy) CHECK(std::abs(k.eval(10 * k.tau_slow()).r) < 0.05 * k.r0());
    else CHECK(std::abs(k.eval(10 * k.tau_slow()).r) < 1e-3 * k.r0());
  }
}

TEST_CASE("family names round-trip") {
  for (auto f : {Family::Sdho, Family::OuMeanRevert, Family::RationalQuadratic, Family::SquaredExponential})
    CHECK(parse_family(family_name(f)) == f);
}
