#include "levelcross/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "levelcross/errors.hpp"

namespace lcx {

namespace {

constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208081372631, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();

double checked(const Integrand& f, double x) {
  double y = f(x);
  if (!std::isfinite(y)) {
    std::ostringstream os;
    os.precision(17);
    os << "integrand not finite at t = " << x;
    throw IntegrationError(os.str(), x);
  }
  return y;
}

struct Panel {
  double lo, hi, value, error;
  double floor;  // roundoff level of the rule on this panel
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel kronrod(const Integrand& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double fv1[10], fv2[10];
  const double fc = checked(f, c);
  double resk = kWgk[10] * fc;
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (int j = 0; j < 10; ++j) {
    const double dx = h * kXgk[j];
    fv1[j] = checked(f, c - dx);
    fv2[j] = checked(f, c + dx);
    resk += kWgk[j] * (fv1[j] + fv2[j]);
    resabs += kWgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * (fv1[j] + fv2[j]);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
  const double ah = std::abs(h);
  resk *= h;
  resabs *= ah;
  resasc *= ah;
  double err = std::abs((resk - resg * h));
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double floor = resabs > kTiny / (50.0 * kEps) ? 50.0 * kEps * resabs : 0.0;
  err = std::max(floor, err);
  return {lo, hi, resk, err, floor};
}

bool within(double err, double value, const QuadratureSpec& s) {
  return err <= std::max(s.abs_tol, s.rel_tol * std::abs(value));
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw ParameterError("quadrature tolerances must be positive");
  if (max_subdivisions < 1) throw ParameterError("max_subdivisions must be at least 1");
  if (tail == TailPolicy::FixedCutoff && !(cutoff_multiple >= 10))
    throw ParameterError("tail cutoff multiple must be at least 10");
  if (!(time_scale > 0)) throw ParameterError("time_scale must be positive");
}

QuadratureResult gauss_kronrod_21(const Integrand& f, double lo, double hi) {
  Panel p = kronrod(f, lo, hi);
  return {p.value, p.error, 21, true};
}

QuadratureResult integrate_finite(const Integrand& f, double lo, double hi, const QuadratureSpec& spec) {
  spec.validate();
  if (!(lo < hi)) throw DomainError("integrate_finite requires lo < hi");

  std::priority_queue<Panel> heap;
  Panel first = kronrod(f, lo, hi);
  heap.push(first);
  double value = first.value;
  double error = first.error;
  long evals = 21;
  // Panels too narrow to split, or whose error is already at the roundoff floor, keep their
  // error but leave the queue.
  std::vector<Panel> frozen;

  int splits = 0;
  while (!within(error, value, spec) && splits < spec.max_subdivisions && !heap.empty()) {
    Panel p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.lo + p.hi);
    if (!(mid > p.lo && mid < p.hi) || p.error <= p.floor ||
        std::abs(p.hi - p.lo) <= 64 * kEps * std::max(std::abs(p.lo), std::abs(p.hi))) {
      frozen.push_back(p);
      continue;
    }
    Panel a = kronrod(f, p.lo, mid);
    Panel b = kronrod(f, mid, p.hi);
    evals += 42;
    ++splits;
    value += a.value + b.value - p.value;
    error += a.error + b.error - p.error;
    heap.push(a);
    heap.push(b);
  }

  // Resum to shed drift from the running updates.
  std::vector<Panel> all = std::move(frozen);
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
  value = 0.0;
  error = 0.0;
  for (const auto& p : all) {
    value += p.value;
    error += p.error;
  }
  return {value, error, evals, within(error, value, spec)};
}

QuadratureResult integrate_semi_infinite(const Integrand& f, double lo, const QuadratureSpec& spec) {
  spec.validate();
  if (!std::isfinite(lo)) throw DomainError("integrate_semi_infinite requires a finite lower limit");

  switch (spec.tail) {
    case TailPolicy::ExponentialMap: {
      const double s = 4.0 * spec.time_scale;
      auto g = [&](double x) {
        if (x >= 1.0) return 0.0;
        const double w = -std::log1p(-x);
        const double y = f(lo + s * w);
        return y == 0.0 ? 0.0 : y * s / (1.0 - x);
      };
      return integrate_finite(g, 0.0, 1.0, spec);
    }
    case TailPolicy::AlgebraicMap: {
      const double s = spec.time_scale;
      auto g = [&](double x) {
        const double om = 1.0 - x;
        if (om <= 0.0) return 0.0;
        const double om2 = om * om;
        const double inv4 = 1.0 / (om2 * om2);
        const double y = f(lo + s * (inv4 - 1.0));
        return y == 0.0 ? 0.0 : y * 4.0 * s * inv4 / om;
      };
      return integrate_finite(g, 0.0, 1.0, spec);
    }
    case TailPolicy::FixedCutoff: {
      const double hi = lo + spec.cutoff_multiple * spec.time_scale;
      QuadratureResult body = integrate_finite(f, lo, hi, spec);
      QuadratureResult last = gauss_kronrod_21(f, hi - spec.time_scale, hi);
      body.error += std::abs(last.value);
      body.evaluations += last.evaluations;
      body.converged = body.converged && within(body.error, body.value, spec);
      return body;
    }
  }
  return {};
}

}  // namespace lcx
