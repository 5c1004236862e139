#include "levelcross/special.hpp"

#include <map>
#include <mutex>

namespace lcx {

double erf(double x) { return std::erf(x); }
double erfc(double x) { return std::erfc(x); }
quad erf(quad x) { return erfq(x); }
quad erfc(quad x) { return erfcq(x); }

const GaussLegendreRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const quad pi = M_PIq;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    quad x = cosq(pi * (i + quad(0.75)) / (n + quad(0.5)));
    quad dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      quad p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        quad p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      quad dx = p1 / dp;
      x -= dx;
      if (fabsq(dx) < 1e-33Q) break;
    }
    quad p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      quad p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    quad w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

namespace {

template <class R> struct OwenRule {
  std::vector<R> nodes;  // on [0, 1]
  std::vector<R> weights;
};

template <class R> const OwenRule<R>& owen_rule() {
  static const OwenRule<R> rule = [] {
    const int n = sizeof(R) > sizeof(double) ? 96 : 48;
    const auto& gl = gauss_legendre(n);
    OwenRule<R> out;
    for (int i = 0; i < n; ++i) {
      out.nodes.push_back(static_cast<R>((gl.nodes[i] + 1) / 2));
      out.weights.push_back(static_cast<R>(gl.weights[i] / 2));
    }
    return out;
  }();
  return rule;
}

// Beyond h*t = cut the integrand is below machine precision relative to its peak.
template <class R> R owen_cut() { return sizeof(R) > sizeof(double) ? R(13) : R(9); }

// 0 <= a <= 1, h >= 0
template <class R> R owens_t_core(R h, R a) {
  if (a == 0) return 0;
  if (h == 0) return xp::atan(a) / (2 * pi<R>());
  R b = a;
  if (h * b > owen_cut<R>()) b = owen_cut<R>() / h;
  const auto& rule = owen_rule<R>();
  R sum = 0;
  const R h2 = h * h / 2;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    R t = b * rule.nodes[i];
    sum += rule.weights[i] * xp::exp(-h2 * t * t) / (1 + t * t);
  }
  return xp::exp(-h2) * b * sum / (2 * pi<R>());
}

template <class R> R owens_t_impl(R h, R a) {
  R sign = 1;
  if (a < 0) {
    a = -a;
    sign = -1;
  }
  h = xp::abs(h);
  if (h == 0) return sign * xp::atan(a) / (2 * pi<R>());
  if (a <= 1) return sign * owens_t_core(h, a);
  // T(h,a) = (G(h) + G(ah))/2 - G(h) G(ah) - T(ah, 1/a),  G(x) = erfc(x/sqrt2)/2
  const R ah = a * h;
  const R rt2 = xp::sqrt(R(2));
  const R gh = xp::erfc(h / rt2) / 2;
  const R gah = xp::erfc(ah / rt2) / 2;
  return sign * ((gh + gah) / 2 - gh * gah - owens_t_core(ah, 1 / a));
}

}  // namespace

double owens_t(double h, double a) { return owens_t_impl<double>(h, a); }
double owens_t(const OwensTArgs& args) { return owens_t(args.h, args.a); }
quad owens_t(quad h, quad a) { return owens_t_impl<quad>(h, a); }

}  // namespace lcx
