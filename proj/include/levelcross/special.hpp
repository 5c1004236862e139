#pragma once

#include <vector>

#include "levelcross/real.hpp"

namespace lcx {

struct OwensTArgs {
  double h;
  double a;
};

double erf(double x);
double erfc(double x);
quad erf(quad x);
quad erfc(quad x);

// Owen's T: (1/2pi) * int_0^a exp(-h^2 (1+t^2)/2) / (1+t^2) dt
double owens_t(double h, double a);
double owens_t(const OwensTArgs& args);
quad owens_t(quad h, quad a);

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussLegendreRule {
  std::vector<quad> nodes;
  std::vector<quad> weights;
};
const GaussLegendreRule& gauss_legendre(int n);

}  // namespace lcx
