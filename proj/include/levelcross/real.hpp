#pragma once

#include <cmath>
#include <numbers>

#include <quadmath.h>

namespace lcx {

using quad = __float128;

// Overload set usable from templates instantiated with double or quad.
namespace xp {

using std::abs;
using std::atan;
using std::cos;
using std::cosh;
using std::erf;
using std::erfc;
using std::exp;
using std::expm1;
using std::log;
using std::log1p;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;

inline quad atan(quad x) { return atanq(x); }
inline quad cos(quad x) { return cosq(x); }
inline quad cosh(quad x) { return coshq(x); }
inline quad erf(quad x) { return erfq(x); }
inline quad erfc(quad x) { return erfcq(x); }
inline quad exp(quad x) { return expq(x); }
inline quad expm1(quad x) { return expm1q(x); }
inline quad log(quad x) { return logq(x); }
inline quad log1p(quad x) { return log1pq(x); }
inline quad pow(quad x, quad y) { return powq(x, y); }
inline quad sin(quad x) { return sinq(x); }
inline quad sinh(quad x) { return sinhq(x); }
inline quad sqrt(quad x) { return sqrtq(x); }

template <class R> inline bool isfinite(R x) { return std::isfinite(static_cast<double>(x)); }

}  // namespace xp

template <class R> inline R pi() { return std::numbers::pi_v<double>; }
template <> inline quad pi<quad>() { return M_PIq; }

template <class R> inline R sqrt_pi() { return 1.7724538509055160272981674833411452; }
template <> inline quad sqrt_pi<quad>() { return sqrtq(M_PIq); }

template <class R> inline R epsilon() { return 2.220446049250313e-16; }
template <> inline quad epsilon<quad>() { return FLT128_EPSILON; }

}  // namespace lcx
