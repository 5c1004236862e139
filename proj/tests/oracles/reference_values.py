"""Arbitrary-precision reference values frozen into the C++ tests.

Run with mpmath installed: python3 tests/oracles/reference_values.py
"""
from mpmath import mp, mpf, sqrt, exp, erf, quad, pi, diff, acos, asin, inf, cos, sin

mp.dps = 110


def owens_t(h, a):
    return quad(lambda x: exp(-h * h * (1 + x * x) / 2) / (1 + x * x), [0, a]) / (2 * pi)


def sdho(w, z, th):
    """r(t) of the damped oscillator from its second-order ODE solution."""
    r0 = th / w**2
    if z < 1:
        wd = w * sqrt(1 - z * z)
        return lambda t: r0 * exp(-z * w * t) * (cos(wd * t) + z * w / wd * sin(wd * t))
    if z == 1:
        return lambda t: r0 * exp(-w * t) * (1 + w * t)
    lp, lm = w * (z + sqrt(z * z - 1)), w * (z - sqrt(z * z - 1))
    return lambda t: r0 * (lp * exp(-lm * t) - lm * exp(-lp * t)) / (lp - lm)


def rq(s, tau, a):
    return lambda t: s * s * (1 + t * t / (2 * a * tau * tau)) ** (-a)


def se(s, tau):
    return lambda t: s * s * exp(-t * t / (2 * tau * tau))


def moments(r, t):
    return r(t), diff(r, t), -diff(r, t, 2)


def abg(r, u, t):
    r0, q0 = r(0), -diff(r, 0, 2)
    rt, p, q = moments(r, t)
    d1 = p * p + (q - q0) * (rt + r0)
    d2 = p * p + (q + q0) * (rt - r0)
    return (-(rt + r0) / (2 * d1), -(r0 - rt) / (2 * d2), sqrt(2) * p * u / (rt + r0), 1 / (rt + r0))


def sdho_underdamped_moments(w, z, th):
    """(r, r', -r'') in closed form for zeta < 1."""
    wd = w * sqrt(1 - z * z)
    r0 = th / w**2

    def m(t):
        e = exp(-z * w * t)
        c, s_ = cos(wd * t), sin(wd * t)
        rt = r0 * e * (c + z * w / wd * s_)
        p = -r0 * e * (w * w / wd) * s_
        q = r0 * e * (w * w) * (c - z * w / wd * s_)
        return rt, p, q
    return m


def se_moments(s, tau):
    def m(t):
        rt = s * s * exp(-t * t / (2 * tau * tau))
        return rt, -t / tau**2 * rt, (1 / tau**2 - t * t / tau**4) * rt
    return m


def rice_zero_integrand(m, t, total):
    """Excess two-crossing density at level 0 from the orthant moments of the conditional velocities."""
    r0, _, q0 = m(mpf(0))
    rt, p, q = m(t)
    gap = r0 * r0 - rt * rt
    c11 = q0 - p * p * r0 / gap
    c12 = q - p * p * rt / gap
    rho = c12 / c11
    dens = 1 / (2 * pi * sqrt(gap))
    if total:
        m = 2 * c11 / pi * (sqrt(1 - rho * rho) + rho * asin(rho))
        return mp.re(dens * m - q0 / r0 / pi**2)
    m = c11 / (2 * pi) * (sqrt(1 - rho * rho) + rho * (pi - acos(rho)))
    return mp.re(dens * m - q0 / r0 / (4 * pi**2))


def zero_rate(m, total, breaks):
    r0, _, q0 = m(mpf(0))
    mean = sqrt(q0 / r0) / (pi if total else 2 * pi)
    J = quad(lambda t: rice_zero_integrand(m, t, total), [mpf("1e-25")] + breaks + [inf])
    var = mean + 2 * J
    return mean, var, var / mean


if __name__ == "__main__":
    print("erf(1)", mp.nstr(erf(1), 20))
    print("T(2, 0.5)", mp.nstr(owens_t(mpf(2), mpf("0.5")), 20))
    print("sdho(1,2,1) r(1)", mp.nstr(sdho(1, 2, 1)(mpf(1)), 20))
    print("rq(1,2,0.75) t=2", [mp.nstr(v, 20) for v in moments(rq(1, 2, mpf("0.75")), mpf(2))])
    print("abg sdho(1,0.5,1) u=1 t=1", [mp.nstr(v, 20) for v in abg(sdho(1, mpf("0.5"), 1), 1, mpf(1))])
    for name, mom, br in [("sdho(1,0.5,1)", sdho_underdamped_moments(1, mpf("0.5"), 1), [1, 2, 5, 10, 20, 40, 80]),
                          ("se(1,1)", se_moments(1, 1), [1, 2, 4, 8])]:
        for total in (False, True):
            m, v, f = zero_rate(mom, total, br)
            print(name, "total" if total else "up", "mean", mp.nstr(m, 20), "var", mp.nstr(v, 20), "fano", mp.nstr(f, 20))
    print("rice up integrand sdho(1,0.5,1) t=2", mp.nstr(rice_zero_integrand(sdho_underdamped_moments(1, mpf("0.5"), 1), mpf(2), False), 20))
