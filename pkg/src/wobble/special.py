"""Special functions backing the statistical tests and the Gaussian sampler.

Everything here is scalar, dependency-free and double precision. The inverse
normal CDF is Wichura's AS241 rational approximation; the regularized
incomplete beta/gamma functions follow the classic series / continued-fraction
split with modified Lentz evaluation.
"""

import math

__all__ = [
    "inv_norm_cdf",
    "reg_incomplete_beta",
    "reg_incomplete_gamma_upper",
    "f_sf",
    "chi2_sf",
    "kolmogorov_sf",
]

# AS241 (PPND16) coefficients, central region |p - 0.5| <= 0.425.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
# Intermediate region, r = sqrt(-log(min(p, 1-p))) in (1.6, 5].
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
# Far tail, r > 5.
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _ppnd16(p: float) -> float:
    """AS241 core; caller guarantees 0 < p < 1. Kept branch-only so it can be
    compiled as-is by numba for the sampling hot loop."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = ((((((_A[7] * r + _A[6]) * r + _A[5]) * r + _A[4]) * r + _A[3]) * r + _A[2]) * r + _A[1]) * r + _A[0]
        den = ((((((_B[6] * r + _B[5]) * r + _B[4]) * r + _B[3]) * r + _B[2]) * r + _B[1]) * r + _B[0]) * r + 1.0
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = ((((((_C[7] * r + _C[6]) * r + _C[5]) * r + _C[4]) * r + _C[3]) * r + _C[2]) * r + _C[1]) * r + _C[0]
        den = ((((((_D[6] * r + _D[5]) * r + _D[4]) * r + _D[3]) * r + _D[2]) * r + _D[1]) * r + _D[0]) * r + 1.0
    else:
        r -= 5.0
        num = ((((((_E[7] * r + _E[6]) * r + _E[5]) * r + _E[4]) * r + _E[3]) * r + _E[2]) * r + _E[1]) * r + _E[0]
        den = ((((((_F[6] * r + _F[5]) * r + _F[4]) * r + _F[3]) * r + _F[2]) * r + _F[1]) * r + _F[0]) * r + 1.0
    val = num / den
    return -val if q < 0.0 else val


def inv_norm_cdf(p: float) -> float:
    """Quantile function of the standard normal (AS241, |err| < 1e-9)."""
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        raise ValueError(f"p must be in [0, 1], got {p}")
    return _ppnd16(p)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    TINY = 1e-30
    EPS = 3e-16
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Switch to the complement where the continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def reg_incomplete_gamma_upper(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    ln_scale = -x + s * math.log(x) - math.lgamma(s)
    if x < s + 1.0:
        # Lower series, return the complement.
        term = 1.0 / s
        total = term
        n = 1
        while True:
            term *= x / (s + n)
            total += term
            if abs(term) < abs(total) * 1e-16 or n > 10000:
                break
            n += 1
        return 1.0 - total * math.exp(ln_scale)
    # Upper continued fraction (modified Lentz).
    TINY = 1e-30
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(ln_scale)


def f_sf(stat: float, d1: float, d2: float) -> float:
    """Upper tail probability of the F(d1, d2) distribution."""
    if stat <= 0.0:
        return 1.0
    return reg_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * stat))


def chi2_sf(x: float, df: float) -> float:
    """Upper tail probability of the chi-square distribution."""
    if x <= 0.0:
        return 1.0
    return reg_incomplete_gamma_upper(df / 2.0, x / 2.0)


def kolmogorov_sf(t: float) -> float:
    """Kolmogorov distribution survival function Q(t) = 2 sum (-1)^(j-1) e^(-2 j^2 t^2).

    Always evaluates at least 100 series terms (they underflow to zero
    quickly, so this costs nothing).
    """
    if t <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, 201):
        term = math.exp(-2.0 * j * j * t * t)
        total += sign * term
        sign = -sign
        if j >= 100 and term == 0.0:
            break
    return min(1.0, max(0.0, 2.0 * total))
