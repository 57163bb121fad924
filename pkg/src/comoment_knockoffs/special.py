"""Distribution kernels used by the marginal models.

Normal CDF goes through the C library's erfc (double precision, ~1e-16);
the Student-t CDF uses an in-repo regularized incomplete beta so the package
has no dependency beyond numpy for its numerics. Quantiles are computed by
rational initial guesses refined with Newton/bisection steps.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT2 = math.sqrt(2.0)
_erfc_vec = np.frompyfunc(math.erfc, 1, 1)

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def norm_cdf(x):
    """Standard normal CDF, elementwise."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * _erfc_vec(-x / _SQRT2).astype(float)
    return out if out.ndim else float(out)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


# Acklam's rational approximation to the normal quantile (~1.15e-9 relative),
# used as the seed for one Halley refinement against the erfc-based CDF.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)


def _norm_ppf_acklam(p):
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p = np.asarray(p, dtype=float)
    x = np.empty_like(p)
    plow, phigh = 0.02425, 1.0 - 0.02425

    lo = p < plow
    hi = p > phigh
    mid = ~(lo | hi)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[hi] = -num / den
    return x


def norm_ppf(p):
    """Standard normal quantile, elementwise; requires p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("norm_ppf requires probabilities strictly inside (0, 1)")
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    x = _norm_ppf_acklam(p)
    # One Halley step where exp(x^2/2) cannot overflow; beyond |x|~30 the
    # Acklam tail branch is already the best double-precision answer we need.
    safe = np.abs(x) < 30.0
    if np.any(safe):
        xs = x[safe]
        e = norm_cdf(xs) - p[safe]
        u = e * np.sqrt(2.0 * math.pi) * np.exp(0.5 * xs * xs)
        x[safe] = xs - u / (1.0 + 0.5 * xs * u)
    return float(x[0]) if scalar else x


def _betacf(x, a, b, max_iter=400, eps=1e-15):
    """Lentz continued fraction for the incomplete beta, vectorized over x."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < eps):
            break
    return h


def betainc_reg(x, a, b):
    """Regularized incomplete beta I_x(a, b) for scalar a, b > 0, array x in [0, 1]."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).copy()
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("betainc_reg requires x in [0, 1]")
    out = np.empty_like(x)
    at0 = x == 0.0
    at1 = x == 1.0
    inner = ~(at0 | at1)
    out[at0] = 0.0
    out[at1] = 1.0
    if np.any(inner):
        xi = x[inner]
        ln_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        front = np.exp(a * np.log(xi) + b * np.log1p(-xi) - ln_beta)
        # The continued fraction converges fast only below the switch point;
        # use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) above it.
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if np.any(direct):
            res[direct] = front[direct] * _betacf(xi[direct], a, b) / a
        if np.any(~direct):
            res[~direct] = 1.0 - front[~direct] * _betacf(1.0 - xi[~direct], b, a) / b
        out[inner] = res
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def t_cdf(x, df):
    """CDF of the standard Student-t with ``df`` degrees of freedom."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    xb = df / (df + x * x)
    tail = 0.5 * betainc_reg(xb, 0.5 * df, 0.5)
    out = np.where(x >= 0.0, 1.0 - tail, tail)
    return float(out[0]) if scalar else out


def t_logpdf(x, df):
    x = np.asarray(x, dtype=float)
    const = (math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df)
             - 0.5 * math.log(df * math.pi))
    return const - 0.5 * (df + 1.0) * np.log1p(x * x / df)


def t_pdf(x, df):
    return np.exp(t_logpdf(x, df))


def t_ppf(p, df):
    """Quantile of the standard Student-t; requires p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("t_ppf requires probabilities strictly inside (0, 1)")
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    # Solve on the upper half via symmetry.
    pu = np.where(p < 0.5, 1.0 - p, p)
    lo = np.zeros_like(pu)
    hi = np.ones_like(pu)
    # Expand the bracket until t_cdf(hi) > pu everywhere.
    for _ in range(200):
        open_mask = t_cdf(hi, df) <= pu
        if not np.any(open_mask):
            break
        lo = np.where(open_mask, hi, lo)
        hi = np.where(open_mask, hi * 2.0, hi)
    else:
        raise RuntimeError("t_ppf bracket expansion failed")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = t_cdf(mid, df) < pu
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    # Two Newton polish steps.
    for _ in range(2):
        x = x - (t_cdf(x, df) - pu) / np.maximum(t_pdf(x, df), 1e-300)
    x = np.where(p < 0.5, -x, x)
    return float(x[0]) if scalar else x


def norm_logpdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - _LN_SQRT_2PI
