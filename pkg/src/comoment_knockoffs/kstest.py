"""One-sample Kolmogorov-Smirnov test against a fitted marginal, and the
squared-statistic penalty the optimizer uses to hold knockoff marginals in
place.

The p-value is the asymptotic Kolmogorov series
    Q(t) = 2 * sum_{j>=1} (-1)^(j-1) * exp(-2 j^2 t^2),  t = sqrt(n) * D,
truncated once terms fall below 1e-12. This is the standard large-n form;
no exact small-n distribution is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .marginals import MarginalModel

_SERIES_EPS = 1e-12
# Below this argument Q(t) equals 1 to far beyond double precision.
_SERIES_T_FLOOR = 0.1


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float


def kolmogorov_survival(t: float) -> float:
    """Q(t) = P(sup |Brownian bridge| > t), the two-sided asymptotic tail."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t < _SERIES_T_FLOOR:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, 100000):
        term = np.exp(-2.0 * j * j * t * t)
        total += sign * term
        if term < _SERIES_EPS:
            break
        sign = -sign
    return float(min(max(2.0 * total, 0.0), 1.0))


def _check_column(column):
    x = np.asarray(column, dtype=float)
    if x.ndim != 1:
        raise ValueError("ks_test expects a 1-D column")
    if len(x) < 8:
        raise ValueError(f"ks_test needs n >= 8, got {len(x)}")
    if not np.isfinite(x).all():
        raise ValueError("column contains non-finite values")
    return x


def ks_statistic(column, model: MarginalModel) -> float:
    """sup |F_empirical - F_model| over the sample, both one-sided deviations."""
    x = _check_column(column)
    n = len(x)
    u = np.asarray(model.cdf(np.sort(x)), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = i / n - u
    d_minus = u - (i - 1) / n
    return float(max(d_plus.max(), d_minus.max()))


def ks_test(column, model: MarginalModel) -> KSResult:
    d = ks_statistic(column, model)
    n = len(np.asarray(column))
    return KSResult(statistic=d, p_value=kolmogorov_survival(np.sqrt(n) * d))


def ks_penalty(column, model: MarginalModel) -> float:
    """Smooth surrogate for the marginal constraint: the squared statistic.

    D has a floor of 1/(2n), attained when the sample sits exactly at the
    model quantiles (i - 1/2)/n, so the penalty floor is 1/(4 n^2).
    """
    return ks_statistic(column, model) ** 2


def ks_penalty_grad(column, model: MarginalModel):
    """(penalty, subgradient w.r.t. the column entries).

    D is attained at one order statistic; away from ties the penalty is
    differentiable there with derivative 2 * D * (+-pdf). The returned
    gradient is zero everywhere else.
    """
    x = _check_column(column)
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    u = np.asarray(model.cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = i / n - u          # derivative w.r.t. the point: -pdf
    d_minus = u - (i - 1) / n   # derivative w.r.t. the point: +pdf
    ip = int(np.argmax(d_plus))
    im = int(np.argmax(d_minus))
    grad = np.zeros(n)
    if d_plus[ip] >= d_minus[im]:
        d = d_plus[ip]
        sign, idx = -1.0, ip
    else:
        d = d_minus[im]
        sign, idx = 1.0, im
    pdf = float(np.atleast_1d(model.pdf(np.array([xs[idx]])))[0])
    grad[order[idx]] = 2.0 * d * sign * pdf
    return float(d * d), grad
