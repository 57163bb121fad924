"""Univariate marginal models: normal, Student-t (location/scale), empirical.

Each fitted model exposes cdf / quantile / pdf / loglik. The empirical model
stores the sorted sample and interpolates CDF values at rank/(n+1), which
keeps copula transforms away from 0 and 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import special
from .datamatrix import DataMatrix
from .moments import column_variance

KINDS = ("normal", "student_t", "empirical")

T_DF_MIN = 2.1
T_DF_MAX = 200.0
T_DF_TOL = 1e-4

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite values")
    return x


def standardize(data: DataMatrix):
    """Scale every column to mean 0, variance 1 (biased variance).

    Returns (standardized DataMatrix, locations, scales); invert with
    ``unstandardize``.
    """
    X = _check_finite(data.values)
    locs = X.mean(axis=0)
    scales = np.empty(data.p)
    for j in range(data.p):
        scales[j] = math.sqrt(column_variance(X[:, j], data.columns[j]))
    out = (X - locs) / scales
    return data.with_values(out), locs, scales


def unstandardize(data: DataMatrix, locs, scales):
    return data.with_values(data.values * np.asarray(scales) + np.asarray(locs))


@dataclass
class MarginalModel:
    """A fitted univariate distribution with CDF / quantile / pdf."""

    kind: str
    location: float = 0.0
    scale: float = 1.0
    df: float = None
    sorted_sample: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind != "empirical" and self.scale <= 0.0:
            raise ValueError("scale must be positive")
        if self.kind == "student_t" and not (self.df is not None and self.df > 2.0):
            raise ValueError("student_t requires df > 2")
        if self.kind == "empirical":
            if self.sorted_sample is None or len(self.sorted_sample) < 2:
                raise ValueError("empirical marginal needs a stored sample")
            self.sorted_sample = np.sort(np.asarray(self.sorted_sample, dtype=float))

    # -- empirical helpers ---------------------------------------------------
    def _ecdf_knots(self):
        s = self.sorted_sample
        n = len(s)
        return s, np.arange(1, n + 1) / (n + 1.0)

    # -- core interface ------------------------------------------------------
    def cdf(self, x):
        x = _check_finite(x)
        if self.kind == "normal":
            return special.norm_cdf((x - self.location) / self.scale)
        if self.kind == "student_t":
            return special.t_cdf((x - self.location) / self.scale, self.df)
        s, u = self._ecdf_knots()
        return np.interp(x, s, u)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise ValueError("quantile requires u strictly inside (0, 1)")
        if self.kind == "normal":
            return self.location + self.scale * special.norm_ppf(u)
        if self.kind == "student_t":
            return self.location + self.scale * special.t_ppf(u, self.df)
        s, knots = self._ecdf_knots()
        # Outside [1/(n+1), n/(n+1)] the interpolated CDF is flat; clamp there.
        u = np.clip(u, knots[0], knots[-1])
        return np.interp(u, knots, s)

    def pdf(self, x):
        x = _check_finite(x)
        if self.kind == "normal":
            return special.norm_pdf((x - self.location) / self.scale) / self.scale
        if self.kind == "student_t":
            return special.t_pdf((x - self.location) / self.scale, self.df) / self.scale
        s, u = self._ecdf_knots()
        # Piecewise-constant density of the interpolated CDF.
        x = np.atleast_1d(x)
        idx = np.clip(np.searchsorted(s, x, side="right"), 1, len(s) - 1)
        slope = (u[idx] - u[idx - 1]) / (s[idx] - s[idx - 1])
        inside = (x >= s[0]) & (x <= s[-1])
        out = np.where(inside, slope, 0.0)
        return out if out.shape else float(out)

    def loglik(self, x):
        x = _check_finite(x)
        z = (x - self.location) / self.scale
        if self.kind == "normal":
            return float(np.sum(special.norm_logpdf(z)) - len(x) * math.log(self.scale))
        if self.kind == "student_t":
            return float(np.sum(special.t_logpdf(z, self.df)) - len(x) * math.log(self.scale))
        raise ValueError("loglik is defined for parametric kinds only")

    # -- serialization -------------------------------------------------------
    def to_dict(self):
        doc = {"kind": self.kind}
        if self.kind == "empirical":
            doc["sorted_sample"] = [float(v) for v in self.sorted_sample]
        else:
            doc["location"] = float(self.location)
            doc["scale"] = float(self.scale)
            if self.kind == "student_t":
                doc["df"] = float(self.df)
        return doc

    @classmethod
    def from_dict(cls, doc):
        kind = doc["kind"]
        if kind == "empirical":
            return cls(kind="empirical", sorted_sample=np.asarray(doc["sorted_sample"]))
        return cls(kind=kind, location=doc["location"], scale=doc["scale"],
                   df=doc.get("df"))


def _t_profile_fit(x, df, n_em=200, tol=1e-12):
    """Location/scale MLE for fixed df via the EM reweighting iteration."""
    mu = float(np.mean(x))
    var = float(np.mean((x - mu) ** 2))
    sigma = math.sqrt(var)
    for _ in range(n_em):
        z2 = ((x - mu) / sigma) ** 2
        w = (df + 1.0) / (df + z2)
        mu_new = float(np.sum(w * x) / np.sum(w))
        var_new = float(np.mean(w * (x - mu_new) ** 2))
        sigma_new = math.sqrt(max(var_new, 1e-300))
        if abs(mu_new - mu) < tol * (1.0 + abs(mu)) and abs(sigma_new - sigma) < tol * sigma:
            mu, sigma = mu_new, sigma_new
            break
        mu, sigma = mu_new, sigma_new
    return mu, sigma


def _t_profile_loglik(x, df):
    mu, sigma = _t_profile_fit(x, df)
    z = (x - mu) / sigma
    return float(np.sum(special.t_logpdf(z, df)) - len(x) * math.log(sigma)), mu, sigma


def fit_student_t(x):
    """Student-t fit with df chosen by golden-section search on the profile
    log-likelihood over [2.1, 200] (location/scale re-estimated per df)."""
    x = np.asarray(x, dtype=float)
    a, b = T_DF_MIN, T_DF_MAX
    cache = {}

    def f(df):
        if df not in cache:
            cache[df] = _t_profile_loglik(x, df)
        return cache[df][0]

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    while (b - a) > T_DF_TOL:
        if f(c) > f(d):
            b = d
        else:
            a = c
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
    df = 0.5 * (a + b)
    _, mu, sigma = _t_profile_loglik(x, df)
    return MarginalModel(kind="student_t", location=mu, scale=sigma, df=df)


def fit_marginal(column, kind="student_t"):
    """Fit one marginal model of the requested kind to a column vector.

    Parametric kinds need n >= 8. The family is a caller choice; no automatic
    model selection happens here.
    """
    x = _check_finite(column)
    if x.ndim != 1:
        raise ValueError("fit_marginal expects a 1-D column")
    if kind not in KINDS:
        raise ValueError(f"unknown marginal kind {kind!r}")
    if kind == "empirical":
        if len(x) < 2:
            raise ValueError("empirical fit needs at least 2 points")
        return MarginalModel(kind="empirical", sorted_sample=np.sort(x))
    if len(x) < 8:
        raise ValueError(f"parametric fit needs n >= 8, got {len(x)}")
    column_variance(x)
    if kind == "normal":
        mu = float(np.mean(x))
        sigma = math.sqrt(float(np.mean((x - mu) ** 2)))
        return MarginalModel(kind="normal", location=mu, scale=sigma)
    return fit_student_t(x)


def fit_marginals(data: DataMatrix, kinds="student_t"):
    """Fit one marginal per column; ``kinds`` is one name or a per-column list."""
    if isinstance(kinds, str):
        kinds = [kinds] * data.p
    if len(kinds) != data.p:
        raise ValueError(f"{len(kinds)} kinds for {data.p} columns")
    return [fit_marginal(data.column(j), kinds[j]) for j in range(data.p)]


def save_marginals(models, path):
    doc = {"schema_version": 1, "marginals": [m.to_dict() for m in models]}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_marginals(path):
    doc = json.loads(Path(path).read_text())
    return [MarginalModel.from_dict(d) for d in doc["marginals"]]
