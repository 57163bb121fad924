"""Gaussian-copula model of the features and the second-order knockoff used
as the optimizer's starting point.

The features are mapped to latent normal scores through their fitted
marginals; the latent correlation matrix and the equicorrelated s-vector
give the classical conditional construction (mean Z - diag(s) Sigma^-1 Z,
covariance 2 diag(s) - diag(s) Sigma^-1 diag(s)), and the sampled latent
knockoffs are mapped back through the marginal quantiles. The map back is
rank-preserving, so the guess matches the fitted marginals by construction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import special
from .datamatrix import DataMatrix
from .errors import NumericFailure
from .marginals import MarginalModel
from .rng import make_rng

PSD_EIG_FLOOR = 1e-10
JOINT_EIG_TOL = -1e-8
S_SHRINK = 1.0 - 1e-6
_RIDGE = 1e-8


def psd_repair(matrix, floor=PSD_EIG_FLOOR):
    """Clip eigenvalues at ``floor`` and renormalize to unit diagonal.

    Sample correlations of latent scores can be indefinite when n is close
    to p; the congruence renormalization preserves semidefiniteness.
    """
    a = np.asarray(matrix, dtype=float)
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    if w.min() >= floor:
        return a
    w = np.clip(w, floor, None)
    a = (v * w) @ v.T
    d = 1.0 / np.sqrt(np.diag(a))
    a = a * np.outer(d, d)
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 1.0)
    return a


@dataclass
class GaussianCopulaModel:
    """Latent correlation matrix plus the per-feature marginals."""

    latent_correlation: np.ndarray
    marginals: list

    def __post_init__(self):
        s = np.asarray(self.latent_correlation, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("latent correlation must be square")
        if len(self.marginals) != s.shape[0]:
            raise ValueError("one marginal per feature required")
        if not np.allclose(np.diag(s), 1.0, atol=1e-12):
            raise ValueError("latent correlation must have unit diagonal")
        if np.linalg.eigvalsh(s).min() < -PSD_EIG_FLOOR:
            raise ValueError("latent correlation must be PSD (repair it first)")
        self.latent_correlation = s

    @property
    def p(self):
        return self.latent_correlation.shape[0]

    def to_dict(self):
        return {
            "schema_version": 1,
            "latent_correlation": [[float(v) for v in row]
                                   for row in self.latent_correlation],
            "marginals": [m.to_dict() for m in self.marginals],
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def from_dict(cls, doc):
        return cls(latent_correlation=np.asarray(doc["latent_correlation"]),
                   marginals=[MarginalModel.from_dict(d) for d in doc["marginals"]])

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def latent_scores(features: DataMatrix, marginals) -> np.ndarray:
    """Phi^-1(F_i(x)) per column; CDF values at exactly 0 or 1 are clamped
    into [1/(n+1), n/(n+1)] with a warning."""
    n = features.n
    lo, hi = 1.0 / (n + 1.0), n / (n + 1.0)
    z = np.empty_like(features.values)
    clamped = 0
    for j in range(features.p):
        u = np.asarray(marginals[j].cdf(features.column(j)), dtype=float)
        bad = (u <= 0.0) | (u >= 1.0)
        if bad.any():
            clamped += int(bad.sum())
            u = np.clip(u, lo, hi)
        z[:, j] = special.norm_ppf(u)
    if clamped:
        warnings.warn(f"clamped {clamped} CDF values at 0/1 into [1/(n+1), n/(n+1)]")
    return z


def fit_copula(features: DataMatrix, marginals) -> GaussianCopulaModel:
    """Latent correlation = sample correlation of the latent scores, PSD-repaired."""
    if features.n <= features.p:
        warnings.warn(f"n={features.n} <= p={features.p}: latent correlation "
                      "will be rank-deficient")
    z = latent_scores(features, marginals)
    sigma = np.corrcoef(z, rowvar=False)
    sigma = np.atleast_2d(sigma)
    sigma = psd_repair(sigma)
    return GaussianCopulaModel(latent_correlation=sigma, marginals=list(marginals))


@dataclass
class KnockoffSVector:
    """Per-feature decorrelation amounts; the joint 2p x 2p matrix
    [[Sigma, Sigma - diag(s)], [Sigma - diag(s), Sigma]] must stay PSD."""

    s: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if np.any(self.s < 0.0):
            raise ValueError("s must be nonnegative")


def joint_matrix(sigma, s):
    d = np.diag(np.asarray(s, dtype=float))
    top = np.hstack([sigma, sigma - d])
    bottom = np.hstack([sigma - d, sigma])
    return np.vstack([top, bottom])


def check_joint_psd(sigma, s, tol=JOINT_EIG_TOL):
    w_min = float(np.linalg.eigvalsh(joint_matrix(sigma, s)).min())
    if w_min < tol:
        raise NumericFailure(f"joint feature/knockoff matrix is not PSD "
                             f"(min eigenvalue {w_min:.3e}); reduce s")
    return w_min


def equicorrelated_s(sigma) -> KnockoffSVector:
    """s_j = min(1, 2 lambda_min(Sigma)) uniformly, shrunk by 1 - 1e-6 to keep
    the joint matrix strictly PSD."""
    sigma = np.asarray(sigma, dtype=float)
    lam_min = float(np.linalg.eigvalsh(sigma).min())
    if lam_min <= 0.0:
        raise ValueError(f"Sigma has min eigenvalue {lam_min:.3e} <= 0; "
                         "run psd_repair first")
    s = np.full(sigma.shape[0], min(1.0, 2.0 * lam_min) * S_SHRINK)
    check_joint_psd(sigma, s)
    return KnockoffSVector(s=s)


def _inverse_times_diag(sigma, s):
    try:
        np.linalg.cholesky(sigma)
        mat = sigma
    except np.linalg.LinAlgError:
        mat = sigma + _RIDGE * np.eye(sigma.shape[0])
    return np.linalg.solve(mat, np.diag(s))


def sample_gaussian_knockoffs(scores, sigma, s, seed) -> np.ndarray:
    """Draw latent knockoff scores row-wise from the conditional normal.

    Conditional mean Z - diag(s) Sigma^-1 Z and covariance
    2 diag(s) - diag(s) Sigma^-1 diag(s); the covariance is factored by
    symmetric eigendecomposition with small negative eigenvalues clipped.
    """
    scores = np.asarray(scores, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    s = np.asarray(s, dtype=float)
    n, p = scores.shape
    b = _inverse_times_diag(sigma, s)          # Sigma^-1 diag(s)
    mean = scores - scores @ b
    cond_cov = 2.0 * np.diag(s) - np.diag(s) @ b
    cond_cov = 0.5 * (cond_cov + cond_cov.T)
    w, v = np.linalg.eigh(cond_cov)
    if w.min() < -1e-6:
        raise NumericFailure(f"conditional covariance has eigenvalue {w.min():.3e}; "
                             "the s vector is infeasible for this Sigma")
    root = v * np.sqrt(np.clip(w, 0.0, None))
    noise = make_rng(seed).standard_normal((n, p))
    return mean + noise @ root.T


def initial_guess(features: DataMatrix, model: GaussianCopulaModel, seed,
                  s=None) -> DataMatrix:
    """Second-order knockoff of the features, mapped back through the
    fitted marginals. Conditions on the observed latent scores."""
    if s is None:
        s = equicorrelated_s(model.latent_correlation).s
    else:
        s = np.asarray(s, dtype=float)
        check_joint_psd(model.latent_correlation, s)
    z = latent_scores(features, model.marginals)
    z_ko = sample_gaussian_knockoffs(z, model.latent_correlation, s, seed)
    u = special.norm_cdf(z_ko)
    eps = np.finfo(float).eps
    u = np.clip(u, eps, 1.0 - eps)
    out = np.empty_like(u)
    for j in range(features.p):
        out[:, j] = model.marginals[j].quantile(u[:, j])
    return features.with_values(out)
