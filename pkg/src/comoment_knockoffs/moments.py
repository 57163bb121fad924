"""Standardized (m,k)-co-moments, the deduplicated constraint system, and
aggregate residuals with analytic gradients.

The co-moment of total order m split k/(m-k) between two columns is the
biased central cross-moment divided by var(x)^(k/2) * var(y)^((m-k)/2),
with the exponent k attached to the left column. m=2 is correlation, m=3
coskewness, m=4 cokurtosis. Swapping the columns and replacing k by m-k
leaves the value unchanged, which is what the key canonicalization exploits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .datamatrix import DataMatrix
from .errors import DegenerateColumnError

VARIANCE_FLOOR = 1e-12

ORDERS = (2, 3, 4)

# Variant codes order the canonical listing: knockoff-left, knockoff-right,
# both-knockoff. (3 = neither, used only for feature-feature bookkeeping.)
_VARIANT_CODE = {(True, False): 0, (False, True): 1, (True, True): 2, (False, False): 3}

GROUP_NAMES = {2: "correlation", 3: "coskewness", 4: "cokurtosis"}


@dataclass(frozen=True)
class ColumnStats:
    """Biased first two moments of a column (divisor n)."""

    mean: float
    variance: float

    @classmethod
    def from_column(cls, x):
        x = np.asarray(x, dtype=float)
        mu = float(x.mean())
        return cls(mean=mu, variance=float(np.mean((x - mu) ** 2)))


def _column_values(data):
    return data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)


def column_variance(x, label="column"):
    """Biased variance with the degeneracy check (variance < 1e-12 -> error)."""
    x = np.asarray(x, dtype=float)
    v = float(np.mean((x - x.mean()) ** 2))
    if v < VARIANCE_FLOOR:
        raise DegenerateColumnError(label, v)
    return v


@dataclass(frozen=True)
class MomentKey:
    """One co-moment slot: columns, order m, split k, and knockoff flags.

    The tuple ordering (left, right, m, k, variant code) is the canonical
    listing order of a constraint set.
    """

    left_col: int
    right_col: int
    m: int
    k: int
    left_is_knockoff: bool
    right_is_knockoff: bool

    def __post_init__(self):
        if self.m not in ORDERS:
            raise ValueError(f"order m must be in {ORDERS}, got {self.m}")
        if not 1 <= self.k <= self.m - 1:
            raise ValueError(f"split k must be in 1..{self.m - 1}, got {self.k}")

    @property
    def variant(self):
        return _VARIANT_CODE[(self.left_is_knockoff, self.right_is_knockoff)]

    def __lt__(self, other):
        return self._sort_key() < other._sort_key()

    def _sort_key(self):
        return (self.left_col, self.right_col, self.m, self.k, self.variant)

    def swapped(self):
        """The same condition written with the columns exchanged (k -> m-k)."""
        return MomentKey(self.right_col, self.left_col, self.m, self.m - self.k,
                         self.right_is_knockoff, self.left_is_knockoff)


def canonicalize(key: MomentKey) -> MomentKey:
    """Deterministic representative of the swap-equivalence class.

    Keys are listed with left column < right column; a key written the other
    way round is the same condition with k replaced by m-k.
    """
    if key.left_col == key.right_col:
        raise ValueError("constraint keys pair two distinct columns (i != j)")
    if key.left_col > key.right_col:
        return key.swapped()
    return key


# --------------------------------------------------------------------------
# Pointwise co-moment
# --------------------------------------------------------------------------

def comoment(x, y, m, k, labels=("x", "y")) -> float:
    """Standardized (m,k)-moment between two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("comoment expects two 1-D vectors of equal length")
    if len(x) < 2:
        raise ValueError("comoment needs n >= 2")
    if m not in ORDERS or not 1 <= k <= m - 1:
        raise ValueError(f"invalid (m, k) = ({m}, {k})")
    vx = column_variance(x, labels[0])
    vy = column_variance(y, labels[1])
    xc = x - x.mean()
    yc = y - y.mean()
    s = float(np.mean(xc ** k * yc ** (m - k)))
    return s / (vx ** (k / 2.0) * vy ** ((m - k) / 2.0))


def _comoment_centered(ac, bc, va, vb, m, k):
    s = float(np.mean(ac ** k * bc ** (m - k)))
    return s / (va ** (k / 2.0) * vb ** ((m - k) / 2.0))


def _comoment_grads_centered(ac, bc, va, vb, m, k, c):
    """d(comoment)/d(left entries), d/d(right entries), given centered columns.

    Includes the chain through the column mean and through the variance in
    the standardization denominator:

        dc/da_r = (k/n) * (t_r - mean(t)) / D  -  c * (k/n) * ac_r / va

    with t = ac^(k-1) * bc^(m-k) and D the denominator; symmetrically for b.
    """
    n = len(ac)
    denom = va ** (k / 2.0) * vb ** ((m - k) / 2.0)
    t = ac ** (k - 1) * bc ** (m - k)
    d_left = (k / n) * (t - t.mean()) / denom - c * (k / n) * ac / va
    u = ac ** k * bc ** (m - k - 1)
    d_right = ((m - k) / n) * (u - u.mean()) / denom - c * ((m - k) / n) * bc / vb
    return d_left, d_right


# --------------------------------------------------------------------------
# Constraint system
# --------------------------------------------------------------------------

@dataclass
class ConstraintSet:
    """Deduplicated co-moment targets, grouped by moment order.

    ``targets`` maps each canonical MomentKey (one of the three knockoff
    variants per pair and slot) to the feature-feature moment it must match.
    """

    p: int
    targets: Dict[MomentKey, float]

    @property
    def keys(self):
        return list(self.targets.keys())

    def group(self, m):
        return [key for key in self.targets if key.m == m]

    @property
    def n_pairs(self):
        return self.p * (self.p - 1) // 2

    @property
    def n_targets_per_variant(self):
        # one target per (pair, m, k) slot, shared by the three variants
        return self.n_pairs * sum(m - 1 for m in ORDERS)

    def pair_slot_targets(self):
        """Map (i, j, m, k) -> target, one entry per deduplicated slot."""
        out = {}
        for key, t in self.targets.items():
            out[(key.left_col, key.right_col, key.m, key.k)] = t
        return out


def build_constraints(features) -> ConstraintSet:
    """Assemble every canonical constraint for the feature matrix.

    For each unordered pair i<j and each slot (m, k) there are exactly three
    variants (knockoff-left, knockoff-right, both-knockoff), all sharing the
    feature-feature target. Same-index constraints are excluded by the
    i != j rule; the feature/knockoff self-correlation is the optimizer's
    objective, not a constraint.
    """
    X = _column_values(features)
    p = X.shape[1]
    if p < 2:
        raise ValueError("build_constraints needs at least 2 features")
    names = features.columns if isinstance(features, DataMatrix) else None
    Xc = X - X.mean(axis=0)
    var = np.empty(p)
    for j in range(p):
        label = names[j] if names else f"column {j}"
        var[j] = column_variance(X[:, j], label)
    targets = {}
    for i in range(p):
        for j in range(i + 1, p):
            for m in ORDERS:
                for k in range(1, m):
                    t = _comoment_centered(Xc[:, i], Xc[:, j], var[i], var[j], m, k)
                    for flags in ((True, False), (False, True), (True, True)):
                        targets[MomentKey(i, j, m, k, *flags)] = t
    return ConstraintSet(p=p, targets=targets)


class _PreparedColumns:
    """Centered columns and variances for one (features, knockoffs) pair."""

    def __init__(self, features, knockoffs, names=None):
        F = _column_values(features)
        K = _column_values(knockoffs)
        if F.shape != K.shape:
            raise ValueError(f"feature shape {F.shape} != knockoff shape {K.shape}")
        p = F.shape[1]
        self.n, self.p = F.shape
        self.Fc = F - F.mean(axis=0)
        self.Kc = K - K.mean(axis=0)
        self.vF = np.mean(self.Fc ** 2, axis=0)
        self.vK = np.mean(self.Kc ** 2, axis=0)
        for j in range(p):
            if self.vF[j] < VARIANCE_FLOOR:
                raise DegenerateColumnError(_label(names, j), float(self.vF[j]))
            if self.vK[j] < VARIANCE_FLOOR:
                raise DegenerateColumnError(f"knockoff of {_label(names, j)}",
                                            float(self.vK[j]))

    def side(self, col, is_knockoff):
        if is_knockoff:
            return self.Kc[:, col], self.vK[col]
        return self.Fc[:, col], self.vF[col]


def _label(names, j):
    return names[j] if names else f"column {j}"


def _names_of(features):
    return features.columns if isinstance(features, DataMatrix) else None


def achieved_moments(features, knockoffs, cs: ConstraintSet) -> Dict[MomentKey, float]:
    """Evaluate every constrained co-moment with knockoff columns substituted."""
    prep = _PreparedColumns(features, knockoffs, _names_of(features))
    out = {}
    for key in cs.targets:
        a, va = prep.side(key.left_col, key.left_is_knockoff)
        b, vb = prep.side(key.right_col, key.right_is_knockoff)
        out[key] = _comoment_centered(a, b, va, vb, key.m, key.k)
    return out


def aggregate_residuals(features, knockoffs, cs: ConstraintSet) -> Tuple[float, float, float]:
    """Sum of squared (achieved - target) per moment order.

    Returns (correlation, coskewness, cokurtosis) aggregates; all three are
    zero iff every constraint in the group holds exactly.
    """
    prep = _PreparedColumns(features, knockoffs, _names_of(features))
    acc = {m: 0.0 for m in ORDERS}
    for key, target in cs.targets.items():
        a, va = prep.side(key.left_col, key.left_is_knockoff)
        b, vb = prep.side(key.right_col, key.right_is_knockoff)
        c = _comoment_centered(a, b, va, vb, key.m, key.k)
        acc[key.m] += (c - target) ** 2
    return acc[2], acc[3], acc[4]


def residual_gradient(features, knockoffs, cs: ConstraintSet):
    """Analytic gradient of each aggregate residual w.r.t. knockoff entries.

    Returns three (n, p) arrays, one per moment order, in the same order as
    ``aggregate_residuals``.
    """
    prep = _PreparedColumns(features, knockoffs, _names_of(features))
    grads = {m: np.zeros((prep.n, prep.p)) for m in ORDERS}
    for key, target in cs.targets.items():
        a, va = prep.side(key.left_col, key.left_is_knockoff)
        b, vb = prep.side(key.right_col, key.right_is_knockoff)
        c = _comoment_centered(a, b, va, vb, key.m, key.k)
        factor = 2.0 * (c - target)
        if factor == 0.0:
            continue
        d_left, d_right = _comoment_grads_centered(a, b, va, vb, key.m, key.k, c)
        g = grads[key.m]
        if key.left_is_knockoff:
            g[:, key.left_col] += factor * d_left
        if key.right_is_knockoff:
            g[:, key.right_col] += factor * d_right
    return grads[2], grads[3], grads[4]


def self_correlations(features, knockoffs):
    """corr(X_i, Xtilde_i) for every feature, as a length-p vector."""
    prep = _PreparedColumns(features, knockoffs, _names_of(features))
    out = np.empty(prep.p)
    for j in range(prep.p):
        out[j] = _comoment_centered(prep.Fc[:, j], prep.Kc[:, j],
                                    prep.vF[j], prep.vK[j], 2, 1)
    return out


def squared_correlation_objective(features, knockoffs):
    """(value, per-feature correlations, gradient) of sum_i corr(X_i, Xt_i)^2.

    The gradient is with respect to the knockoff entries; column j only
    depends on knockoff column j.
    """
    prep = _PreparedColumns(features, knockoffs, _names_of(features))
    rho = np.empty(prep.p)
    grad = np.zeros((prep.n, prep.p))
    for j in range(prep.p):
        a, va = prep.Fc[:, j], prep.vF[j]
        b, vb = prep.Kc[:, j], prep.vK[j]
        c = _comoment_centered(a, b, va, vb, 2, 1)
        rho[j] = c
        _, d_right = _comoment_grads_centered(a, b, va, vb, 2, 1, c)
        grad[:, j] = 2.0 * c * d_right
    return float(np.sum(rho ** 2)), rho, grad
