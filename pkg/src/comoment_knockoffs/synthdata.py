"""Synthetic benchmark data: independent standard normal columns whose
elements are then reshuffled to induce non-zero correlation, coskewness and
cokurtosis between columns.

The rule for column i (1-based) follows mod(i, 4):
    1 -> smaller observations weighted towards the end of the sample
    2 -> larger observations weighted towards the end
    3 -> observations close to the mean weighted towards the end
    0 -> left unchanged

"Weighted towards the end" is realized as sequential weighted draws without
replacement filling positions from last to first, with selection weight
exp(beta * score(rank)); beta defaults to 3/n. Shuffling permutes values
only, so every column's marginal distribution is exactly preserved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamatrix import DataMatrix
from .moments import build_constraints
from .rng import make_rng

RULES = ("unchanged", "smaller_to_end", "larger_to_end", "central_to_end")

_RULE_BY_MOD = {1: "smaller_to_end", 2: "larger_to_end", 3: "central_to_end",
                0: "unchanged"}

DEFAULT_BETA_SCALE = 3.0


def rule_for_column(index_1based: int) -> str:
    return _RULE_BY_MOD[index_1based % 4]


@dataclass(frozen=True)
class ShuffleScheme:
    """Per-column shuffle rules plus the tilt strength beta = beta_scale / n."""

    p: int
    beta_scale: float = DEFAULT_BETA_SCALE

    @property
    def rules(self):
        return [rule_for_column(i + 1) for i in range(self.p)]


def _rank_scores(rule, n):
    r = np.arange(n, dtype=float)
    if rule == "smaller_to_end":
        return -r
    if rule == "larger_to_end":
        return r
    if rule == "central_to_end":
        return -np.abs(r - n / 2.0)
    raise ValueError(f"unknown rule {rule!r}")


def _weighted_end_shuffle(col, rule, beta, rng):
    """Permutation equivalent in law to sequential weighted draws without
    replacement placed from the last position backwards (Efraimidis-Spirakis
    keys: sort log(u)/w descending = draw order)."""
    n = len(col)
    rank = np.empty(n, dtype=int)
    rank[np.argsort(col, kind="stable")] = np.arange(n)
    weights = np.exp(beta * _rank_scores(rule, n)[rank])
    keys = np.log(rng.random(n)) / weights
    draw_order = np.argsort(-keys, kind="stable")
    return col[draw_order[::-1]]


def generate(p, n, seed) -> DataMatrix:
    """p independent standard normal columns of length n, deterministic per seed."""
    if p < 1 or n < 2:
        raise ValueError("generate needs p >= 1 and n >= 2")
    rng = make_rng(seed)
    return DataMatrix(rng.standard_normal((n, p)))


def shuffle(data: DataMatrix, scheme: ShuffleScheme, seed) -> DataMatrix:
    """Apply the per-column end-weighting rules; each column stays a
    permutation of its input (multiset preserved exactly)."""
    if scheme.p != data.p:
        raise ValueError(f"scheme is for p={scheme.p}, data has p={data.p}")
    n = data.n
    beta = scheme.beta_scale / n
    out = data.values.copy()
    for j, rule in enumerate(scheme.rules):
        if rule == "unchanged":
            continue
        out[:, j] = _weighted_end_shuffle(data.values[:, j], rule, beta,
                                          make_rng(seed, stream=j))
    return data.with_values(out)


def make_dataset(p, n, seed, beta_scale=DEFAULT_BETA_SCALE) -> DataMatrix:
    """Generate + shuffle in one step (the standard benchmark input)."""
    scheme = ShuffleScheme(p=p, beta_scale=beta_scale)
    return shuffle(generate(p, n, seed), scheme, seed)


def induced_moments_report(data: DataMatrix):
    """All canonical feature-feature moments, keyed by (i, j, m, k).

    Used to confirm the shuffle produced non-trivial cross-moment targets.
    """
    return build_constraints(data).pair_slot_targets()


def save_dataset(data: DataMatrix, path, seed, scheme: ShuffleScheme):
    """Write the dataset CSV plus a JSON sidecar recording how it was made."""
    path = Path(path)
    data.to_csv(path)
    sidecar = {
        "schema_version": 1,
        "seed": int(seed),
        "p": data.p,
        "n": data.n,
        "beta_scale": scheme.beta_scale,
        "rules": scheme.rules,
    }
    side_path = path.with_suffix(".json")
    side_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return side_path
