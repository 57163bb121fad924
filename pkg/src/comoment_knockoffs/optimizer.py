"""Penalty-method gradient descent for knockoff construction.

Minimizes
    L = objective_weight * sum_i corr(X_i, Xt_i)^2
      + w_corr * R_2 + w_coskew * R_3 + w_cokurt * R_4
      + w_ks * sum_j D_j^2
by plain gradient steps on the knockoff entries, with automatic halving of
the learning rate whenever a step fails to decrease L (or produces a
non-finite value). The reported knockoffs are the best iterate seen, not
necessarily the last one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import kstest, moments
from .datamatrix import DataMatrix
from .errors import ConfigError, DegenerateColumnError, NumericFailure
from .moments import ConstraintSet

MAX_RATE_HALVINGS = 10

DEFAULT_SNAPSHOTS = (3, 10, 20)


@dataclass(frozen=True)
class PenaltyWeights:
    """Relative strength of each constraint family in the penalized objective.

    Defaults put the initial-guess penalty terms within about two orders of
    magnitude of each other on the synthetic benchmark.
    """

    corr: float = 1e2
    coskew: float = 1e1
    cokurt: float = 1e0
    ks: float = 1e1

    def validate(self):
        for name in ("corr", "coskew", "cokurt", "ks"):
            if getattr(self, name) < 0:
                raise ConfigError(f"penalty weight {name} must be >= 0")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 20
    learning_rate: float = 0.05
    tolerance: float = 1e-8
    penalty_weights: PenaltyWeights = field(default_factory=PenaltyWeights)
    objective_weight: float = 1.0
    seed: int = 0                      # reserved; plain descent draws nothing
    restandardize_columns: bool = False
    detail_trace: bool = False
    snapshot_iterations: tuple = DEFAULT_SNAPSHOTS

    def validate(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be > 0")
        if self.objective_weight < 0:
            raise ConfigError("objective_weight must be >= 0")
        self.penalty_weights.validate()


@dataclass
class IterationTrace:
    """State of the penalized objective after one iteration (0 = initial guess)."""

    iteration: int
    objective: float
    corr_residual: float
    coskew_residual: float
    cokurt_residual: float
    ks_penalty_total: float
    penalized_total: float
    learning_rate: float
    self_correlations: np.ndarray
    column_means: np.ndarray
    column_variances: np.ndarray
    column_ks_pvalues: np.ndarray
    wall_clock_ms: float = 0.0
    per_pair_moments: Optional[Dict] = None


@dataclass
class KnockoffResult:
    knockoffs: DataMatrix
    initial: IterationTrace
    trace: List[IterationTrace]
    final_correlations: np.ndarray
    final_ks_pvalues: np.ndarray
    best_iteration: int
    iterations_run: int
    snapshots: Dict[int, DataMatrix]
    config: OptimizerConfig


def objective(features, knockoffs) -> float:
    """Eq-style target: the sum of squared feature/knockoff correlations."""
    rho = moments.self_correlations(features, knockoffs)
    return float(np.sum(rho ** 2))


def step(knockoffs, gradient, learning_rate):
    """One elementwise descent update (pure)."""
    k = np.asarray(knockoffs, dtype=float)
    return k - learning_rate * np.asarray(gradient, dtype=float)


def _match_column_moments(values, reference):
    """Rescale each column to the reference column's mean and variance."""
    mu_k = values.mean(axis=0)
    sd_k = values.std(axis=0)
    mu_f = reference.mean(axis=0)
    sd_f = reference.std(axis=0)
    return (values - mu_k) / sd_k * sd_f + mu_f


class _Problem:
    """Bundles the fixed data of one optimize() call."""

    def __init__(self, features: DataMatrix, marginals, cs: ConstraintSet,
                 cfg: OptimizerConfig):
        self.features = features
        self.marginals = marginals
        self.cs = cs
        self.cfg = cfg
        self.w = cfg.penalty_weights

    def evaluate(self, k_values):
        """All penalty terms and reporting stats at one knockoff matrix."""
        f = self.features
        obj, rho, _ = moments.squared_correlation_objective(f, k_values)
        r2, r3, r4 = moments.aggregate_residuals(f, k_values, self.cs)
        ks_pvalues = np.empty(f.p)
        ks_total = 0.0
        for j in range(f.p):
            res = kstest.ks_test(k_values[:, j], self.marginals[j])
            ks_pvalues[j] = res.p_value
            ks_total += res.statistic ** 2
        total = (self.cfg.objective_weight * obj + self.w.corr * r2
                 + self.w.coskew * r3 + self.w.cokurt * r4 + self.w.ks * ks_total)
        return IterationTrace(
            iteration=-1,
            objective=obj,
            corr_residual=r2,
            coskew_residual=r3,
            cokurt_residual=r4,
            ks_penalty_total=ks_total,
            penalized_total=total,
            learning_rate=float("nan"),
            self_correlations=rho,
            column_means=k_values.mean(axis=0),
            column_variances=k_values.var(axis=0),
            column_ks_pvalues=ks_pvalues,
        )

    def try_evaluate(self, k_values):
        """Evaluation that reports failure as None instead of raising, so a
        bad trial step can be retried with a smaller rate."""
        if not np.isfinite(k_values).all():
            return None
        try:
            trace = self.evaluate(k_values)
        except DegenerateColumnError:
            return None
        if not np.isfinite(trace.penalized_total):
            return None
        return trace

    def gradient(self, k_values):
        f = self.features
        _, _, g_obj = moments.squared_correlation_objective(f, k_values)
        g2, g3, g4 = moments.residual_gradient(f, k_values, self.cs)
        g = (self.cfg.objective_weight * g_obj + self.w.corr * g2
             + self.w.coskew * g3 + self.w.cokurt * g4)
        if self.w.ks > 0:
            for j in range(f.p):
                _, gk = kstest.ks_penalty_grad(k_values[:, j], self.marginals[j])
                g[:, j] += self.w.ks * gk
        return g


def penalized_objective(features, knockoffs, marginals, cs, cfg) -> float:
    """L at one point (used by tests and diagnostics)."""
    values = knockoffs.values if isinstance(knockoffs, DataMatrix) else np.asarray(knockoffs, float)
    return _Problem(features, marginals, cs, cfg).evaluate(values).penalized_total


def penalized_gradient(features, knockoffs, marginals, cs, cfg) -> np.ndarray:
    """Analytic gradient of L with respect to the knockoff entries."""
    values = knockoffs.values if isinstance(knockoffs, DataMatrix) else np.asarray(knockoffs, float)
    return _Problem(features, marginals, cs, cfg).gradient(values)


def optimize(features: DataMatrix, initial_guess: DataMatrix, marginals,
             cs: ConstraintSet, cfg: OptimizerConfig,
             trace_sink: Optional[Callable[[IterationTrace], None]] = None
             ) -> KnockoffResult:
    """Run the penalty-method descent from the initial guess.

    ``trace_sink`` is called with every IterationTrace as soon as it exists
    (iteration 0 = the initial guess), so long runs are observable while
    they execute.
    """
    cfg.validate()
    if initial_guess.values.shape != features.values.shape:
        raise ConfigError("initial guess shape does not match features")
    if len(marginals) != features.p:
        raise ConfigError("one marginal per feature required")

    problem = _Problem(features, marginals, cs, cfg)
    start = time.perf_counter()

    def attach_detail(entry, values):
        if cfg.detail_trace and entry.per_pair_moments is None:
            entry.per_pair_moments = moments.achieved_moments(features, values, cs)

    current = initial_guess.values.copy()
    state = problem.evaluate(current)
    attach_detail(state, current)
    state.iteration = 0
    state.learning_rate = cfg.learning_rate
    state.wall_clock_ms = (time.perf_counter() - start) * 1000.0
    if not np.isfinite(state.penalized_total):
        raise NumericFailure("penalized objective is non-finite at the initial guess")
    if trace_sink is not None:
        trace_sink(state)

    initial = state
    best_l = state.penalized_total
    best_values = current.copy()
    best_iteration = 0

    rate = cfg.learning_rate
    trace: List[IterationTrace] = []
    snapshots: Dict[int, DataMatrix] = {}
    l_prev = state.penalized_total

    for it in range(1, cfg.max_iterations + 1):
        grad = problem.gradient(current)
        accepted = None
        moved = False
        for halving in range(MAX_RATE_HALVINGS + 1):
            candidate = step(current, grad, rate)
            if cfg.restandardize_columns:
                candidate = _match_column_moments(candidate, features.values)
            if np.array_equal(candidate, current):
                break  # zero rate or zero gradient: nothing to try
            cand_state = problem.try_evaluate(candidate)
            if cand_state is not None and cand_state.penalized_total < l_prev:
                accepted = cand_state
                current = candidate
                moved = True
                break
            if halving == MAX_RATE_HALVINGS:
                if cand_state is None:
                    raise NumericFailure(
                        f"iteration {it}: step produced a non-finite penalized "
                        f"objective even after {MAX_RATE_HALVINGS} learning-rate "
                        f"halvings (rate {rate:.3e}); reduce the learning rate")
                break  # finite but no decrease: plateau, keep current iterate
            rate *= 0.5

        if accepted is None:
            # no movement this iteration; re-log the current state
            accepted = problem.evaluate(current)
        attach_detail(accepted, current)
        accepted.iteration = it
        accepted.learning_rate = rate
        accepted.wall_clock_ms = (time.perf_counter() - start) * 1000.0
        trace.append(accepted)
        if trace_sink is not None:
            trace_sink(accepted)
        if it in cfg.snapshot_iterations:
            snapshots[it] = features.with_values(current.copy())

        if accepted.penalized_total < best_l:
            best_l = accepted.penalized_total
            best_values = current.copy()
            best_iteration = it

        improvement = l_prev - accepted.penalized_total
        l_prev = accepted.penalized_total
        if not moved or improvement < cfg.tolerance:
            break

    knockoffs = features.with_values(best_values)
    final = problem.evaluate(best_values)
    return KnockoffResult(
        knockoffs=knockoffs,
        initial=initial,
        trace=trace,
        final_correlations=final.self_correlations,
        final_ks_pvalues=final.column_ks_pvalues,
        best_iteration=best_iteration,
        iterations_run=len(trace),
        snapshots=snapshots,
        config=cfg,
    )
