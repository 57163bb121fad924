"""End-to-end experiment orchestration and report emission.

An experiment = dataset (synthetic or CSV) -> fitted marginals -> Gaussian
copula -> initial guess -> penalty-method optimization -> artifacts. Every
number in the report JSON can be recomputed from the persisted CSVs (the
dataset, the initial guess, the per-iteration snapshots and the final
knockoffs), which is what keeps the report auditable. Wall-clock times only
ever appear in the trace CSV and the timing grid, so the report JSON and
knockoff CSV are byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import copula, kstest, marginals, moments, plots, synthdata
from .datamatrix import DataMatrix
from .errors import ConfigError
from .moments import ConstraintSet, MomentKey
from .optimizer import (IterationTrace, KnockoffResult, OptimizerConfig,
                        optimize)

QUARTILE_PROBS = (0.0, 0.25, 0.5, 0.75, 1.0)
QUARTILE_LABELS = ("min", "q25", "q50", "q75", "max")

TRACE_COLUMNS = ("iteration", "objective", "corr_residual", "coskew_residual",
                 "cokurt_residual", "ks_penalty", "elapsed_ms")


@dataclass(frozen=True)
class SyntheticInput:
    p: int = 4
    n: int = 100
    seed: int = 0
    beta_scale: float = synthdata.DEFAULT_BETA_SCALE

    def describe(self):
        return {"kind": "synthetic", "p": self.p, "n": self.n,
                "seed": self.seed, "beta_scale": self.beta_scale}


@dataclass(frozen=True)
class CsvInput:
    path: str

    def describe(self):
        return {"kind": "csv", "path": str(self.path)}


@dataclass
class ExperimentConfig:
    """One experiment: exactly one input source, marginal choice, optimizer
    settings, and an output directory."""

    input: object = field(default_factory=SyntheticInput)
    marginal_kind: str = "student_t"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    outdir: str = "out"
    make_plots: bool = True

    def validate(self):
        if not isinstance(self.input, (SyntheticInput, CsvInput)):
            raise ConfigError("input must be SyntheticInput or CsvInput")
        if self.marginal_kind not in marginals.KINDS:
            raise ConfigError(f"unknown marginal kind {self.marginal_kind!r}")
        self.optimizer.validate()

    @property
    def seed(self):
        return self.input.seed if isinstance(self.input, SyntheticInput) else 0

    @property
    def guess_seed(self):
        # distinct from the dataset seed so the copula noise never reuses
        # the generator stream that produced the data itself
        return self.seed + 1


class CsvTraceSink:
    """Streams trace rows to CSV, flushing after every row so long runs are
    observable while they execute."""

    def __init__(self, path, detail_path=None, key_order=None, columns=None):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(TRACE_COLUMNS)
        self._fh.flush()
        self._detail_fh = None
        self._detail_writer = None
        if detail_path is not None:
            if key_order is None:
                raise ValueError("detail sink needs the canonical key order")
            self.key_order = list(key_order)
            self._detail_fh = Path(detail_path).open("w", newline="")
            self._detail_writer = csv.writer(self._detail_fh)
            names = [key_id(k, columns) for k in self.key_order]
            self._detail_writer.writerow(["iteration"] + names)
            self._detail_fh.flush()

    def __call__(self, entry: IterationTrace):
        self._writer.writerow([
            entry.iteration,
            repr(entry.objective),
            repr(entry.corr_residual),
            repr(entry.coskew_residual),
            repr(entry.cokurt_residual),
            repr(entry.ks_penalty_total),
            repr(entry.wall_clock_ms),
        ])
        self._fh.flush()
        if self._detail_writer is not None and entry.per_pair_moments is not None:
            row = [entry.iteration] + [repr(entry.per_pair_moments[k])
                                       for k in self.key_order]
            self._detail_writer.writerow(row)
            self._detail_fh.flush()

    def close(self):
        self._fh.close()
        if self._detail_fh is not None:
            self._detail_fh.close()


_VARIANT_TAG = {0: "tf", 1: "ft", 2: "tt"}
_TAG_VARIANT = {"tf": (True, False), "ft": (False, True), "tt": (True, True)}


def key_id(key: MomentKey, columns=None) -> str:
    """Stable readable id, e.g. ``m4k1:x1:x2:tf`` (t = knockoff side)."""
    if columns is not None:
        left, right = columns[key.left_col], columns[key.right_col]
    else:
        left, right = f"c{key.left_col}", f"c{key.right_col}"
    return f"m{key.m}k{key.k}:{left}:{right}:{_VARIANT_TAG[key.variant]}"


def parse_key_id(token: str, columns) -> MomentKey:
    mk, left, right, tag = token.split(":")
    m, k = int(mk[1]), int(mk[3])
    flags = _TAG_VARIANT[tag]
    return MomentKey(columns.index(left), columns.index(right), m, k, *flags)


def load_detail_trace(path, columns):
    """Rebuild (iteration, per-key achieved values) entries from the detail CSV."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        keys = [parse_key_id(tok, columns) for tok in header[1:]]
        entries = []
        for row in reader:
            if not row:
                continue
            detail = {key: float(val) for key, val in zip(keys, row[1:])}
            entries.append(_DetailEntry(iteration=int(row[0]),
                                        per_pair_moments=detail))
    return entries


@dataclass
class _DetailEntry:
    iteration: int
    per_pair_moments: dict


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

def _quartiles(values):
    qs = np.quantile(np.asarray(values, dtype=float), QUARTILE_PROBS)
    return {label: float(v) for label, v in zip(QUARTILE_LABELS, qs)}


def _column_summary(data: DataMatrix, models):
    return {
        "mean": [float(v) for v in data.values.mean(axis=0)],
        "variance": [float(v) for v in data.values.var(axis=0)],
        "ks_p_value": [float(kstest.ks_test(data.column(j), models[j]).p_value)
                       for j in range(data.p)],
    }


def _residual_entry(features, data, cs):
    r2, r3, r4 = moments.aggregate_residuals(features, data, cs)
    return {"correlation": float(r2), "coskewness": float(r3),
            "cokurtosis": float(r4)}


def build_report(config: ExperimentConfig, features: DataMatrix,
                 models, result: KnockoffResult, cs: ConstraintSet,
                 guess: DataMatrix) -> dict:
    """Assemble the report document (no wall-clock content)."""
    opt = result.config
    snapshots = {str(it): data for it, data in sorted(result.snapshots.items())}
    report = {
        "schema_version": 1,
        "input": config.input.describe(),
        "marginal_kind": config.marginal_kind,
        "columns": list(features.columns),
        "optimizer": {
            "max_iterations": opt.max_iterations,
            "learning_rate": opt.learning_rate,
            "tolerance": opt.tolerance,
            "objective_weight": opt.objective_weight,
            "penalty_weights": {
                "corr": opt.penalty_weights.corr,
                "coskew": opt.penalty_weights.coskew,
                "cokurt": opt.penalty_weights.cokurt,
                "ks": opt.penalty_weights.ks,
            },
            "seed": opt.seed,
            "restandardize_columns": opt.restandardize_columns,
            "snapshot_iterations": list(opt.snapshot_iterations),
        },
        "iterations_run": result.iterations_run,
        "best_iteration": result.best_iteration,
        "summary": {
            "targets": {
                "mean": [float(v) for v in features.values.mean(axis=0)],
                "variance": [float(v) for v in features.values.var(axis=0)],
            },
            "initial_guess": _column_summary(guess, models),
            "iterations": {it: _column_summary(data, models)
                           for it, data in snapshots.items()},
            "final": _column_summary(result.knockoffs, models),
        },
        "correlations": {
            "initial_guess": [float(v) for v in
                              moments.self_correlations(features, guess)],
            "iterations": {it: [float(v) for v in
                                moments.self_correlations(features, data)]
                           for it, data in snapshots.items()},
            "final": [float(v) for v in result.final_correlations],
        },
        "quartiles": {
            "correlation": _quartiles(result.final_correlations),
            "abs_correlation": _quartiles(np.abs(result.final_correlations)),
            "feature_ks_p_value": _quartiles(
                [kstest.ks_test(features.column(j), models[j]).p_value
                 for j in range(features.p)]),
            "initial_guess_ks_p_value": _quartiles(
                [kstest.ks_test(guess.column(j), models[j]).p_value
                 for j in range(guess.p)]),
            "knockoff_ks_p_value": _quartiles(result.final_ks_pvalues),
        },
        "constraint_trace": {
            "initial_guess": _residual_entry(features, guess, cs),
            "iterations": {it: _residual_entry(features, data, cs)
                           for it, data in snapshots.items()},
            "final": _residual_entry(features, result.knockoffs, cs),
        },
    }
    return report


def save_report(report: dict, path):
    Path(path).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Experiment pipeline
# ---------------------------------------------------------------------------

def load_input(config: ExperimentConfig) -> DataMatrix:
    if isinstance(config.input, CsvInput):
        return DataMatrix.from_csv(config.input.path)
    src = config.input
    return synthdata.make_dataset(src.p, src.n, src.seed, src.beta_scale)


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the full pipeline and persist every artifact.

    Returns the report document. Artifacts written to ``config.outdir``:
    dataset.csv(+.json sidecar), marginals.json, copula.json,
    initial_guess.csv, knockoffs.csv, knockoffs_iter*.csv, trace.csv,
    trace_detail.csv (when detail is on), report.json, and one SVG per
    moment family (when plots are on).
    """
    config.validate()
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    features = load_input(config)
    if isinstance(config.input, SyntheticInput):
        scheme = synthdata.ShuffleScheme(p=features.p,
                                         beta_scale=config.input.beta_scale)
        synthdata.save_dataset(features, outdir / "dataset.csv",
                               config.input.seed, scheme)
    else:
        features.to_csv(outdir / "dataset.csv")

    models = marginals.fit_marginals(features, config.marginal_kind)
    marginals.save_marginals(models, outdir / "marginals.json")

    cop = copula.fit_copula(features, models)
    cop.save(outdir / "copula.json")

    guess = copula.initial_guess(features, cop, config.guess_seed)
    guess.to_csv(outdir / "initial_guess.csv")

    cs = moments.build_constraints(features)

    opt_cfg = config.optimizer
    if config.make_plots and not opt_cfg.detail_trace:
        # the figures need the per-pair moment history
        opt_cfg = replace(opt_cfg, detail_trace=True)

    detail_path = outdir / "trace_detail.csv" if opt_cfg.detail_trace else None
    sink = CsvTraceSink(outdir / "trace.csv", detail_path=detail_path,
                        key_order=cs.keys if detail_path else None,
                        columns=features.columns)
    try:
        result = optimize(features, guess, models, cs, opt_cfg, trace_sink=sink)
    finally:
        sink.close()

    result.knockoffs.to_csv(outdir / "knockoffs.csv")
    for it, data in sorted(result.snapshots.items()):
        data.to_csv(outdir / f"knockoffs_iter{it}.csv")

    report = build_report(config, features, models, result, cs, guess)
    save_report(report, outdir / "report.json")

    if config.make_plots:
        plots.emit_plots([result.initial] + result.trace, cs, outdir)

    return report


# ---------------------------------------------------------------------------
# Timing grid
# ---------------------------------------------------------------------------

DEFAULT_GRID = tuple((n, p, iters)
                     for n in (100, 1000) for p in (4, 8)
                     for iters in (3, 10, 20))

TIMEGRID_COLUMNS = ("n", "p", "total_observations", "iterations", "status",
                    "elapsed_hms", "elapsed_ms")


def format_hms(ms: float) -> str:
    total = int(round(ms / 1000.0))
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h}:{m:02d}:{s:02d}"


def time_grid(cells, outdir, seed=0, marginal_kind="student_t",
              base_optimizer: Optional[OptimizerConfig] = None,
              path_name="timegrid.csv"):
    """Run each (n, p, iterations) cell sequentially and record wall time.

    Per-cell failures are recorded in the status column and the grid
    continues. Returns the CSV path.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / path_name
    base = base_optimizer or OptimizerConfig()
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TIMEGRID_COLUMNS)
        fh.flush()
        for n, p, iters in cells:
            cell_dir = outdir / f"cell_n{n}_p{p}_it{iters}"
            cfg = ExperimentConfig(
                input=SyntheticInput(p=p, n=n, seed=seed),
                marginal_kind=marginal_kind,
                optimizer=replace(base, max_iterations=iters,
                                  # timing: no early stop inside the horizon
                                  tolerance=min(base.tolerance, 1e-300),
                                  detail_trace=False),
                outdir=str(cell_dir),
                make_plots=False,
            )
            start = time.perf_counter()
            try:
                run_experiment(cfg)
                status = "ok"
            except Exception as exc:  # per-cell failure: record and continue
                status = f"error: {type(exc).__name__}"
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            writer.writerow([n, p, n * p, iters, status,
                             format_hms(elapsed_ms), repr(elapsed_ms)])
            fh.flush()
    return path
