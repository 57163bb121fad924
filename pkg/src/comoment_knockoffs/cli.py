"""Command-line interface.

Subcommands compose through an output directory with fixed artifact names:
``synth`` writes dataset.csv, ``fit`` adds marginals.json and copula.json,
``init`` adds initial_guess.csv, ``optimize`` consumes those and writes the
knockoffs, trace and report; ``run`` is the whole pipeline, ``timegrid``
runs the timing table, ``plot`` renders figures from a persisted detail
trace.

Exit codes: 0 ok, 2 configuration error, 3 numeric failure. Errors print a
structured JSON diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import copula, harness, marginals, moments, plots, synthdata
from .datamatrix import DataMatrix
from .errors import ConfigError, DegenerateColumnError, NumericFailure
from .harness import CsvInput, ExperimentConfig, SyntheticInput
from .optimizer import OptimizerConfig, PenaltyWeights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_MARGINAL_NAMES = {"normal": "normal", "t": "student_t",
                   "student_t": "student_t", "empirical": "empirical"}


def _add_common(parser):
    parser.add_argument("--out", default="out", metavar="DIR",
                        help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=0)


def _add_data_flags(parser):
    parser.add_argument("--p", type=int, default=4, help="number of features")
    parser.add_argument("--n", type=int, default=100, help="number of observations")
    parser.add_argument("--beta", type=float, default=synthdata.DEFAULT_BETA_SCALE,
                        help="shuffle tilt strength scale (beta = BETA / n)")


def _add_optimizer_flags(parser):
    parser.add_argument("--iters", type=int, default=20, help="max iterations")
    parser.add_argument("--lr", type=float, default=OptimizerConfig.learning_rate)
    parser.add_argument("--tol", type=float, default=OptimizerConfig.tolerance)
    parser.add_argument("--weights", metavar="corr,coskew,cokurt,ks",
                        help="penalty weights, four comma-separated numbers")
    parser.add_argument("--detail-trace", action="store_true",
                        help="record per-pair achieved moments each iteration")
    parser.add_argument("--snapshots", metavar="I,J,...", default="3,10,20",
                        help="iterations to snapshot for the report")
    parser.add_argument("--restandardize", action="store_true",
                        help="rescale knockoff columns to the feature "
                             "mean/variance after each step")


def _add_marginal_flag(parser):
    parser.add_argument("--marginal", choices=("normal", "t", "empirical"),
                        default="t", help="marginal family for every column")


def _add_input_flag(parser, required=False):
    parser.add_argument("--input", metavar="CSV", required=required,
                        help="input dataset CSV (defaults to OUT/dataset.csv)")


def _parse_weights(text):
    if text is None:
        return PenaltyWeights()
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError("--weights needs exactly four values: corr,coskew,cokurt,ks")
    try:
        vals = [float(v) for v in parts]
    except ValueError as exc:
        raise ConfigError(f"bad --weights value: {exc}") from None
    return PenaltyWeights(corr=vals[0], coskew=vals[1], cokurt=vals[2], ks=vals[3])


def _parse_snapshots(text):
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --snapshots value: {exc}") from None


def _optimizer_config(args):
    return OptimizerConfig(
        max_iterations=args.iters,
        learning_rate=args.lr,
        tolerance=args.tol,
        penalty_weights=_parse_weights(args.weights),
        seed=args.seed,
        restandardize_columns=args.restandardize,
        detail_trace=args.detail_trace,
        snapshot_iterations=_parse_snapshots(args.snapshots),
    )


def _dataset_path(args):
    if getattr(args, "input", None):
        return Path(args.input)
    return Path(args.out) / "dataset.csv"


def _load_dataset(args):
    path = _dataset_path(args)
    if not path.exists():
        raise ConfigError(f"dataset not found: {path} (run `synth` first or "
                          "pass --input)")
    return DataMatrix.from_csv(path)


def _require(path, hint):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path} not found ({hint})")
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scheme = synthdata.ShuffleScheme(p=args.p, beta_scale=args.beta)
    data = synthdata.make_dataset(args.p, args.n, args.seed, args.beta)
    synthdata.save_dataset(data, out / "dataset.csv", args.seed, scheme)
    print(out / "dataset.csv")
    return EXIT_OK


def cmd_fit(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(args)
    models = marginals.fit_marginals(data, _MARGINAL_NAMES[args.marginal])
    marginals.save_marginals(models, out / "marginals.json")
    cop = copula.fit_copula(data, models)
    cop.save(out / "copula.json")
    print(out / "copula.json")
    return EXIT_OK


def cmd_init(args):
    out = Path(args.out)
    data = _load_dataset(args)
    cop = copula.GaussianCopulaModel.load(
        _require(out / "copula.json", "run `fit` first"))
    guess = copula.initial_guess(data, cop, args.seed)
    guess.to_csv(out / "initial_guess.csv")
    print(out / "initial_guess.csv")
    return EXIT_OK


def cmd_optimize(args):
    from .optimizer import optimize

    out = Path(args.out)
    data = _load_dataset(args)
    models = marginals.load_marginals(
        _require(out / "marginals.json", "run `fit` first"))
    guess = DataMatrix.from_csv(
        _require(out / "initial_guess.csv", "run `init` first"))
    cs = moments.build_constraints(data)
    cfg = _optimizer_config(args)
    detail_path = out / "trace_detail.csv" if cfg.detail_trace else None
    sink = harness.CsvTraceSink(out / "trace.csv", detail_path=detail_path,
                                key_order=cs.keys if detail_path else None,
                                columns=data.columns)
    try:
        result = optimize(data, guess, models, cs, cfg, trace_sink=sink)
    finally:
        sink.close()
    result.knockoffs.to_csv(out / "knockoffs.csv")
    for it, snap in sorted(result.snapshots.items()):
        snap.to_csv(out / f"knockoffs_iter{it}.csv")
    config = ExperimentConfig(input=CsvInput(path=str(_dataset_path(args))),
                              marginal_kind=_MARGINAL_NAMES[args.marginal],
                              optimizer=cfg, outdir=str(out), make_plots=False)
    report = harness.build_report(config, data, models, result, cs, guess)
    harness.save_report(report, out / "report.json")
    print(out / "report.json")
    return EXIT_OK


def cmd_run(args):
    if args.input and args.synthetic:
        raise ConfigError("choose exactly one input source: --input or --synthetic")
    if args.input:
        source = CsvInput(path=args.input)
    else:
        source = SyntheticInput(p=args.p, n=args.n, seed=args.seed,
                                beta_scale=args.beta)
    config = ExperimentConfig(
        input=source,
        marginal_kind=_MARGINAL_NAMES[args.marginal],
        optimizer=_optimizer_config(args),
        outdir=args.out,
        make_plots=not args.no_plots,
    )
    harness.run_experiment(config)
    print(Path(args.out) / "report.json")
    return EXIT_OK


def cmd_timegrid(args):
    if args.cells:
        cells = []
        for token in args.cells.split(";"):
            try:
                n, p, iters = (int(v) for v in token.split(","))
            except ValueError as exc:
                raise ConfigError(f"bad --cells token {token!r}: {exc}") from None
            cells.append((n, p, iters))
    else:
        cells = list(harness.DEFAULT_GRID)
    path = harness.time_grid(cells, args.out, seed=args.seed,
                             marginal_kind=_MARGINAL_NAMES[args.marginal])
    print(path)
    return EXIT_OK


def cmd_plot(args):
    out = Path(args.out)
    data = _load_dataset(args)
    cs = moments.build_constraints(data)
    detail = harness.load_detail_trace(
        _require(out / "trace_detail.csv",
                 "run `optimize` or `run` with --detail-trace first"),
        data.columns)
    for path in plots.emit_plots(detail, cs, out):
        print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="comoment-knockoffs",
        description="Model-X knockoffs by co-moment constrained optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p_synth)
    _add_data_flags(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_fit = sub.add_parser("fit", help="fit marginals and the Gaussian copula")
    _add_common(p_fit)
    _add_marginal_flag(p_fit)
    _add_input_flag(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_init = sub.add_parser("init", help="draw the copula initial guess")
    _add_common(p_init)
    _add_input_flag(p_init)
    p_init.set_defaults(func=cmd_init)

    p_opt = sub.add_parser("optimize", help="run the optimizer from a "
                                            "persisted initial guess")
    _add_common(p_opt)
    _add_input_flag(p_opt)
    _add_marginal_flag(p_opt)
    _add_optimizer_flags(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_run = sub.add_parser("run", help="end-to-end experiment")
    _add_common(p_run)
    p_run.add_argument("--synthetic", action="store_true",
                       help="use the synthetic generator (default when no --input)")
    _add_input_flag(p_run)
    _add_data_flags(p_run)
    _add_marginal_flag(p_run)
    _add_optimizer_flags(p_run)
    p_run.add_argument("--no-plots", action="store_true",
                       help="skip SVG figure emission")
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("timegrid", help="timing table over (n, p, iterations)")
    _add_common(p_grid)
    _add_marginal_flag(p_grid)
    p_grid.add_argument("--cells", metavar="n,p,iters;...",
                        help="grid cells (default: the 12-cell benchmark grid)")
    p_grid.set_defaults(func=cmd_timegrid)

    p_plot = sub.add_parser("plot", help="render constraint figures from a "
                                         "persisted detail trace")
    _add_common(p_plot)
    _add_input_flag(p_plot)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def _diagnostic(exc):
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, DegenerateColumnError, ValueError,
            ArithmeticError, np.linalg.LinAlgError) as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
