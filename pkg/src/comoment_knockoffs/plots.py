"""Constraint-adherence figures: per-pair achieved moments over iterations.

One SVG per moment family (correlation, coskewness, cokurtosis), one subplot
per split k. Within a pair's colour group the two feature/knockoff variants
are solid, the knockoff/knockoff variant is dashed, and the target is a
dotted horizontal line. For p >= 8 only five quintile-representative pairs
are drawn (pairs ranked by mean absolute target within the family,
representatives at the quintile midpoints).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .moments import GROUP_NAMES, ConstraintSet  # noqa: E402

QUINTILE_MIDPOINTS = (0.1, 0.3, 0.5, 0.7, 0.9)

_VARIANT_STYLE = {0: "-", 1: "-", 2: "--"}

plt.rcParams["svg.hashsalt"] = "comoment-knockoffs"


def _detail_or_raise(entries):
    if not entries:
        raise ValueError("cannot plot an empty iteration trace")
    for entry in entries:
        if entry.per_pair_moments is None:
            raise ValueError(
                "trace has no per-pair moment detail; rerun with the "
                "detail-trace flag enabled")
    return entries


def representative_pairs(cs: ConstraintSet, m: int, max_pairs: int = 7):
    """All pairs when few; otherwise quintile representatives by target size."""
    by_pair = {}
    for key, target in cs.targets.items():
        if key.m != m or key.variant != 0:
            continue
        by_pair.setdefault((key.left_col, key.right_col), []).append(abs(target))
    pairs = sorted(by_pair, key=lambda pr: (sum(by_pair[pr]) / len(by_pair[pr]), pr))
    if len(pairs) <= max_pairs:
        return sorted(pairs)
    picked = [pairs[round(q * (len(pairs) - 1))] for q in QUINTILE_MIDPOINTS]
    return sorted(dict.fromkeys(picked))


def pair_curves(entries, cs: ConstraintSet, m: int):
    """Plot data for one moment family.

    Returns (iterations, curves, targets) where curves maps each plotted
    MomentKey to its list of achieved values and targets maps it to the
    constraint target (the dotted line's exact y-value).
    """
    entries = _detail_or_raise(entries)
    pairs = set(representative_pairs(cs, m))
    iterations = [entry.iteration for entry in entries]
    curves = {}
    targets = {}
    for key, target in cs.targets.items():
        if key.m != m or (key.left_col, key.right_col) not in pairs:
            continue
        curves[key] = [entry.per_pair_moments[key] for entry in entries]
        targets[key] = target
    return iterations, curves, targets


def emit_plots(entries, cs: ConstraintSet, outdir) -> list:
    """Write one self-contained SVG per moment family; returns the paths.

    ``entries`` is the iteration trace (the initial guess first, when
    available), each entry carrying per-pair moment detail.
    """
    _detail_or_raise(entries)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    colors = plt.get_cmap("tab10").colors
    paths = []
    for m, family in GROUP_NAMES.items():
        iterations, curves, targets = pair_curves(entries, cs, m)
        ks = sorted({key.k for key in curves})
        fig, axes = plt.subplots(1, len(ks), figsize=(4.5 * len(ks), 3.6),
                                 squeeze=False, sharex=True)
        pair_order = sorted({(k.left_col, k.right_col) for k in curves})
        color_of = {pair: colors[idx % len(colors)]
                    for idx, pair in enumerate(pair_order)}
        for ax, k in zip(axes[0], ks):
            for key, values in sorted(curves.items()):
                if key.k != k:
                    continue
                pair = (key.left_col, key.right_col)
                ax.plot(iterations, values, _VARIANT_STYLE[key.variant],
                        color=color_of[pair], linewidth=1.2)
                ax.axhline(targets[key], color=color_of[pair],
                           linestyle=":", linewidth=1.0)
            ax.set_title(f"{family} (k={k})")
            ax.set_xlabel("iteration")
        axes[0][0].set_ylabel("moment value")
        fig.suptitle(f"{family.capitalize()} constraint adherence")
        fig.tight_layout()
        path = outdir / f"{family}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths
