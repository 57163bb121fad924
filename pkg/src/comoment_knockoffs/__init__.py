"""Model-X knockoffs by constrained co-moment optimization.

The pipeline: fit per-feature marginals, map the features to latent normal
scores through a Gaussian copula, draw a second-order knockoff as the
initial guess, then run a penalty-method gradient descent that matches
every cross correlation / coskewness / cokurtosis constraint while driving
the feature-knockoff correlations toward zero and holding each knockoff's
marginal in place with a Kolmogorov-Smirnov penalty.

Note: constraints pair distinct features only (i != j). Same-index
higher-order moments, e.g. the coskewness of a feature with its own
knockoff, are intentionally unconstrained.
"""

from .copula import (GaussianCopulaModel, KnockoffSVector, equicorrelated_s,
                     fit_copula, initial_guess, psd_repair,
                     sample_gaussian_knockoffs)
from .datamatrix import DataMatrix
from .errors import ConfigError, DegenerateColumnError, NumericFailure
from .harness import (CsvInput, ExperimentConfig, SyntheticInput,
                      run_experiment, time_grid)
from .kstest import KSResult, ks_penalty, ks_test
from .marginals import (MarginalModel, fit_marginal, fit_marginals,
                        standardize, unstandardize)
from .moments import (ColumnStats, ConstraintSet, MomentKey,
                      aggregate_residuals, build_constraints, canonicalize,
                      comoment, residual_gradient)
from .optimizer import (IterationTrace, KnockoffResult, OptimizerConfig,
                        PenaltyWeights, objective, optimize, step)
from .synthdata import ShuffleScheme, generate, induced_moments_report, shuffle

__version__ = "0.1.0"

__all__ = [
    "ColumnStats", "ConfigError", "ConstraintSet", "CsvInput", "DataMatrix",
    "DegenerateColumnError", "ExperimentConfig", "GaussianCopulaModel",
    "IterationTrace", "KSResult", "KnockoffResult", "KnockoffSVector",
    "MarginalModel", "MomentKey", "NumericFailure", "OptimizerConfig",
    "PenaltyWeights", "ShuffleScheme", "SyntheticInput",
    "aggregate_residuals", "build_constraints", "canonicalize", "comoment",
    "equicorrelated_s", "fit_copula", "fit_marginal", "fit_marginals",
    "generate", "induced_moments_report", "initial_guess", "ks_penalty",
    "ks_test", "objective", "optimize", "psd_repair", "residual_gradient",
    "run_experiment", "sample_gaussian_knockoffs", "shuffle", "standardize",
    "step", "time_grid", "unstandardize",
]
