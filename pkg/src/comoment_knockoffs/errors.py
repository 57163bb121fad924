"""Exception types shared across the package."""


class DegenerateColumnError(ValueError):
    """A column has (numerically) zero variance and cannot be standardized."""

    def __init__(self, label, variance):
        self.label = label
        self.variance = variance
        super().__init__(
            f"column {label!r} is degenerate: variance {variance:.3e} below threshold"
        )


class NumericFailure(RuntimeError):
    """A numerical procedure failed (exploding step, indefinite matrix, ...)."""


class ConfigError(ValueError):
    """Invalid experiment or optimizer configuration."""
