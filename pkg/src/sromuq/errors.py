"""Exception types raised across the package."""

__all__ = [
    "SromError",
    "NewtonDivergence",
    "NotTangent",
    "LogNoConvergence",
    "RankDeficient",
    "Unreachable",
    "IllConditioned",
    "TooFewSamples",
    "AllUnstable",
    "BlowUp",
    "DegenerateDenominator",
    "ShapeMismatch",
    "EmptyCluster",
    "InfeasibleQP",
    "BadMagic",
    "TruncatedFile",
    "NonFinite",
    "ConfigError",
    "StageFailure",
]


class SromError(Exception):
    """Base class for all package-specific errors."""


class NewtonDivergence(SromError):
    """Newton iteration failed to reach tolerance within the allowed steps."""

    def __init__(self, residual, iterations, time_index=None):
        self.residual = residual
        self.iterations = iterations
        self.time_index = time_index
        where = f" at time index {time_index}" if time_index is not None else ""
        super().__init__(
            f"Newton solver stalled{where}: residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class NotTangent(SromError):
    """Matrix fails the tangent-space skew-symmetry check at its basepoint."""


class LogNoConvergence(SromError):
    """Iterative Stiefel logarithm did not converge.

    Carries the final residual so callers can distinguish "slightly over
    tolerance" from "target far outside the convergence neighborhood".
    """

    def __init__(self, residual, iterations, index=None):
        self.residual = residual
        self.iterations = iterations
        self.index = index
        where = f" (sample {index})" if index is not None else ""
        super().__init__(
            f"Stiefel log did not converge{where}: residual {residual:.3e} "
            f"after {iterations} iterations"
        )


class RankDeficient(SromError):
    """Requested more basis vectors than the data's numerical rank supports."""


class Unreachable(SromError):
    """No truncation rank satisfies the requested error threshold."""


class IllConditioned(SromError):
    """Regularized Gram matrix condition number exceeds the safe limit."""


class TooFewSamples(SromError):
    """Operation needs more samples/snapshots than were provided."""


class AllUnstable(SromError):
    """Every regularization candidate produced a diverging reduced model."""


class BlowUp(SromError):
    """Reduced-model trajectory norm exceeded the divergence guard."""

    def __init__(self, message, seed=None):
        self.seed = seed
        super().__init__(message)


class DegenerateDenominator(SromError):
    """Relative-error denominator is numerically zero."""


class ShapeMismatch(SromError):
    """Operands have inconsistent dimensions."""


class EmptyCluster(SromError):
    """A cluster ended up with no members."""


class InfeasibleQP(SromError):
    """Concentration QP found no feasible point (should not happen)."""


class BadMagic(SromError):
    """File does not start with the expected matrix-format magic bytes."""


class TruncatedFile(SromError):
    """Matrix file ended before the declared payload was read."""


class NonFinite(SromError):
    """Matrix contains NaN or infinity where finite values are required."""


class ConfigError(SromError):
    """Pipeline configuration failed schema validation."""


class StageFailure(SromError):
    """A pipeline stage failed; earlier artifacts are kept for resume."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
