"""Exception hierarchy for mbo-lab.

Each exception carries the process exit code the CLI maps it to.
"""


class MboLabError(Exception):
    """Base class for every error raised by the lab."""

    exit_code = 1


class ConfigInvalid(MboLabError):
    """A run parameter violates the precondition of the operation it feeds."""

    exit_code = 2


class NumericalFailure(MboLabError):
    """Time stepping or a numerical kernel produced unusable output."""

    exit_code = 3


class BlowupDetected(NumericalFailure):
    """The state norm exceeded the configured multiple of its initial value."""


class InvariantViolation(MboLabError):
    """An identity that must hold exactly (up to tolerance) failed."""

    exit_code = 4


# Operation errors

class NonZeroMean(MboLabError):
    """inv_dx received a field whose zero mode exceeds tolerance."""


class SizeMismatch(MboLabError):
    """Two fields on different lattices were combined."""


class InconsistentPair(MboLabError):
    """(u, v) fails the reconstruction identity."""


class ConstraintViolated(MboLabError):
    """A frequency tuple does not satisfy n = n1 + ... + n5."""


class GenerationTooLarge(MboLabError):
    """Requested normal-form generation exceeds the supported maximum."""


class ModeUnsupported(MboLabError):
    """Requested evaluation mode is not available for this generation."""


class InvalidRegularity(MboLabError):
    """Sobolev index outside the range an estimate is stated for."""


class ZeroMu(MboLabError):
    """Hyperbola count requested with mu = 0."""
