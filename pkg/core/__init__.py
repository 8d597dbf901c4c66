"""Numerical core of mbo-lab."""

from .errors import (
    BlowupDetected, ConfigInvalid, InvalidRegularity, InvariantViolation, MboLabError,
    NumericalFailure,
)
from .spectral import SpectralField

__all__ = [
    "BlowupDetected", "ConfigInvalid", "InvalidRegularity", "InvariantViolation", "MboLabError",
    "NumericalFailure", "SpectralField",
]
