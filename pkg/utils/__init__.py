"""Utilities package."""

from .helpers import config_hash, fit_slope, format_norm, format_ratio

__all__ = ["config_hash", "fit_slope", "format_norm", "format_ratio"]
