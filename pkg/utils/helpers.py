"""Utility helper functions."""

import hashlib
import json
from typing import Optional, Sequence

import numpy as np
from scipy import stats


def format_norm(value: Optional[float], digits: int = 4) -> str:
    """Format a norm or residual for display.

    Args:
        value: Norm value, None when not computed
        digits: Significant digits

    Returns:
        Formatted string, "-" for missing values
    """
    if value is None:
        return "-"
    return f"{value:.{digits}e}"


def format_ratio(value: Optional[float], decimals: int = 4) -> str:
    """Format an empirical constant or ratio for display.

    Args:
        value: Ratio value
        decimals: Number of decimal places

    Returns:
        Formatted ratio string
    """
    if value is None:
        return "-"
    if value != 0 and (abs(value) >= 1e4 or abs(value) < 1e-3):
        return f"{value:.{decimals}e}"
    return f"{value:.{decimals}f}"


def format_status(ok: bool) -> str:
    """Rich markup for a pass/fail flag."""
    return "[green]ok[/green]" if ok else "[red]FAIL[/red]"


def parse_sizes(text: str) -> list:
    """Parse a comma separated list of lattice sizes.

    Format: "16,32,64"

    Args:
        text: Input string

    Returns:
        List of positive integers
    """
    sizes = [int(part.strip()) for part in text.split(",") if part.strip()]
    if not sizes or any(size < 1 for size in sizes):
        raise ValueError(f"expected positive lattice sizes, got {text!r}")
    return sizes


def config_hash(payload: dict) -> str:
    """First 12 hex digits of the SHA-256 of the canonical JSON of payload."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(y) against log(x).

    Points with a non-positive coordinate are dropped; fewer than two
    remaining points give None.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if np.count_nonzero(keep) < 2 or np.unique(x[keep]).size < 2:
        return None
    return float(stats.linregress(np.log(x[keep]), np.log(y[keep])).slope)


def parse_floats(text: str) -> list:
    """Parse a comma separated list of reals, e.g. "64,128,256"."""
    values = [float(part.strip()) for part in text.split(",") if part.strip()]
    if not values:
        raise ValueError(f"expected a comma separated list of numbers, got {text!r}")
    return values
