"""Initial data used by the solver campaigns."""

import numpy as np

from core.spectral import SpectralField, japanese


def zero_datum(n_max: int) -> SpectralField:
    return SpectralField.zeros(n_max)


def two_mode(n_max: int, a: float, b: float) -> SpectralField:
    """a cos x + b cos 2x."""
    modes = {}
    if n_max >= 1:
        modes.update({1: a / 2, -1: a / 2})
    if n_max >= 2:
        modes.update({2: b / 2, -2: b / 2})
    return SpectralField.from_modes(n_max, modes, is_real=True)


def colored_noise(n_max: int, seed: int, amplitude: float = 1.0, decay: float = 2.0,
                  mean: float = 0.0) -> SpectralField:
    """Band-limited random real datum with |u(n)| ~ amplitude <n>^{-decay}.

    Args:
        n_max: Lattice half-width
        seed: Seed of the numpy generator
        amplitude: Overall scale
        decay: Exponent of the Sobolev coloring
        mean: Value of the zero mode
    """
    rng = np.random.default_rng(seed)
    n = np.arange(1, n_max + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_max)
    radii = rng.uniform(0.5, 1.0, n_max)
    positive = amplitude * radii * japanese(n) ** (-decay) * np.exp(1j * phases)
    coeffs = np.concatenate([np.conj(positive[::-1]), [mean], positive])
    return SpectralField(coeffs, is_real=True)
