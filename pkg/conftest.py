"""Shared fixtures for the mbo-lab test suite."""

import numpy as np
import pytest
from hypothesis import settings

from core.datum import two_mode
from core.solver import Equation, simulate
from core.spectral import SpectralField
from core.twisted import build_snapshots

settings.register_profile("lab", max_examples=25, deadline=None)
settings.load_profile("lab")


def random_real_field(n_max: int, seed: int, scale: float = 1.0) -> SpectralField:
    rng = np.random.default_rng(seed)
    size = 2 * n_max + 1
    return SpectralField.real(scale * (rng.normal(size=size) + 1j * rng.normal(size=size)))


def random_field(n_max: int, seed: int) -> SpectralField:
    rng = np.random.default_rng(seed)
    size = 2 * n_max + 1
    return SpectralField(rng.normal(size=size) + 1j * rng.normal(size=size))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_trajectory():
    """mBO' trajectory on N = 4 from 0.1 cos x + 0.05 cos 2x, five samples."""
    return simulate(two_mode(4, 0.1, 0.05), 1e-3, 4e-3, -1, Equation.MBO_PRIME)


@pytest.fixture(scope="session")
def small_snapshots(small_trajectory):
    return build_snapshots(small_trajectory)


@pytest.fixture(scope="session")
def refined_trajectory():
    """mBO' trajectory on N = 6 from 0.05 cos x + 0.025 cos 2x, sampled every 2e-3 up to 0.04."""
    return simulate(two_mode(6, 0.05, 0.025), 1e-3, 0.04, -1, Equation.MBO_PRIME, sample_every=2)


@pytest.fixture(scope="session")
def refined_snapshots(refined_trajectory):
    return build_snapshots(refined_trajectory)
