"""Tests for the periodic Fourier calculus."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_field, random_real_field
from core.errors import NonZeroMean, SizeMismatch
from core.spectral import (
    ProductMode, Projection, SpectralField, dx, from_grid, hilbert, inv_dx, multiply, multiply_all, product,
    product_estimate_ratio, project, sobolev_norm, to_grid,
)


@pytest.mark.parametrize("seed", range(10))
def test_hilbert_squared_removes_mean(seed):
    f = random_field(64, seed)
    twice = hilbert(hilbert(f))
    np.testing.assert_allclose(twice.coeffs, -project(f, Projection.NON_MEAN).coeffs, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_primitive_inverts_derivative(seed):
    f = random_field(64, seed)
    np.testing.assert_allclose(inv_dx(dx(f)).coeffs, project(f, Projection.NON_MEAN).coeffs, atol=1e-12)


def test_projections_partition_field():
    f = random_field(16, 3)
    total = project(f, Projection.PLUS) + project(f, Projection.MINUS) + project(f, Projection.MEAN)
    np.testing.assert_array_equal(total.coeffs, f.coeffs)


@given(st.integers(1, 32), st.integers(0, 2 ** 31))
def test_real_fields_stay_real(n_max, seed):
    f = random_real_field(n_max, seed)
    assert f.reality_defect() < 1e-12
    assert hilbert(f).reality_defect() < 1e-12
    assert dx(f).reality_defect() < 1e-12
    assert multiply(f, f).reality_defect() < 1e-12


def test_inv_dx_rejects_mean():
    with pytest.raises(NonZeroMean):
        inv_dx(SpectralField.constant(4, 1.0))


def test_cosine_square():
    cos = SpectralField.from_modes(2, {1: 0.5, -1: 0.5}, is_real=True)
    square = multiply(cos, cos)
    assert square.n_max == 4
    assert square[0] == pytest.approx(0.5)
    assert square[2] == pytest.approx(0.25)
    assert square[-2] == pytest.approx(0.25)
    assert abs(square[1]) < 1e-15


def test_product_modes_agree():
    f, g = random_field(12, 1), random_field(12, 2)
    padded = product(f, g, ProductMode.PADDED)
    exact = product(f, g, ProductMode.EXACT)
    np.testing.assert_allclose(padded.coeffs, exact.coeffs, atol=1e-12)


@pytest.mark.parametrize("wide, narrow, n_out", [(16, 8, 4), (16, 0, 0), (64, 2, 1), (8, 16, 3)])
def test_unequal_lattices_into_small_output(wide, narrow, n_out):
    f, g = random_field(wide, 3), random_field(narrow, 4)
    padded = multiply(f, g, n_out=n_out)
    exact = multiply(f, g, n_out=n_out, mode=ProductMode.EXACT)
    assert padded.n_max == n_out
    np.testing.assert_allclose(padded.coeffs, exact.coeffs, atol=1e-11)
    assert multiply(SpectralField.zeros(wide), SpectralField.zeros(narrow), n_out=n_out) == SpectralField.zeros(n_out)


def test_multiply_all_with_unequal_lattices():
    f, g, h = random_field(16, 5), random_field(2, 6), random_field(1, 7)
    chained = multiply(multiply(f, g, mode=ProductMode.EXACT), h, n_out=2, mode=ProductMode.EXACT)
    np.testing.assert_allclose(multiply_all(f, g, h, n_out=2).coeffs, chained.coeffs, atol=1e-11)


def test_product_needs_equal_lattices():
    with pytest.raises(SizeMismatch):
        product(random_field(4, 0), random_field(5, 0))
    with pytest.raises(SizeMismatch):
        random_field(4, 0) + random_field(5, 0)


def test_even_length_rejected():
    with pytest.raises(SizeMismatch):
        SpectralField(np.zeros(4))


def test_grid_values():
    f = SpectralField.from_modes(3, {1: 0.5, -1: 0.5}, is_real=True)
    x = 2 * np.pi * np.arange(16) / 16
    np.testing.assert_allclose(to_grid(f, 16), np.cos(x), atol=1e-14)
    back = from_grid(np.cos(x), 3, is_real=True)
    np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-14)


def test_grid_too_small():
    with pytest.raises(SizeMismatch):
        to_grid(random_field(8, 0), 10)


def test_sobolev_norm_of_single_mode():
    f = SpectralField.from_modes(4, {3: 1.0})
    assert sobolev_norm(f, 0.6) == pytest.approx(10 ** 0.3)
    assert sobolev_norm(SpectralField.constant(4, 2.0), 1.5) == pytest.approx(2.0)


@given(st.floats(0.1, 10.0), st.integers(0, 2 ** 31))
def test_sobolev_norm_homogeneous(scale, seed):
    f = random_field(8, seed)
    assert sobolev_norm(f * scale, 0.7) == pytest.approx(scale * sobolev_norm(f, 0.7), rel=1e-12)


def test_product_estimate_ratio_zero_input():
    assert product_estimate_ratio(SpectralField.zeros(8), random_real_field(8, 0), 0.6) == 0.0
    assert product_estimate_ratio(random_real_field(8, 1), random_real_field(8, 2), 0.6) > 0.0


def test_conjugate_is_reflection():
    f = random_field(5, 7)
    g = f.conjugate()
    for n in range(-5, 6):
        assert g[n] == np.conj(f[-n])
