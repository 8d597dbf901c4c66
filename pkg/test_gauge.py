"""Tests for the gauge transform, its weights and the v equation."""

import numpy as np
import pytest

from conftest import random_field, random_real_field
from core.datum import two_mode
from core.errors import ConfigInvalid, InconsistentPair, InvariantViolation
from core.gauge import (
    DEFAULT_PAIR_TOL, WEIGHT_EXPONENTS, bilinear_ratio, difference_bounds, exponential_bounds, gauge_exp,
    gauge_F, gauge_residuals, gauge_transform, gauge_weights, lipschitz_probe, reconstruction_defect,
    reconstruction_floor, remainder_R, rhs_v, set_oversample, weight_rate,
)
from core.solver import Equation, simulate
from core.spectral import SpectralField


def test_primitive_is_real_and_mean_zero():
    F = gauge_F(random_real_field(8, 0), n_out=16)
    assert F.reality_defect() < 1e-12
    assert F[0] == 0


def test_opposite_exponents_are_conjugate():
    u = random_real_field(6, 1, scale=0.3)
    for k in (1, 3):
        plus = gauge_exp(u, k, 1, n_out=12)
        minus = gauge_exp(u, -k, 1, n_out=12)
        np.testing.assert_allclose(plus.coeffs, minus.conjugate().coeffs, atol=1e-13)


def test_sigma_flips_exponent():
    u = random_real_field(6, 2, scale=0.3)
    np.testing.assert_allclose(gauge_exp(u, 1, -1).coeffs, gauge_exp(u, -1, 1).coeffs, atol=1e-13)


def test_weights_of_zero_field():
    weights = gauge_weights(SpectralField.zeros(4), 1)
    assert weights.n_max == 8
    for k in WEIGHT_EXPONENTS:
        assert weights[k][0] == pytest.approx(1.0)
        assert weights[k].l2() == pytest.approx(1.0)


def test_constant_field_reconstructs_exactly():
    u = SpectralField.constant(4, 0.7)
    weights = gauge_weights(u, -1)
    v, nu = gauge_transform(u, -1, weights)
    assert nu == pytest.approx(0.7)
    assert v[0] == pytest.approx(0.35)
    assert reconstruction_defect(u, v, weights) < 1e-14


def test_smooth_field_reconstructs():
    u = two_mode(12, 0.1, 0.05)
    weights = gauge_weights(u, 1)
    v, _ = gauge_transform(u, 1, weights)
    assert reconstruction_defect(u, v, weights) < 1e-6


def test_complex_field_rejected():
    with pytest.raises(InvariantViolation):
        gauge_transform(random_field(4, 0), 1)


def test_oversample_floor():
    with pytest.raises(ConfigInvalid):
        set_oversample(1)


def test_residuals_need_mbo_prime():
    traj = simulate(two_mode(4, 0.1, 0.05), 1e-3, 3e-3, -1, Equation.MBO)
    with pytest.raises(InvariantViolation):
        gauge_residuals(traj, 0.6)


def test_v_equation_and_weight_identity(small_trajectory):
    rows = gauge_residuals(small_trajectory, 0.6)
    assert len(rows) == len(small_trajectory) - 2
    for row in rows:
        assert row["residual_grouped"] < 1e-4
        for k in WEIGHT_EXPONENTS:
            assert row[f"weight_residual_{k:+d}"] < 1e-4


def _residual_row(dt, t=2e-3):
    traj = simulate(two_mode(8, 0.1, 0.05), dt, 4e-3, -1, Equation.MBO_PRIME)
    return next(row for row in gauge_residuals(traj, 0.6) if abs(row["t"] - t) < 1e-12)


def test_residuals_converge_at_second_order():
    coarse, fine = _residual_row(1e-3), _residual_row(5e-4)
    keys = ["residual_grouped", "residual_ungrouped"] + [f"weight_residual_{k:+d}" for k in WEIGHT_EXPONENTS]
    for key in keys:
        assert fine[key] < 1e-5, key
        assert 3.0 < coarse[key] / fine[key] < 5.0, key


@pytest.mark.parametrize("n_max", [4, 8, 16])
def test_rates_and_remainder_on_every_lattice(n_max):
    u = two_mode(n_max, 0.1, 0.05)
    weights = gauge_weights(u, -1)
    for k in WEIGHT_EXPONENTS:
        rate = weight_rate(u, k, -1, weights)
        assert rate.n_max == n_max
        assert np.all(np.isfinite(rate.coeffs))
    assert remainder_R(u, -1, weights).n_max == n_max


def test_solver_states_pass_the_pair_check(small_trajectory):
    sigma = small_trajectory.sigma
    for u in small_trajectory.states:
        weights = gauge_weights(u, sigma)
        v, nu = gauge_transform(u, sigma, weights)
        floor = reconstruction_floor(u, weights, v.n_max)
        assert reconstruction_defect(u, v, weights) <= floor + 1e-12
        assert floor < 1e-4
        assert rhs_v(u, v, nu, sigma, weights=weights).n_max == v.n_max


def test_mismatched_pair_rejected():
    u = two_mode(8, 0.1, 0.05)
    weights = gauge_weights(u, -1)
    v, nu = gauge_transform(two_mode(8, 0.2, 0.05), -1)
    assert reconstruction_defect(u, v, weights) > 100 * DEFAULT_PAIR_TOL
    with pytest.raises(InconsistentPair):
        rhs_v(u, v, nu, -1, weights=weights)


def test_bound_ratios_are_finite():
    u = two_mode(6, 0.3, 0.1)
    bounds = exponential_bounds(u, 0.6, -1)
    assert all(np.isfinite(value) and value >= 0 for value in bounds.values())
    assert bounds["X_s"] >= 1.0 - 1e-12


def test_difference_bounds_vanish_for_equal_inputs():
    u = two_mode(6, 0.3, 0.1)
    assert difference_bounds(u, u, 0.6) == {"Y_s_ratio": 0.0, "Y_s1_ratio": 0.0, "v_diff_ratio": 0.0,
                                            "R_diff_ratio": 0.0}
    w = two_mode(6, 0.31, 0.1)
    assert all(value > 0 for value in difference_bounds(u, w, 0.6).values())


def test_bilinear_ratio_of_zero():
    assert bilinear_ratio(SpectralField.zeros(4), random_real_field(4, 0), 0.6) == 0.0


def test_lipschitz_probe_of_identical_runs(small_trajectory):
    rows = lipschitz_probe(small_trajectory, small_trajectory, 0.6)
    assert rows and all(row["status"] == "degenerate" for row in rows)
