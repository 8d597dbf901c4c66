"""Tests for the quintilinear estimate campaigns."""

import numpy as np
import pytest

from core.errors import ConfigInvalid, InvalidRegularity
from core.estimates import (
    ENSEMBLES, ESTIMATE_IDS, check_regularity, draw_inputs, estimate_campaign, estimate_ratio, lhs_norms,
    parse_multiplier, product_campaign, replay_witness, verify_estimate,
)
from core.multipliers import MultiplierId
from core.spectral import SpectralField


def _spike(n_max: int, freq: int) -> SpectralField:
    return SpectralField.from_modes(n_max, {freq: 1.0})


def _uniform_inputs(n_max: int, seed: int):
    rng = np.random.default_rng(seed)
    return [SpectralField(rng.uniform(0.0, 1.0, 2 * n_max + 1)) for _ in range(5)]


def test_regularity_threshold():
    assert check_regularity(0.6) == pytest.approx(0.025)
    assert check_regularity(0.6, 0.1) == 0.1
    with pytest.raises(InvalidRegularity):
        check_regularity(0.4)
    with pytest.raises(InvalidRegularity):
        check_regularity(0.5)
    with pytest.raises(ConfigInvalid):
        check_regularity(0.6, 0.7)


def test_unknown_estimate():
    with pytest.raises(ConfigInvalid):
        verify_estimate("matome-9", 0.6, N=4, trials=1)


def test_low_regularity_rejected():
    with pytest.raises(InvalidRegularity):
        verify_estimate("matome-1", 0.4, N=4, trials=1)


@pytest.mark.parametrize("estimate_id", ESTIMATE_IDS)
def test_zero_input_ratio(estimate_id):
    inputs = _uniform_inputs(4, 0)
    inputs[2] = SpectralField.zeros(4, is_real=False)
    assert estimate_ratio(estimate_id, inputs, 0.6) == 0.0


@pytest.mark.parametrize("s", [0.6, 0.8, 1.0])
def test_single_spike_closed_form(s):
    inputs = [_spike(4, freq) for freq in (3, 0, 2, 0, -1)]
    ratio = estimate_ratio("matome-1", inputs, s, mid=MultiplierId(1), sigma=1)
    expected = 2.0 * 17 ** -0.25 * (17 / 100) ** (s / 2)
    assert ratio == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("estimate_id", ["matome-2", "5linear-1", "6linear-2", "N1"])
def test_ratio_is_scale_invariant(estimate_id):
    inputs = _uniform_inputs(4, 1)
    scaled = [f * 2.0 for f in inputs]
    assert estimate_ratio(estimate_id, scaled, 0.7) == pytest.approx(estimate_ratio(estimate_id, inputs, 0.7),
                                                                      rel=1e-10)


@pytest.mark.parametrize("estimate_id", ["matome-0", "5linear-0", "6linear-1"])
def test_lhs_is_monotone_in_inputs(estimate_id):
    inputs = _uniform_inputs(4, 2)
    bump = _uniform_inputs(4, 3)
    larger = [f + g for f, g in zip(inputs, bump)]
    small, big = lhs_norms(estimate_id, [inputs, larger], 0.6, 0.025)
    assert big >= small


@pytest.mark.parametrize("ensemble", ENSEMBLES)
def test_ensembles_are_non_negative(ensemble):
    inputs = draw_inputs(ensemble, 8, 0.6, np.random.default_rng(0))
    assert len(inputs) == 5
    for f in inputs:
        assert np.all(f.coeffs.real >= 0)
        assert np.all(f.coeffs.imag == 0)


def test_unknown_ensemble():
    with pytest.raises(ConfigInvalid):
        draw_inputs("gaussian", 4, 0.6, np.random.default_rng(0))


def test_multiplier_names_round_trip():
    assert parse_multiplier("m3*") == MultiplierId(3, True)
    assert parse_multiplier(str(MultiplierId(6))) == MultiplierId(6)
    assert parse_multiplier(None) is None


@pytest.mark.parametrize("estimate_id", ["matome-1", "5linear-2", "N1"])
def test_exact_witness_replays(estimate_id):
    result = verify_estimate(estimate_id, 0.6, N=4, trials=9, seed=1)
    witness = result["witness"]
    assert result["mode"] == "exact"
    assert witness["ratio"] == result["worst_ratio"]
    assert replay_witness(witness) == pytest.approx(witness["ratio"], rel=1e-12, abs=1e-300)


def test_sampled_witness_replays():
    result = verify_estimate("6linear-1", 0.6, N=5, trials=6, seed=2, exact_max_n=2, mc_samples=300)
    witness = result["witness"]
    assert result["mode"] == "mc"
    assert witness["lattice_seed"] is not None
    assert replay_witness(witness) == pytest.approx(witness["ratio"], rel=1e-12, abs=1e-300)


def test_campaign_is_seeded():
    first = estimate_campaign("matome-3", 0.6, sizes=(3, 4), trials=6, seed=4).to_dict()
    second = estimate_campaign("matome-3", 0.6, sizes=(3, 4), trials=6, seed=4, threads=2).to_dict()
    assert first == second
    assert first["modes"] == ["exact", "exact"]
    assert first["slope"] is not None


def test_product_campaign():
    report = product_campaign(0.6, sizes=(8, 16), trials=4)
    assert report["lattice_sizes"] == [8, 16]
    assert all(np.isfinite(x) and x > 0 for x in report["worst_ratio"])
    with pytest.raises(InvalidRegularity):
        product_campaign(0.5, sizes=(8,), trials=1)
