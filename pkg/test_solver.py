"""Tests for the integrating-factor RK4 solver and trajectory files."""

import numpy as np
import pytest

from core.datum import colored_noise, two_mode, zero_datum
from core.errors import BlowupDetected, ConfigInvalid, InvariantViolation
from core.solver import (
    Equation, StepConfig, conserved, conserved_drift, mbo_to_mbo_prime, order_check, simulate,
    truncation_error, twin_probe,
)
from core.spectral import sobolev_norm
from store import read_trajectory, write_conserved_csv, write_trajectory


def test_zero_datum_stays_zero():
    traj = simulate(zero_datum(8), 1e-2, 0.1, -1)
    assert len(traj) == 11
    assert all(np.all(state.coeffs == 0) for state in traj.states)


@pytest.mark.parametrize("equation", [Equation.MBO, Equation.MBO_PRIME])
def test_conservation(equation):
    traj = simulate(two_mode(16, 0.5, 0.25), 1e-3, 0.1, -1, equation, sample_every=10)
    drift = conserved_drift(traj)
    assert drift["mean"] < 1e-14
    assert drift["mass_l2"] < 1e-8
    assert drift["energy"] < 1e-8


def test_sampling_keeps_every_kth_step():
    traj = simulate(two_mode(4, 0.5, 0.25), 1e-2, 0.1, 1, sample_every=5)
    np.testing.assert_allclose(traj.times, [0.0, 0.05, 0.1])
    assert traj.dt == pytest.approx(0.05)
    assert traj.step_dt == pytest.approx(1e-2)


def test_rk4_order():
    ratio = order_check(two_mode(8, 0.5, 0.25), 0.02, 0.2, -1)
    assert 12.0 < ratio < 20.0


def test_blowup_threshold():
    with pytest.raises(BlowupDetected):
        simulate(two_mode(4, 0.5, 0.25), 1e-2, 0.1, -1, blowup_factor=0.5)


def test_conserved_of_zero():
    assert tuple(conserved(zero_datum(4), 1)) == (0.0, 0.0, 0.0)


def test_mbo_to_mbo_prime_scales_initial_sample():
    u0 = two_mode(6, 0.4, 0.2)
    traj = simulate(u0, 1e-2, 0.05, -1, Equation.MBO)
    mapped = mbo_to_mbo_prime(traj)
    assert mapped.equation is Equation.MBO_PRIME
    np.testing.assert_allclose(mapped.states[0].coeffs, u0.coeffs / np.sqrt(2.0), atol=1e-15)
    with pytest.raises(InvariantViolation):
        mbo_to_mbo_prime(mapped)


def test_twin_probe_within_truncation_error():
    u0 = two_mode(8, 0.5, 0.25)
    result = twin_probe(u0, (StepConfig(1e-2), StepConfig(5e-3)), 0.1, -1, 0.6)
    report = result.report
    assert report["datum_distance"] == 0.0
    assert report["within_bound"]
    assert len(result.first) == len(result.second)
    coarse_error, fine_error = report["truncation_errors"]
    assert 12.0 < coarse_error / fine_error < 20.0
    assert 10.0 < report["ratio_to_fine"] < 20.0


def test_truncation_error_matches_fine_reference():
    u0 = two_mode(8, 0.5, 0.25)
    estimate = truncation_error(u0, StepConfig(0.02), 0.2, -1, 0.6)
    run = simulate(u0, 0.02, 0.2, -1)
    reference = simulate(u0, 0.02 / 16, 0.2, -1, sample_every=16)
    actual = max(sobolev_norm(a - b, 0.6) for a, b in zip(run.states, reference.states))
    assert 0.85 < estimate / actual < 1.15


def test_twin_probe_perturbed_reports_lipschitz_ratio():
    u0 = two_mode(8, 0.5, 0.25)
    bump = colored_noise(8, 3, amplitude=1e-3)
    report = twin_probe(u0, (StepConfig(1e-2), StepConfig(1e-2)), 0.05, -1, 0.6, perturbation=bump).report
    assert report["datum_distance"] > 0
    assert report["lipschitz_ratio"] >= 1.0 - 1e-9
    assert "within_bound" not in report


def test_trajectory_file_round_trip(tmp_path):
    traj = simulate(two_mode(4, 0.5, 0.25), 1e-2, 0.03, -1)
    path = write_trajectory(traj, tmp_path / "traj.jsonl")
    loaded = read_trajectory(path)
    assert loaded.sigma == -1
    assert loaded.equation is Equation.MBO_PRIME
    np.testing.assert_array_equal(loaded.times, traj.times)
    for a, b in zip(loaded.states, traj.states):
        assert a == b


def test_headerless_trajectory_needs_sigma(tmp_path):
    traj = simulate(two_mode(4, 0.5, 0.25), 1e-2, 0.02, -1)
    path = write_trajectory(traj, tmp_path / "traj.jsonl")
    body = path.read_text().splitlines()[1:]
    bare = tmp_path / "bare.jsonl"
    bare.write_text("\n".join(body) + "\n")
    with pytest.raises(ConfigInvalid):
        read_trajectory(bare)
    loaded = read_trajectory(bare, sigma=-1)
    assert loaded.dt == pytest.approx(1e-2)


def test_conserved_csv(tmp_path):
    traj = simulate(two_mode(4, 0.5, 0.25), 1e-2, 0.02, -1)
    lines = write_conserved_csv(traj, tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "t,mean,l2,energy"
    assert len(lines) == 1 + len(traj)
