"""Tests for the lattice-point counts and the resonance identity scans."""

import numpy as np
import pytest

from core.counting import (
    count_ellipse, count_hyperbola, counting_scan, fact_check, fact_oracle, fact_scan, large_mu_probes,
    max_count, translation_check,
)
from core.errors import ConfigInvalid, ZeroMu
from core.identities import phi5_scan, phi6_scan, small_output_region_scan
from core.multipliers import in_A1, phi


def test_hyperbola_count():
    assert count_hyperbola(0, 0, 12, 10) == 8
    assert count_hyperbola(0, 0, 12, 7) == 4
    assert count_hyperbola(0, 0, 7, 10) == 4


def test_ellipse_count():
    assert count_ellipse(0, 0, 0, 10) == 1
    assert count_ellipse(0, 0, 4, 5) == 6
    assert count_ellipse(0, 0, -1, 5) == 0
    assert count_ellipse(0, 0, 2, 5) == 0


def test_count_arguments():
    with pytest.raises(ZeroMu):
        count_hyperbola(1, 1, 0, 5)
    with pytest.raises(ConfigInvalid):
        count_ellipse(0, 0, 1, 1)


@pytest.mark.parametrize("curve", ["ellipse", "hyperbola"])
@pytest.mark.parametrize("shift", [(3, -2), (-7, 11)])
def test_counts_are_translation_invariant(curve, shift):
    assert translation_check(curve, 1, -2, 12, 9, shift)


def test_max_count_matches_direct_count():
    count, mu = max_count("hyperbola", 2, -1, 8)
    assert count == count_hyperbola(2, -1, mu, 8)
    count, mu = max_count("ellipse", 0, 1, 8)
    assert count == count_ellipse(0, 1, mu, 8)


def test_counting_scan_is_seeded():
    first = counting_scan("ellipse", R_max=32, centers=3, seed=1, threads=1).to_dict()
    second = counting_scan("ellipse", R_max=32, centers=3, seed=1, threads=3).to_dict()
    assert first == second
    assert first["R_values"] == [2, 4, 8, 16, 32]
    assert all(w["count"] == c for w, c in zip(first["witnesses"], first["max_counts"]))


def test_unknown_curve():
    with pytest.raises(ConfigInvalid):
        counting_scan("parabola", R_max=8)


def test_large_mu_counts_stay_small():
    report = large_mu_probes(8, probes=200, seed=3)
    assert report["probes"] == 200
    assert report["violations"] == 0
    assert 1 <= report["max_count"] <= 2


def _brute_fact(which, n, n2, n4, target, intervals, R):
    first, second = sorted(intervals)
    third = ({"n1", "n3", "n5"} - {first, second}).pop()
    total = 0
    for a in range(intervals[first], intervals[first] + R + 1):
        for b in range(intervals[second], intervals[second] + R + 1):
            point = {first: a, second: b, third: n - n2 - n4 - a - b}
            n1, n3, n5 = point["n1"], point["n3"], point["n5"]
            domain = n1 > 0 > n5 if which == "fact1" else n3 > 0 and n5 > 0
            total += domain and phi(n, n1, n3, n5) == target
    return total


@pytest.mark.parametrize("which, intervals", [
    ("fact1", {"n1": 2, "n5": -9}),
    ("fact2", {"n3": 1, "n5": 3}),
])
def test_fact_count_against_brute_force(which, intervals):
    n, n2, n4, R = 7, 1, -1, 6
    targets = {phi(n, n1, n - n2 - n4 - n1 - n5, n5)
               for n1 in range(-10, 11) for n5 in range(-10, 11)}
    for target in sorted(targets)[::7]:
        expected = _brute_fact(which, n, n2, n4, target, intervals, R)
        assert fact_check(which, n, n2, n4, target, intervals, R) == expected
        oracle = fact_oracle(which, n, n2, n4, target, intervals, R)
        assert oracle is None or oracle == expected


def test_fact_needs_two_intervals():
    with pytest.raises(ConfigInvalid):
        fact_check("fact1", 3, 0, 0, 1, {"n1": 1}, 4)


@pytest.mark.parametrize("which", ["fact1", "fact2"])
def test_fact_scan_oracle_agrees(which):
    report = fact_scan(which, [4, 8, 16], configurations=8, seed=2)
    assert report["oracle_agreements"] == report["oracle_compared"]
    assert len(report["max_counts"]) == 3


def test_resonance_identities():
    assert phi5_scan(12)["ok"]
    assert phi6_scan(12)["ok"]


def test_small_output_region_has_no_candidates_at_default_eta():
    report = small_output_region_scan(bound=30)
    assert report["candidates"] == 0
    assert report["empty"]
    assert report["witness"] is None


def _region_survivors(bound, eta):
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    n2, n3, n4, n5 = (a.ravel() for a in np.meshgrid(axis, axis, axis, axis, indexing="ij"))
    survivors = 0
    for n1 in axis:
        n = n1 + n2 + n3 + n4 + n5
        n_max = np.maximum.reduce([np.full_like(n3, abs(n1)), np.abs(n2), np.abs(n3), np.abs(n4), np.abs(n5)])
        keep = (n > 0) & (n4 + n5 < 0) & (abs(n1) >= np.abs(n3)) & (n < eta ** 2 * n_max)
        keep &= np.abs(phi(n, n1, n3, n5)) < eta ** 3 * n_max.astype(np.float64) ** 2
        keep &= (np.abs(n3) <= np.abs(n5) / eta) & (np.abs(n3) >= eta * np.minimum(abs(n1), np.abs(n5)))
        keep &= ~in_A1(np.full_like(n3, n1), n2, n3, n4, n5, eta)
        survivors += int(np.count_nonzero(keep))
    return survivors


def test_small_output_region_scan_matches_brute_force():
    eta = 0.5
    report = small_output_region_scan(bound=10, eta=eta, threads=2)
    assert report["candidates"] > 0
    assert report["survivors"] == _region_survivors(10, eta)
    assert report["empty"] == (report["survivors"] == 0)
    if report["witness"] is not None:
        n1, n2, n3, n4, n5 = report["witness"]
        assert not in_A1(n1, n2, n3, n4, n5, eta)
        assert max(abs(n2), abs(n4)) < eta ** 2 * min(abs(n5), abs(n1 + n2 + n3 + n4 + n5))
