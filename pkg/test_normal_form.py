"""Tests for multipliers, tree enumeration, quintic sums and the normal-form families."""

import numpy as np
import pytest

from conftest import random_field
from core.datum import two_mode
from core.errors import ConfigInvalid, ConstraintViolated, GenerationTooLarge, ModeUnsupported
from core.multipliers import (
    ALL_IDS, MultiplierId, hat_split, hat_values, in_A1, in_A2, multiplier, multiplier_values, phi,
)
from core.normal_form import (
    DECAY_FAMILIES, NONRESONANT, STANDALONE, choose_M, cross_decomposition, decay_scan, decay_twin, eval_term,
    families, first_generation, second_generation, telescoping_check,
)
from core.montecarlo import sample_family
from core.quintic import QuinticLattice, eval_Q, eval_Q_loops, hat_phase_weight, lattice_for
from core.spectral import SpectralField, sobolev_norm
from core.trees import (
    Family, TermDescriptor, enumerate_trees, phase_bound_check, resonance_partition_check, tree_count,
)
from core.solver import Equation, simulate
from core.twisted import Snapshot, build_snapshots, hathat_mass, hathat_mass_scan, omega_equation_residual

M = 8.0


def _random_tuples(rng, count, bound):
    tuples = rng.integers(-bound, bound + 1, size=(count, 5))
    return [(int(t.sum()), *map(int, t)) for t in tuples]


def _close(a: SpectralField, b: SpectralField, rel: float = 1e-9):
    scale = max(np.max(np.abs(a.coeffs)), np.max(np.abs(b.coeffs)), 1e-300)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=rel * scale + 1e-300)


# Multipliers

def test_single_multiplier_value():
    assert multiplier(MultiplierId(1), 4, 3, 0, 2, 0, -1, sigma=1) == 2j
    assert multiplier(MultiplierId(1), 4, 3, 0, 2, 0, -1, sigma=-1) == -2j
    assert phi(4, 3, 2, -1) == 4


def test_frequency_constraint_enforced():
    with pytest.raises(ConstraintViolated):
        multiplier(MultiplierId(2), 5, 1, 1, 1, 1, 0)
    with pytest.raises(ConstraintViolated):
        hat_split(MultiplierId(2), 5, 1, 1, 1, 1, 0)


def test_bad_multiplier_index():
    with pytest.raises(ValueError):
        MultiplierId(8)


def test_hat_parts_add_up(rng):
    for n, *rest in _random_tuples(rng, 400, 40):
        for mid in ALL_IDS:
            m = complex(multiplier_values(mid, n, *rest))
            hat, hathat = hat_values(mid, n, *rest)
            assert complex(hat) + complex(hathat) == m
            assert complex(hat) == 0 or complex(hathat) == 0


def test_starred_multiplier_is_conjugate_reflection(rng):
    for n, *rest in _random_tuples(rng, 200, 20):
        negated = [-x for x in rest]
        for mid in ALL_IDS:
            starred = complex(multiplier_values(mid.star(), n, *rest, sigma=-1))
            assert starred == np.conj(complex(multiplier_values(mid, -n, *negated, sigma=-1)))


def test_hat_needs_zero_weight_frequencies(rng):
    for n, n1, n2, n3, n4, n5 in _random_tuples(rng, 400, 50):
        if n2 == 0 and n4 == 0:
            continue
        for mid in ALL_IDS:
            hat, _ = hat_values(mid, n, n1, n2, n3, n4, n5)
            assert complex(hat) == 0


def test_degenerate_tuples_are_harmless():
    assert in_A1(3, 0, 2, 0, -3)
    assert in_A2(3, 0, -3, 0, 5)
    assert not in_A2(30, 0, 200, 0, 100)


# Trees and resonance sets

@pytest.mark.parametrize("J, count", [(1, 1), (2, 3), (3, 15)])
def test_tree_enumeration(J, count):
    trees = enumerate_trees(J)
    assert tree_count(J) == count
    assert len(trees) == count
    assert len(set(trees)) == count
    for tree in trees:
        assert len(tree.nodes) == 5 * J + 1
        assert len(tree.leaves) == 4 * J + 1
        assert len(tree.weight_leaves) == 2 * J


def test_generation_limit():
    with pytest.raises(GenerationTooLarge):
        enumerate_trees(4)
    with pytest.raises(ConfigInvalid):
        TermDescriptor(Family.N_0, 0, M)
    with pytest.raises(ConfigInvalid):
        TermDescriptor(Family.N_0, 1, 1.0)


@pytest.mark.parametrize("J, bound", [(1, 60), (2, 40)])
def test_resonance_sets_partition(J, bound):
    report = resonance_partition_check(J, M, bound)
    assert report["ok"]
    assert report["nonresonant_parent"] > 0


@pytest.mark.parametrize("J", [1, 2, 3])
def test_nonresonant_chains_exceed_levels(J):
    report = phase_bound_check(J, M, 0.25, 4000, seed=J)
    assert report["levels_exceeded"]
    assert np.isfinite(report["resonant_constant"])
    assert report["nonresonant_half_constant"] >= 0


# Quintic sums

@pytest.mark.parametrize("i", [1, 3, 6])
def test_vectorized_sum_matches_loops(i):
    mid = MultiplierId(i)
    fields = [random_field(3, seed) for seed in range(5)]
    t = 0.3

    def loop_weight(n, tup):
        n1, _, n3, _, n5 = tup
        return complex(multiplier_values(mid, n, *tup)) * np.exp(1j * t * phi(n, n1, n3, n5))

    fast = eval_Q(lattice_for(3), hat_phase_weight(mid, t, part="full"), fields)
    _close(fast, eval_Q_loops(loop_weight, fields), rel=1e-12)


def test_threads_do_not_change_sums():
    fields = [random_field(4, seed) for seed in range(5)]
    weight = hat_phase_weight(MultiplierId(5), 0.7, part="full")
    one = eval_Q(lattice_for(4), weight, fields, threads=1)
    many = eval_Q(lattice_for(4), weight, fields, threads=3)
    np.testing.assert_array_equal(one.coeffs, many.coeffs)


# Snapshots and families

def test_zero_snapshot_has_zero_families():
    snap = Snapshot(0.0, SpectralField.zeros(3), -1)
    for field in families(snap, 1, M).values():
        assert np.all(field.coeffs == 0)


def test_hat_split_of_the_nonlinearity(small_snapshots):
    snap = small_snapshots[2]
    _close(snap.main_field + snap.R0, snap.full_rhs())
    _close(snap.full_rhs(starred=True), snap.full_rhs().conjugate())


def test_family_evaluation_limits(small_snapshots):
    snap = small_snapshots[0]
    with pytest.raises(ModeUnsupported):
        families(snap, 3, M)
    with pytest.raises(GenerationTooLarge):
        families(snap, 4, M)
    with pytest.raises(ModeUnsupported):
        eval_term(TermDescriptor(Family.N_0, 1, M), snap, mode="bogus")


def test_first_generation_split(small_snapshots):
    fam = first_generation(small_snapshots[1], M)
    _close(fam[Family.N_R] + fam[NONRESONANT], small_snapshots[1].main_field)


def test_second_generation_consistency(small_snapshots):
    snap = small_snapshots[1]
    second = second_generation(snap, M)
    _close(second[Family.N_R] + second[NONRESONANT], second[STANDALONE])
    _close(second[STANDALONE], families(snap, 1, M)[Family.N_NEXT])


@pytest.mark.parametrize("J", [1, 2])
def test_telescoping_identity(small_snapshots, J):
    report = telescoping_check(small_snapshots, J, M, 0.6)
    assert report["lhs_norm"] > 0
    assert report["residual"] < 1e-5


@pytest.mark.parametrize("J, count", [(1, 21), (2, 9)])
def test_telescoping_residual_is_quadrature_error(refined_snapshots, J, count):
    window = refined_snapshots[:count]
    fine = telescoping_check(window, J, M, 0.6)
    coarse = telescoping_check(window[::2], J, M, 0.6)
    assert fine["residual"] < 1e-5
    assert 3.0 < coarse["residual"] / fine["residual"] < 5.0
    assert 0.5 < fine["residual"] / fine["quadrature_error"] < 2.0


def test_cross_decomposition_exact(refined_snapshots):
    report = cross_decomposition(refined_snapshots[:9], M, 0.6)
    assert report["mc_error"] == 0.0
    assert report["standalone_norm"] > 0
    assert report["within_error"]


def test_cross_decomposition_sampled(refined_snapshots):
    report = cross_decomposition(refined_snapshots[:9], M, 0.6, mode="mc", samples=4000, seed=11)
    assert report["mc_error"] > 0
    assert report["within_error"]
    with pytest.raises(ModeUnsupported):
        cross_decomposition(refined_snapshots[:3], M, 0.6, mode="bogus")


def test_omega_equation_converges_at_second_order(refined_snapshots):
    def row_at(snaps, t=8e-3):
        return next(row for row in omega_equation_residual(snaps, 0.6) if abs(row["t"] - t) < 1e-12)

    fine, coarse = row_at(refined_snapshots[:9]), row_at(refined_snapshots[:9:2])
    assert fine["residual"] < 1e-5
    assert 3.0 < coarse["residual"] / fine["residual"] < 5.0
    assert fine["residual_star"] == pytest.approx(fine["residual"], rel=1e-6)


def test_decay_scan_layout(small_snapshots):
    scan = decay_scan(small_snapshots[1:2], [4.0, 8.0], [1, 2], 0.6)
    assert len(scan["rows"]) == 2 * len(DECAY_FAMILIES) * 2
    assert len(scan["ratios"]) == 2 * len(DECAY_FAMILIES)
    for row in scan["rows"]:
        assert np.isfinite(row["norm"]) and row["norm"] >= 0
        assert (row["scaled"] is None) == (row["family"] == Family.N_NEXT.value)
    assert all(np.isfinite(slope) for slope in scan["slopes"].values())


def _absolute_hat_sum(snap: Snapshot, part: int, eta: float) -> SpectralField:
    total = SpectralField.zeros(snap.n_max, is_real=False)
    for mid in ALL_IDS:
        fields = [SpectralField(np.abs(f.coeffs)) for f in snap.fields(mid)]

        def weight(block, mid=mid):
            return np.abs(block.hat(mid, eta, snap.sigma)[part])

        total = total + eval_Q(snap.lattice, weight, fields)
    return total


@pytest.mark.parametrize("M_value", [4.0, 16.0, 32.0])
def test_boundary_term_decays_like_inverse_M(small_snapshots, M_value):
    snap = small_snapshots[1]
    majorant = sobolev_norm(_absolute_hat_sum(snap, 0, snap.eta), 0.6) / M_value
    assert sobolev_norm(families(snap, 1, M_value)[Family.N_0], 0.6) <= majorant * (1 + 1e-9)


def test_everything_resonant_above_phase_bound(small_snapshots):
    snap = small_snapshots[1]
    fam = families(snap, 1, 1e6)
    assert np.max(np.abs(fam[Family.N_0].coeffs)) == 0
    _close(fam[Family.N_R], snap.main_field)


def test_choose_M_returns_first_contracting_power(small_snapshots):
    snaps = small_snapshots[1:2]
    chosen = choose_M(snaps, (1, 2), 0.6)
    assert chosen is not None and chosen <= 64
    assert chosen == 2.0 ** round(np.log2(chosen))
    assert decay_scan(snaps, [chosen], [1, 2], 0.6)["chosen_M"] == chosen
    if chosen > 2:
        assert decay_scan(snaps, [chosen / 2], [1, 2], 0.6)["chosen_M"] is None


def test_decay_twin_of_identical_runs(small_snapshots):
    rows = decay_twin(small_snapshots[:2], small_snapshots[:2], M, (1,), 0.6)
    assert len(rows) == len(DECAY_FAMILIES)
    assert all(row["difference"] == 0 and row["ratio"] is None for row in rows)


def test_decay_twin_of_nearby_runs(small_snapshots):
    other = build_snapshots(simulate(two_mode(4, 0.1, 0.051), 1e-3, 1e-3, -1, Equation.MBO_PRIME))
    rows = decay_twin(small_snapshots[:2], other, M, (1,), 0.6)
    assert all(row["difference"] >= 0 and row["ratio"] is not None and np.isfinite(row["ratio"]) for row in rows)
    assert any(row["difference"] > 0 for row in rows)


def test_hathat_mass_complements_hat_mass(small_snapshots):
    snap = small_snapshots[1]
    etas = [2.0 ** -10, 2.0 ** -6, 2.0 ** -3]
    scan = hathat_mass_scan(snap, etas)
    assert scan["eta"] == etas and len(scan["mass"]) == 3
    assert all(mass >= 0 for mass in scan["mass"])
    assert isinstance(scan["nonincreasing"], bool) and isinstance(scan["nondecreasing"], bool)
    totals = [mass + float(np.sum(_absolute_hat_sum(snap, 0, eta).coeffs.real))
              for mass, eta in zip(scan["mass"], etas)]
    assert totals == pytest.approx([totals[0]] * 3, rel=1e-10)
    assert hathat_mass(snap, etas[0]) == scan["mass"][0]


def test_single_eta_scan_is_monotone_both_ways(small_snapshots):
    scan = hathat_mass_scan(small_snapshots[1], [2.0 ** -10])
    assert scan["nonincreasing"] and scan["nondecreasing"]


def test_uncached_lattice_rebuilds_and_logs(caplog):
    lattice = QuinticLattice(2, cache_limit=0)
    with caplog.at_level("DEBUG", logger="core.quintic"):
        first, second = lattice.blocks(), lattice.blocks()
    assert lattice.builds == 2
    assert len(first) == len(second) == 5
    assert "above the cache limit" in caplog.text
    cached = QuinticLattice(2)
    cached.blocks()
    cached.blocks()
    assert cached.builds == 1


def test_telescoping_needs_exact_generation(small_snapshots):
    with pytest.raises(ModeUnsupported):
        telescoping_check(small_snapshots, 3, M, 0.6)


def test_sampled_family_agrees_with_exact(small_snapshots):
    snap = small_snapshots[1]
    desc = TermDescriptor(Family.N_0, 1, M)
    estimate = sample_family(desc, snap, samples=20000, seed=5)
    exact = families(snap, 1, M)[Family.N_0]
    gap = np.linalg.norm(estimate.field.coeffs - exact.coeffs)
    assert gap <= 6 * np.linalg.norm(estimate.stderr) + 1e-14
    assert estimate.samples == 20000


def test_sampling_is_seeded(small_snapshots):
    desc = TermDescriptor(Family.N_R, 2, M)
    a = sample_family(desc, small_snapshots[0], samples=500, seed=3, threads=1)
    b = sample_family(desc, small_snapshots[0], samples=500, seed=3, threads=2)
    np.testing.assert_array_equal(a.field.coeffs, b.field.coeffs)
