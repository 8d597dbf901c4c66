"""Normal-form term families, the telescoping identity and decay measurements.

Generation-J families are evaluated exactly for J <= 2. The second generation
keeps the inner resonance value mu alongside the inner output frequency, so
the cumulative-phase conditions |Phi_1 + mu| <= 2|Phi_1| (or >) are applied
exactly rather than factorized.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from core.errors import ConfigInvalid, GenerationTooLarge, ModeUnsupported
from core.multipliers import ALL_IDS, MultiplierId
from core.montecarlo import sample_family
from core.quintic import (
    QuinticBlock, eval_Q, eval_Q_variants, omega_positions, phi_bound, resolved_Q, star,
    star_resolved, weight_positions,
)
from core.parallel import ordered_map
from core.spectral import SpectralField, sobolev_norm
from core.trees import J_MAX, Family, TermDescriptor
from core.twisted import Snapshot
from utils.helpers import fit_slope

logger = logging.getLogger(__name__)

EXACT_MAX_J = 2
STANDALONE = "standalone"
NONRESONANT = "nonresonant"


def _zeros(n_max: int) -> SpectralField:
    return SpectralField.zeros(n_max, is_real=False)


def _nonresonant_weight(mid: MultiplierId, snap: Snapshot, M: float):
    """m_hat e^{it Phi} / (i Phi) on |Phi| > M, the primitive in t of m_hat e^{it Phi}."""

    def weight(block: QuinticBlock) -> np.ndarray:
        hat = block.hat(mid, snap.eta, snap.sigma)[0]
        big = np.abs(block.phi) > M
        safe = np.where(big, block.phi, 1)
        return np.where(big, hat * np.exp(1j * snap.t * block.phi) / (1j * safe), 0)

    return weight


def _resonant_weight(mid: MultiplierId, snap: Snapshot, M: float):

    def weight(block: QuinticBlock) -> np.ndarray:
        hat = block.hat(mid, snap.eta, snap.sigma)[0]
        return np.where(np.abs(block.phi) <= M, hat * np.exp(1j * snap.t * block.phi), 0)

    return weight


def _omega_like(field: SpectralField, starred: bool) -> SpectralField:
    return star(field) if starred else field


def first_generation(snap: Snapshot, M: float) -> Dict[str, SpectralField]:
    """The five J = 1 families at the snapshot time."""
    N = snap.n_max
    out = {family: _zeros(N) for family in Family}
    for mid in ALL_IDS:
        fields = snap.fields(mid)
        out[Family.N_R] = out[Family.N_R] + eval_Q(snap.lattice, _resonant_weight(mid, snap, M), fields, snap.threads)
        variants = [{}]
        variants += [{pos: snap.rates[k]} for pos, k in weight_positions(mid)]
        variants += [{pos: _omega_like(snap.R0, st)} for pos, st in omega_positions(mid)]
        variants += [{pos: _omega_like(snap.main_field, st)} for pos, st in omega_positions(mid)]
        sums = eval_Q_variants(snap.lattice, _nonresonant_weight(mid, snap, M), fields, variants, snap.threads)
        out[Family.N_0] = out[Family.N_0] + sums[0]
        for field in sums[1:3]:
            out[Family.N_1] = out[Family.N_1] - field
        for field in sums[3:6]:
            out[Family.R] = out[Family.R] - field
        for field in sums[6:9]:
            out[Family.N_NEXT] = out[Family.N_NEXT] - field
    out[NONRESONANT] = snap.main_field - out[Family.N_R]
    return out


# Second generation

def _inner_sums(snap: Snapshot) -> Dict[str, np.ndarray]:
    """Phi-resolved inner nonlinearities and their substituted variants."""
    N = snap.n_max
    P = phi_bound(N)
    sums = {key: np.zeros((2 * N + 1, 2 * P + 1), dtype=np.complex128)
            for key in ("plain", "rate", "R0", "main")}
    for mid in ALL_IDS:
        fields = snap.fields(mid)

        def hat(block: QuinticBlock, mid=mid) -> np.ndarray:
            return block.hat(mid, snap.eta, snap.sigma)[0]

        sums["plain"] += resolved_Q(snap.lattice, hat, fields)
        sums["rate"] += resolved_Q(snap.lattice, hat, fields,
                                   [{pos: snap.rates[k]} for pos, k in weight_positions(mid)])
        sums["R0"] += resolved_Q(snap.lattice, hat, fields,
                                 [{pos: _omega_like(snap.R0, st)} for pos, st in omega_positions(mid)])
        sums["main"] += resolved_Q(snap.lattice, hat, fields,
                                   [{pos: _omega_like(snap.main_field, st)} for pos, st in omega_positions(mid)])
    return sums


def _kernels(t: float, P: int) -> Dict[str, np.ndarray]:
    """Matrices K[mu, phi] applying e^{it mu} and the cumulative-phase split."""
    mu = np.arange(-P, P + 1)[:, None]
    outer = np.arange(-P, P + 1)[None, :]
    total = outer + mu
    phase = np.exp(1j * t * mu)
    close = np.abs(total) <= 2 * np.abs(outer)
    safe = np.where(close, 1, total)
    return {
        "all": np.broadcast_to(phase, total.shape).astype(np.complex128),
        "R": np.where(close, phase, 0),
        "NR": np.where(close, 0, phase),
        "0": np.where(close, 0, phase / (1j * safe)),
    }


def second_generation(snap: Snapshot, M: float) -> Dict[str, SpectralField]:
    """The five J = 2 families, plus the standalone second-generation term and its
    non-resonant part for consistency checks."""
    N = snap.n_max
    P = phi_bound(N)
    inner = _inner_sums(snap)
    K = _kernels(snap.t, P)
    plain = {False: inner["plain"], True: star_resolved(inner["plain"])}
    H = {}
    for starred, G in plain.items():
        for key in ("all", "R", "NR", "0"):
            H[(key, starred)] = G @ K[key]
    for name in ("rate", "R0", "main"):
        H[(name, False)] = inner[name] @ K["0"]
        H[(name, True)] = star_resolved(inner[name]) @ K["0"]

    keys = [Family.N_R, Family.N_0, Family.N_1, Family.R, Family.N_NEXT, STANDALONE, NONRESONANT]
    out = {key: np.zeros(2 * N + 1, dtype=np.complex128) for key in keys}

    for mid in ALL_IDS:
        base = [f.coeffs for f in snap.fields(mid)]
        w_out = _nonresonant_weight(mid, snap, M)
        rate_slots = [(pos, snap.rates[k].coeffs) for pos, k in weight_positions(mid)]
        omegas = omega_positions(mid)

        def run(block: QuinticBlock) -> Dict[str, complex]:
            sums = {key: 0j for key in keys}
            w = -w_out(block)
            if not np.any(w):
                return sums
            idx = block.nv + N
            col = block.phi + P
            vals = [base[pos][idx[pos]] for pos in range(5)]
            for pos, starred in omegas:
                others = [q for q in range(5) if q != pos]
                lead = w.copy()
                for q in others:
                    lead = lead * vals[q]
                row = idx[pos]

                def pick(name: str) -> np.ndarray:
                    return H[(name, starred)][row, col]

                h0 = pick("0")
                sums[Family.N_R] += np.sum(lead * pick("R"))
                sums[Family.N_0] += np.sum(lead * h0)
                sums[NONRESONANT] += np.sum(lead * pick("NR"))
                sums[STANDALONE] += np.sum(lead * pick("all"))

                n1 = np.sum(lead * pick("rate"))
                for q, rate in rate_slots:
                    n1 += np.sum(_replace(w, vals, others, q, rate[idx[q]]) * h0)
                sums[Family.N_1] -= n1

                for name, family, field in (("R0", Family.R, snap.R0), ("main", Family.N_NEXT, snap.main_field)):
                    total = np.sum(lead * pick(name))
                    for q, q_starred in omegas:
                        if q == pos:
                            continue
                        sub = _omega_like(field, q_starred).coeffs[idx[q]]
                        total += np.sum(_replace(w, vals, others, q, sub) * h0)
                    sums[family] -= total
            return sums

        for n_index, sums in enumerate(ordered_map(run, snap.lattice.blocks(), snap.threads)):
            for key in keys:
                out[key][n_index] += sums[key]
    return {key: SpectralField(values) for key, values in out.items()}


def _replace(w: np.ndarray, vals: Sequence[np.ndarray], others: Sequence[int], q: int,
             sub: np.ndarray) -> np.ndarray:
    out = w
    for p in others:
        out = out * (sub if p == q else vals[p])
    return out


def families(snap: Snapshot, J: int, M: float) -> Dict[str, SpectralField]:
    """Exact families of generation J (cached on the snapshot).

    Raises:
        GenerationTooLarge: If J exceeds the maximal generation
        ModeUnsupported: If J is beyond exact evaluation
    """
    if J > J_MAX:
        raise GenerationTooLarge(f"generation {J} exceeds the supported maximum {J_MAX}")
    if J > EXACT_MAX_J:
        raise ModeUnsupported(f"generation {J} is available in Monte-Carlo mode only")
    key = (J, float(M))
    if key not in snap.families:
        logger.debug("evaluating generation %d at t=%.6g, M=%g", J, snap.t, M)
        snap.families[key] = first_generation(snap, M) if J == 1 else second_generation(snap, M)
    return snap.families[key]


def eval_term(desc: TermDescriptor, snap: Snapshot, mode: str = "exact", samples: int = 20000,
              seed: int = 0) -> SpectralField:
    """Value of one family at the snapshot time.

    Raises:
        GenerationTooLarge: If desc.J exceeds the maximal generation
        ModeUnsupported: For exact mode beyond J = 2 or an unknown mode
    """
    if desc.J > J_MAX:
        raise GenerationTooLarge(f"generation {desc.J} exceeds the supported maximum {J_MAX}")
    if desc.eta != snap.eta:
        raise ConfigInvalid(f"snapshot was built with eta={snap.eta}, descriptor asks {desc.eta}")
    if mode == "exact":
        return families(snap, desc.J, desc.M)[desc.family]
    if mode == "mc":
        return sample_family(desc, snap, samples, seed).field
    raise ModeUnsupported(f"unknown evaluation mode {mode!r}")


# Telescoping

def _trapezoid(fields: Sequence[SpectralField], times: np.ndarray) -> np.ndarray:
    return trapezoid(np.stack([f.coeffs for f in fields]), times, axis=0)


def _quadrature_error(fields: Sequence[SpectralField], times: np.ndarray, s: float) -> Optional[float]:
    """Richardson estimate |I_h - I_2h| / 3, when the sample count allows halving."""
    if len(times) < 3 or (len(times) - 1) % 2:
        return None
    fine = _trapezoid(fields, times)
    coarse = trapezoid(np.stack([f.coeffs for f in fields[::2]]), times[::2], axis=0)
    return sobolev_norm(SpectralField(fine - coarse), s) / 3.0


def telescoping_check(snaps: Sequence[Snapshot], J: int, M: float, s: float) -> dict:
    """Residual of the integrated generation-J equation for omega over the snapshot window."""
    if J not in (1, 2):
        raise ModeUnsupported("telescoping is evaluated exactly for J = 1 and J = 2")
    times = np.array([snap.t for snap in snaps])
    first, last = snaps[0], snaps[-1]
    lhs = last.state.omega - first.state.omega
    boundary = _zeros(first.n_max)
    for j in range(1, J + 1):
        boundary = boundary + families(last, j, M)[Family.N_0] - families(first, j, M)[Family.N_0]
    integrand = []
    for snap in snaps:
        total = snap.R0
        for j in range(1, J + 1):
            fam = families(snap, j, M)
            total = total + fam[Family.N_R] + fam[Family.N_1] + fam[Family.R]
        total = total + families(snap, J, M)[Family.N_NEXT]
        integrand.append(total)
    integral = SpectralField(_trapezoid(integrand, times))
    residual = lhs - boundary - integral
    return {
        "J": J,
        "M": M,
        "samples": len(snaps),
        "residual": sobolev_norm(residual, s),
        "quadrature_error": _quadrature_error(integrand, times, s),
        "lhs_norm": sobolev_norm(lhs, s),
    }


def cross_decomposition(snaps: Sequence[Snapshot], M: float, s: float, mode: str = "exact",
                        samples: int = 20000, seed: int = 0) -> dict:
    """Compare the integral of the second-generation term with its own expansion.

    The expansion is N_0^(2) at the endpoints plus the integral of
    N_R^(2) + N_1^(2) + R^(2) + N^(3); in "mc" mode N^(3) is sampled.
    """
    times = np.array([snap.t for snap in snaps])
    first, last = snaps[0], snaps[-1]
    standalone = [families(snap, 1, M)[Family.N_NEXT] for snap in snaps]
    expanded, errors = [], []
    for index, snap in enumerate(snaps):
        fam = families(snap, 2, M)
        total = fam[Family.N_R] + fam[Family.N_1] + fam[Family.R]
        if mode == "exact":
            total = total + fam[Family.N_NEXT]
            errors.append(0.0)
        elif mode == "mc":
            desc = TermDescriptor(Family.N_NEXT, 2, M, snap.eta)
            estimate = sample_family(desc, snap, samples, seed + index)
            total = total + estimate.field
            errors.append(sobolev_norm(SpectralField(estimate.stderr), s))
        else:
            raise ModeUnsupported(f"unknown evaluation mode {mode!r}")
        expanded.append(total)
    boundary = families(last, 2, M)[Family.N_0] - families(first, 2, M)[Family.N_0]
    lhs = SpectralField(_trapezoid(standalone, times))
    rhs = boundary + SpectralField(_trapezoid(expanded, times))
    mc_error = float(trapezoid(np.array(errors), times)) if len(times) > 1 else 0.0
    quadrature = [_quadrature_error(fields, times, s) for fields in (standalone, expanded)]
    quadrature = None if None in quadrature else quadrature[0] + quadrature[1]
    gap = sobolev_norm(lhs - rhs, s)
    return {
        "M": M,
        "mode": mode,
        "gap": gap,
        "mc_error": mc_error,
        "quadrature_error": quadrature,
        "standalone_norm": sobolev_norm(lhs, s),
        "within_error": gap <= 3.0 * mc_error + 2.0 * (quadrature or 0.0) + 1e-10,
    }


# Decay

DECAY_FAMILIES = (Family.N_0, Family.N_R, Family.N_1, Family.R, Family.N_NEXT)

# Exponent e with ||family^(J)|| <= M^e (C_0 M^{-1/2})^J.
BOUND_PREFACTOR = {Family.N_0: 0.0, Family.N_R: 1.0, Family.N_1: 0.5, Family.R: 0.0}


def _family_norm(snaps: Sequence[Snapshot], J: int, M: float, family: Family, s: float,
                 mode: str, samples: int, seed: int) -> float:
    norms = []
    for index, snap in enumerate(snaps):
        if J <= EXACT_MAX_J and mode == "exact":
            field = families(snap, J, M)[family]
        else:
            field = sample_family(TermDescriptor(family, J, M, snap.eta), snap, samples, seed + index).field
        norms.append(sobolev_norm(field, s - 1 if family is Family.N_NEXT else s))
    return max(norms) if norms else 0.0


def decay_scan(snaps: Sequence[Snapshot], M_values: Sequence[float], J_range: Sequence[int], s: float,
               mode: str = "exact", samples: int = 20000, seed: int = 0) -> dict:
    """Per-generation family norms, fitted per-generation ratios and their M scaling.

    Norms are suprema over the snapshots, in l^2_s (l^2_{s-1} for N^(J+1)).
    J = 3 always uses Monte-Carlo.
    """
    J_range = sorted(J_range)
    if J_range and J_range[-1] > J_MAX:
        raise GenerationTooLarge(f"generation {J_range[-1]} exceeds the supported maximum {J_MAX}")
    rows, ratios = [], {}
    for M in M_values:
        for family in DECAY_FAMILIES:
            norms = {J: _family_norm(snaps, J, M, family, s, mode, samples, seed) for J in J_range}
            for J, norm in norms.items():
                rows.append({
                    "M": M, "J": J, "family": family.value, "norm": norm,
                    "scaled": (norm * M ** (0.5 * J - BOUND_PREFACTOR[family])
                               if family in BOUND_PREFACTOR else None),
                })
            steps = [norms[b] / norms[a] for a, b in zip(J_range, J_range[1:]) if norms[a] > 0]
            rho = float(np.exp(np.mean(np.log(steps)))) if steps and all(x > 0 for x in steps) else 0.0
            ratios[(family.value, M)] = rho
    slopes = {}
    if len(M_values) >= 2:
        for family in DECAY_FAMILIES:
            rhos = [ratios[(family.value, M)] for M in M_values]
            if all(r > 0 for r in rhos):
                slopes[family.value] = fit_slope(M_values, rhos)
    chosen = None
    for M in sorted(M_values):
        if all(ratios[(f.value, M)] < 0.5 for f in DECAY_FAMILIES):
            chosen = M
            break
    return {
        "rows": rows,
        "ratios": [{"family": f, "M": M, "ratio": r} for (f, M), r in ratios.items()],
        "slopes": slopes,
        "chosen_M": chosen,
    }


def choose_M(snaps: Sequence[Snapshot], J_range: Sequence[int] = (1, 2), s: float = 0.6,
             start: float = 2.0, limit: float = 4096.0) -> Optional[float]:
    """Smallest power of two whose fitted per-generation ratios all fall below 1/2."""
    M = start
    while M <= limit:
        if decay_scan(snaps, [M], J_range, s)["chosen_M"] is not None:
            return M
        M *= 2
    return None


def decay_twin(snaps: Sequence[Snapshot], others: Sequence[Snapshot], M: float, J_range: Sequence[int],
               s: float) -> List[dict]:
    """Family differences between two trajectories relative to ||u - u~|| + ||omega - omega~||."""
    scale = (max(sobolev_norm(a.u - b.u, s) for a, b in zip(snaps, others))
             + max(sobolev_norm(a.state.omega - b.state.omega, s) for a, b in zip(snaps, others)))
    rows = []
    for J in J_range:
        for family in DECAY_FAMILIES:
            gap = max(sobolev_norm(families(a, J, M)[family] - families(b, J, M)[family], s)
                      for a, b in zip(snaps, others))
            rows.append({"J": J, "family": family.value, "difference": gap,
                         "ratio": gap / scale if scale > 0 else None})
    return rows
