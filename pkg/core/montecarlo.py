"""Monte-Carlo evaluation of normal-form families over (tree, index) samples.

Each tree is a stratum with its own seeded stream. Within a stratum the root
frequency, the multiplier indices and children 1-4 of every internal node are
drawn uniformly; child 5 closes the frequency constraint and samples whose
closure leaves the lattice contribute zero.
"""

import logging
from typing import List, NamedTuple, Optional

import numpy as np

from core.errors import GenerationTooLarge
from core.multipliers import OMEGA, OMEGA_STAR, MultiplierId, hat_values, phi, slot_pattern
from core.parallel import ordered_map
from core.quintic import star
from core.spectral import SpectralField
from core.trees import J_MAX, Family, TermDescriptor, Tree, enumerate_trees, in_nonresonant, in_resonant

logger = logging.getLogger(__name__)


class McEstimate(NamedTuple):
    field: SpectralField
    stderr: np.ndarray
    samples: int


# slot kind per (i, starred, position): 0 omega, 1 omega*, 2 weight; exponent for weights
_KIND = np.zeros((8, 2, 5), dtype=np.int64)
_EXPONENT = np.zeros((8, 2, 5), dtype=np.int64)
for _i in range(1, 8):
    for _st in (0, 1):
        for _pos, _slot in enumerate(slot_pattern(MultiplierId(_i, bool(_st)))):
            if _slot == OMEGA:
                _KIND[_i, _st, _pos] = 0
            elif _slot == OMEGA_STAR:
                _KIND[_i, _st, _pos] = 1
            else:
                _KIND[_i, _st, _pos] = 2
                _EXPONENT[_i, _st, _pos] = _slot


def _lookup(field_by_key: dict, keys: np.ndarray, freqs: np.ndarray, N: int) -> np.ndarray:
    """Values field_by_key[key][freq] per sample."""
    out = np.zeros(freqs.shape, dtype=np.complex128)
    inside = np.abs(freqs) <= N
    for key, field in field_by_key.items():
        sel = (keys == key) & inside
        if np.any(sel):
            out[sel] = field.coeffs[freqs[sel] + N]
    return out


def _stratum(tree: Tree, desc: TermDescriptor, snap, samples: int, rng: np.random.Generator,
             substitute: Optional[SpectralField]):
    N = snap.n_max
    J = tree.J
    size = 2 * N + 1
    root = rng.integers(-N, N + 1, size=samples)
    valid = np.ones(samples, dtype=bool)
    out_freq = {0: root}
    parity = {0: np.zeros(samples, dtype=np.int64)}
    index, children, hats, phases = {}, {}, {}, {}

    for j in range(J):
        n_j = out_freq[j]
        i_j = rng.integers(1, 8, size=samples)
        kids = rng.integers(-N, N + 1, size=(4, samples))
        last = n_j - kids.sum(axis=0)
        valid &= np.abs(last) <= N
        kids = np.vstack([kids, last[None, :]])
        index[j], children[j] = i_j, kids
        hat = np.zeros(samples, dtype=np.complex128)
        for i in range(1, 8):
            for st in (0, 1):
                sel = (i_j == i) & (parity[j] == st)
                if np.any(sel):
                    hat[sel] = hat_values(MultiplierId(i, bool(st)), n_j[sel], *kids[:, sel],
                                          eta=desc.eta, sigma=snap.sigma)[0]
        hats[j] = hat
        phases[j] = phi(n_j, kids[0], kids[2], kids[4])
        for child, (parent, pos) in enumerate(tree.attachments, start=1):
            if parent == j:
                out_freq[child] = kids[pos - 1]
                kind = _KIND[i_j, parity[j], pos - 1]
                parity[child] = (kind == 1).astype(np.int64)

    mus = np.stack([phases[j] for j in range(J)], axis=1)
    tilde = np.cumsum(mus, axis=1)
    coeff = (-1.0) ** (J - 1) * np.prod(np.stack([hats[j] for j in range(J)]), axis=0)
    for j in range(J - 1):
        coeff = coeff / (1j * np.where(tilde[:, j] == 0, 1, tilde[:, j]))
    total_phase = np.exp(1j * snap.t * tilde[:, J - 1])

    # leaves: (value, "weight" | "omega", rate or parity, frequencies)
    attached = {(parent, pos) for parent, pos in tree.attachments}
    omega_fields = {0: snap.state.omega, 1: snap.state.omega_star}
    leaves = []
    for j in range(J):
        kind = _KIND[index[j], parity[j]]
        expo = _EXPONENT[index[j], parity[j]]
        for pos in range(1, 6):
            if (j, pos) in attached:
                continue
            freqs = children[j][pos - 1]
            k = kind[:, pos - 1]
            if pos in (2, 4):
                e = expo[:, pos - 1]
                value = _lookup(snap.slot_weights, e, freqs, N)
                rate = _lookup(snap.rates, e, freqs, N)
                leaves.append((value, "weight", rate, freqs))
            else:
                value = _lookup(omega_fields, k, freqs, N)
                leaves.append((value, "omega", k, freqs))

    def product(skip: Optional[int] = None, sub: Optional[np.ndarray] = None) -> np.ndarray:
        acc = np.ones(samples, dtype=np.complex128)
        for index_leaf, (value, _, _, _) in enumerate(leaves):
            acc = acc * (sub if index_leaf == skip else value)
        return acc

    if desc.family is Family.N_R:
        mask = in_resonant(mus, desc.M)
        f = coeff * total_phase * product()
    else:
        mask = in_nonresonant(mus, desc.M)
        last_tilde = np.where(tilde[:, J - 1] == 0, 1, tilde[:, J - 1])
        base = coeff * total_phase / (1j * last_tilde)
        if desc.family is Family.N_0:
            f = base * product()
        elif desc.family is Family.N_1:
            f = np.zeros(samples, dtype=np.complex128)
            for index_leaf, (_, kind, rate, _) in enumerate(leaves):
                if kind == "weight":
                    f -= base * product(index_leaf, rate)
        else:
            f = np.zeros(samples, dtype=np.complex128)
            fields = {0: substitute, 1: star(substitute)}
            for index_leaf, (_, kind, k, freqs) in enumerate(leaves):
                if kind == "omega":
                    f -= base * product(index_leaf, _lookup(fields, k, freqs, N))
    f = np.where(valid & mask, f, 0)

    volume = 7.0 ** J * float(size) ** (4 * J + 1)
    contrib = np.zeros((size, samples), dtype=np.complex128)
    contrib[root + N, np.arange(samples)] = volume * f
    mean = contrib.mean(axis=1)
    var = np.mean(np.abs(contrib) ** 2, axis=1) - np.abs(mean) ** 2
    return mean, np.maximum(var, 0.0) / samples


def sample_family(desc: TermDescriptor, snap, samples: int = 20000, seed: int = 0,
                  threads: Optional[int] = None) -> McEstimate:
    """Stratified Monte-Carlo estimate of one family with per-mode standard errors.

    Raises:
        GenerationTooLarge: If desc.J exceeds the maximal generation
    """
    if desc.J > J_MAX:
        raise GenerationTooLarge(f"generation {desc.J} exceeds the supported maximum {J_MAX}")
    trees = enumerate_trees(desc.J)
    streams = np.random.SeedSequence(seed).spawn(len(trees))
    substitute = None
    if desc.family is Family.R:
        substitute = snap.R0
    elif desc.family is Family.N_NEXT:
        substitute = snap.main_field

    def run(job):
        tree, stream = job
        return _stratum(tree, desc, snap, samples, np.random.default_rng(stream), substitute)

    results: List = ordered_map(run, list(zip(trees, streams)), threads or snap.threads)
    mean = np.sum([r[0] for r in results], axis=0)
    var = np.sum([r[1] for r in results], axis=0)
    logger.debug("sampled %s J=%d over %d trees", desc.family.value, desc.J, len(trees))
    return McEstimate(SpectralField(mean), np.sqrt(var), samples * len(trees))
