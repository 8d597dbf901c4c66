"""Brute-force quintilinear sums over n = n1 + ... + n5 on a truncated lattice.

Tuples are grouped in blocks by output frequency n; a block carries the five
input frequencies and lazily the resonance function and multiplier values.
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.multipliers import (
    ETA_DEFAULT, OMEGA, OMEGA_STAR, MultiplierId, hat_mask, multiplier_values, phi,
    slot_pattern,
)
from core.parallel import ordered_map
from core.spectral import SpectralField

logger = logging.getLogger(__name__)

CACHE_LIMIT = 3_000_000

Weight = Callable[["QuinticBlock"], np.ndarray]


class QuinticBlock:
    """All tuples (n1, ..., n5) of the lattice summing to one output n."""

    def __init__(self, n: int, nv: np.ndarray):
        self.n = int(n)
        self.nv = nv
        self._phi = None
        self._masks: Dict[tuple, np.ndarray] = {}

    def __len__(self) -> int:
        return self.nv.shape[1]

    @property
    def phi(self) -> np.ndarray:
        if self._phi is None:
            self._phi = phi(self.n, self.nv[0], self.nv[2], self.nv[4])
        return self._phi

    def multiplier(self, mid: MultiplierId, sigma: int) -> np.ndarray:
        return multiplier_values(mid, self.n, *self.nv, sigma=sigma)

    def mask(self, mid: MultiplierId, eta: float) -> np.ndarray:
        """Hat indicator; shared by m_i and m_i* and by all i using the same harmless set."""
        key = (mid.uses_A2, eta)
        if key not in self._masks:
            self._masks[key] = hat_mask(mid, self.n, *self.nv, eta=eta)
        return self._masks[key]

    def hat(self, mid: MultiplierId, eta: float, sigma: int) -> Tuple[np.ndarray, np.ndarray]:
        m = self.multiplier(mid, sigma)
        keep = self.mask(mid, eta)
        return np.where(keep, m, 0), np.where(keep, 0, m)


class QuinticLattice:
    """Frequency tuples with every |n_j| <= n_max and output |n| <= n_max."""

    scale = 1.0

    def __init__(self, n_max: int, cache_limit: int = CACHE_LIMIT):
        self.n_max = n_max
        self.cache_limit = cache_limit
        self._blocks: Optional[List[QuinticBlock]] = None
        self.builds = 0

    @property
    def size(self) -> int:
        return sum(len(block) for block in self.blocks())

    def _build(self, n: int) -> QuinticBlock:
        N = self.n_max
        axis = np.arange(-N, N + 1, dtype=np.int64)
        grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=0).reshape(4, -1)
        n5 = n - grid.sum(axis=0)
        keep = np.abs(n5) <= N
        return QuinticBlock(n, np.vstack([grid[:, keep], n5[keep][None, :]]))

    def blocks(self) -> List[QuinticBlock]:
        if self._blocks is not None:
            return self._blocks
        built = [self._build(n) for n in range(-self.n_max, self.n_max + 1)]
        self.builds += 1
        total = sum(len(b) for b in built)
        if total <= self.cache_limit:
            self._blocks = built
        else:
            logger.debug("lattice n_max=%d holds %d tuples above the cache limit %d; build %d",
                         self.n_max, total, self.cache_limit, self.builds)
        return built

    def __repr__(self) -> str:
        return f"QuinticLattice(n_max={self.n_max})"


class SampledLattice:
    """Uniform samples of (n1, ..., n4) per output n with n5 closing the sum.

    Sums over the blocks estimate the full lattice sum after multiplying by
    scale; the same samples serve every call so estimates of different
    inputs share their sampling error.
    """

    def __init__(self, n_max: int, samples: int, seed: int = 0):
        self.n_max = n_max
        self.samples = samples
        self.seed = seed
        self.scale = float(2 * n_max + 1) ** 4 / samples
        rng = np.random.default_rng(seed)
        self._blocks = []
        for n in range(-n_max, n_max + 1):
            head = rng.integers(-n_max, n_max + 1, size=(4, samples))
            n5 = n - head.sum(axis=0)
            keep = np.abs(n5) <= n_max
            self._blocks.append(QuinticBlock(n, np.vstack([head[:, keep], n5[keep][None, :]])))

    def blocks(self) -> List[QuinticBlock]:
        return self._blocks

    def __repr__(self) -> str:
        return f"SampledLattice(n_max={self.n_max}, samples={self.samples}, seed={self.seed})"


@lru_cache(maxsize=4)
def lattice_for(n_max: int) -> QuinticLattice:
    return QuinticLattice(n_max)


# Slot fields

def star(field: SpectralField) -> SpectralField:
    """The omega* counterpart of an omega-type field: conj(f(-n))."""
    return field.conjugate()


def slot_fields(mid: MultiplierId, omega: SpectralField, omega_star: SpectralField,
                weights: Mapping[int, SpectralField]) -> List[SpectralField]:
    """Fields read by the five slots of Q_i, weights truncated to the omega lattice."""
    fields = []
    for slot in slot_pattern(mid):
        if slot == OMEGA:
            fields.append(omega)
        elif slot == OMEGA_STAR:
            fields.append(omega_star)
        else:
            fields.append(weights[slot].resize(omega.n_max))
    return fields


def omega_positions(mid: MultiplierId) -> List[Tuple[int, bool]]:
    """(slot position 0..4, slot is starred) for the three omega slots."""
    return [(pos, slot == OMEGA_STAR) for pos, slot in enumerate(slot_pattern(mid))
            if slot in (OMEGA, OMEGA_STAR)]


def weight_positions(mid: MultiplierId) -> List[Tuple[int, int]]:
    """(slot position, exponent k) for the two weight slots."""
    return [(pos, slot) for pos, slot in enumerate(slot_pattern(mid)) if isinstance(slot, int)]


# Sums

def _slot_product(block: QuinticBlock, arrays: Sequence[np.ndarray], offset: int) -> np.ndarray:
    out = arrays[0][block.nv[0] + offset]
    for pos in range(1, 5):
        out = out * arrays[pos][block.nv[pos] + offset]
    return out


def eval_Q_variants(lattice: QuinticLattice, weight: Optional[Weight], fields: Sequence[SpectralField],
                    variants: Sequence[Mapping[int, SpectralField]] = ({},),
                    threads: Optional[int] = 1) -> List[SpectralField]:
    """Q(weight; fields) with some slots replaced, one result per variant.

    The weight is evaluated once per block and shared by all variants.
    """
    N = lattice.n_max
    base = [f.coeffs for f in fields]
    variant_arrays = []
    for variant in variants:
        arrays = list(base)
        for pos, field in variant.items():
            arrays[pos] = field.resize(N).coeffs
        variant_arrays.append(arrays)

    def run(block: QuinticBlock) -> List[complex]:
        w = None if weight is None else weight(block)
        sums = []
        for arrays in variant_arrays:
            vals = _slot_product(block, arrays, N)
            sums.append(complex(np.sum(vals if w is None else w * vals)))
        return sums

    per_block = ordered_map(run, lattice.blocks(), threads)
    results = []
    for v in range(len(variants)):
        coeffs = np.array([sums[v] for sums in per_block])
        results.append(SpectralField(coeffs))
    return results


def eval_Q(lattice: QuinticLattice, weight: Optional[Weight], fields: Sequence[SpectralField],
           threads: Optional[int] = 1) -> SpectralField:
    """Q(weight; f1, ..., f5)(n) = sum over n = n1 + ... + n5 of weight * f1(n1) ... f5(n5)."""
    for field in fields:
        if field.n_max != lattice.n_max:
            raise ValueError(f"slot field on lattice {field.n_max}, expected {lattice.n_max}")
    return eval_Q_variants(lattice, weight, fields, ({},), threads)[0]


def phi_bound(n_max: int) -> int:
    return 4 * n_max * n_max


def resolved_Q(lattice: QuinticLattice, weight: Optional[Weight], fields: Sequence[SpectralField],
               variants: Sequence[Mapping[int, SpectralField]] = ({},)) -> np.ndarray:
    """Phi-resolved partial sums G(n, mu), summed over the given slot variants.

    Row n + N, column mu + P holds the contribution of tuples with output n and
    resonance value mu, where P = phi_bound(N).
    """
    N = lattice.n_max
    P = phi_bound(N)
    width = 2 * P + 1
    base = [f.coeffs for f in fields]
    total = np.zeros((2 * N + 1) * width, dtype=np.complex128)
    for variant in variants:
        arrays = list(base)
        for pos, field in variant.items():
            arrays[pos] = field.resize(N).coeffs
        for block in lattice.blocks():
            vals = _slot_product(block, arrays, N)
            if weight is not None:
                vals = weight(block) * vals
            idx = (block.n + N) * width + (block.phi + P)
            size = total.size
            total += np.bincount(idx, weights=vals.real, minlength=size)
            total += 1j * np.bincount(idx, weights=vals.imag, minlength=size)
    return total.reshape(2 * N + 1, width)


def star_resolved(G: np.ndarray) -> np.ndarray:
    """Resolved sums of the omega* counterpart: conj(G(-n, -mu))."""
    return np.conj(G[::-1, ::-1])


# Oracle

def eval_Q_loops(weight: Callable[[int, Tuple[int, int, int, int, int]], complex],
                 fields: Sequence[SpectralField]) -> SpectralField:
    """Nested-loop evaluation of Q used to cross-check eval_Q on small lattices."""
    N = fields[0].n_max
    out = np.zeros(2 * N + 1, dtype=np.complex128)
    for n in range(-N, N + 1):
        acc = 0j
        for n1 in range(-N, N + 1):
            for n2 in range(-N, N + 1):
                for n3 in range(-N, N + 1):
                    for n4 in range(-N, N + 1):
                        n5 = n - n1 - n2 - n3 - n4
                        if abs(n5) > N:
                            continue
                        acc += (weight(n, (n1, n2, n3, n4, n5)) * fields[0][n1] * fields[1][n2]
                                * fields[2][n3] * fields[3][n4] * fields[4][n5])
        out[n + N] = acc
    return SpectralField(out)


def hat_phase_weight(mid: MultiplierId, t: float, eta: float = ETA_DEFAULT, sigma: int = 1,
                     part: str = "hat") -> Weight:
    """Weight e^{it Phi} m_hat (part="hat"), m_hathat ("hathat") or m ("full")."""

    def weight(block: QuinticBlock) -> np.ndarray:
        if part == "full":
            m = block.multiplier(mid, sigma)
        else:
            hat, hathat = block.hat(mid, eta, sigma)
            m = hat if part == "hat" else hathat
        return m * np.exp(1j * t * block.phi)

    return weight
