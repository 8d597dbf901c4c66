"""Ordered 5-ary trees indexing the normal-form expansion, and resonance sets."""

import logging
from dataclasses import dataclass
from enum import Enum
from math import prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigInvalid, GenerationTooLarge
from core.multipliers import ETA_DEFAULT

logger = logging.getLogger(__name__)

J_MAX = 3
OMEGA_CHILDREN = (1, 3, 5)
WEIGHT_CHILDREN = (2, 4)


@dataclass(frozen=True)
class Node:
    index: int
    parent: Optional[int]
    child_order: Optional[int]
    internal: Optional[int] = None


@dataclass(frozen=True)
class Tree:
    """A generation-J tree built by attaching internal node j to an omega leaf.

    attachments[j - 1] = (parent internal node, child position in {1, 3, 5})
    for internal node j >= 1; node 0 is the root.
    """

    attachments: Tuple[Tuple[int, int], ...]

    @property
    def J(self) -> int:
        return len(self.attachments) + 1

    @property
    def nodes(self) -> List[Node]:
        nodes = [Node(0, None, None, internal=0)]
        owner = {0: 0}
        slots: Dict[Tuple[int, int], int] = {}
        for j in range(self.J):
            if j > 0:
                parent_j, pos = self.attachments[j - 1]
                node_index = slots[(parent_j, pos)]
                old = nodes[node_index]
                nodes[node_index] = Node(old.index, old.parent, old.child_order, internal=j)
                owner[j] = node_index
            for pos in range(1, 6):
                index = len(nodes)
                nodes.append(Node(index, owner[j], pos))
                slots[(j, pos)] = index
        return nodes

    def children(self, j: int) -> Dict[int, Optional[int]]:
        """Child position -> internal node attached there (None for a leaf)."""
        kids = {pos: None for pos in range(1, 6)}
        for child, (parent_j, pos) in enumerate(self.attachments, start=1):
            if parent_j == j:
                kids[pos] = child
        return kids

    @property
    def leaves(self) -> List[Node]:
        return [node for node in self.nodes if node.internal is None]

    @property
    def weight_leaves(self) -> List[Node]:
        return [node for node in self.leaves if node.child_order in WEIGHT_CHILDREN]

    @property
    def omega_leaves(self) -> List[Node]:
        return [node for node in self.leaves if node.child_order in OMEGA_CHILDREN]

    def __repr__(self) -> str:
        return f"Tree(J={self.J}, attachments={self.attachments})"


def tree_count(J: int) -> int:
    return prod(2 * j - 1 for j in range(1, J + 1))


def enumerate_trees(J: int, j_max: int = J_MAX) -> List[Tree]:
    """All trees of generation J in a fixed order.

    Raises:
        GenerationTooLarge: If J exceeds j_max
    """
    if J < 1:
        raise ValueError(f"generation must be at least 1, got {J}")
    if J > j_max:
        raise GenerationTooLarge(f"generation {J} exceeds the supported maximum {j_max}")
    partial = [()]
    for j in range(1, J):
        grown = []
        for attachments in partial:
            taken = set(attachments)
            free = [(parent, pos) for parent in range(j) for pos in OMEGA_CHILDREN
                    if (parent, pos) not in taken]
            grown.extend(attachments + (slot,) for slot in free)
        partial = grown
    return [Tree(attachments) for attachments in partial]


# Resonance sets on chains (mu_1, ..., mu_J)

def _cumulative(mus: np.ndarray) -> np.ndarray:
    return np.cumsum(np.atleast_2d(mus), axis=1)


def in_nonresonant(mus, M: float) -> np.ndarray:
    """Rows of mus lying in the non-resonant set of generation mus.shape[1]."""
    mus = np.atleast_2d(np.asarray(mus, dtype=np.int64))
    tilde = np.abs(_cumulative(mus))
    ok = tilde[:, 0] > M
    for j in range(1, mus.shape[1]):
        ok &= tilde[:, j] > 2 * tilde[:, j - 1]
    return ok


def in_resonant(mus, M: float) -> np.ndarray:
    mus = np.atleast_2d(np.asarray(mus, dtype=np.int64))
    J = mus.shape[1]
    if J == 1:
        return np.abs(mus[:, 0]) <= M
    tilde = np.abs(_cumulative(mus))
    return in_nonresonant(mus[:, :J - 1], M) & (tilde[:, J - 1] <= 2 * tilde[:, J - 2])


def resonance_partition_check(J: int, M: float, bound: int) -> dict:
    """Check that NR(J) x Z splits into R(J+1) and NR(J+1) on |mu_j| <= bound."""
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    counts = {"nonresonant_parent": 0, "resonant_child": 0, "nonresonant_child": 0,
              "overlap": 0, "uncovered": 0, "stray": 0}
    grids = np.meshgrid(*([axis] * J), indexing="ij")
    tail = np.stack([g.ravel() for g in grids], axis=1)
    for head in axis:
        rows = np.column_stack([np.full(tail.shape[0], head), tail])
        parent = in_nonresonant(rows[:, :J], M)
        res = in_resonant(rows, M)
        nonres = in_nonresonant(rows, M)
        counts["nonresonant_parent"] += int(parent.sum())
        counts["resonant_child"] += int(res.sum())
        counts["nonresonant_child"] += int(nonres.sum())
        counts["overlap"] += int((res & nonres).sum())
        counts["uncovered"] += int((parent & ~(res | nonres)).sum())
        counts["stray"] += int((~parent & (res | nonres)).sum())
    counts["ok"] = counts["overlap"] == 0 and counts["uncovered"] == 0 and counts["stray"] == 0
    counts.update({"J": J, "M": M, "bound": bound})
    return counts


def _sample_chains(rng: np.random.Generator, J: int, M: float, samples: int) -> np.ndarray:
    scale = 4.0 * M * 2.0 ** J
    return rng.integers(-int(scale), int(scale) + 1, size=(samples, J))


def phase_bound_check(J: int, M: float, delta: float, samples: int, seed: int) -> dict:
    """Empirical constants of the resonant and non-resonant phase bounds.

    For a chain in the resonant set the constant compares 1/prod_{j<J} |tilde Phi_j|
    with prod_{j<=J-2} (2^{j-1}M)^{-1/2} prod_j <Phi_j>^{-1/2}; in the
    non-resonant set 1/prod_j |tilde Phi_j| is compared with
    prod (2^{j-1}M)^{-delta} <Phi_j>^{-(1-delta)} and with the delta = 1/2 form.
    Constants are reported as (ratio)^{1/J}.
    """
    rng = np.random.default_rng(seed)
    mus = _sample_chains(rng, J, M, samples)
    tilde = _cumulative(mus).astype(np.float64)
    bracket = np.sqrt(1.0 + mus.astype(np.float64) ** 2)
    levels = np.array([2.0 ** j * M for j in range(J)])
    report = {"J": J, "M": M, "delta": delta, "samples": samples}

    res = in_resonant(mus, M)
    if J == 1:
        ratio = np.sqrt(bracket[res, 0] / M)
        report["resonant_constant"] = float(ratio.max()) if ratio.size else 0.0
    else:
        rows = res.nonzero()[0]
        if rows.size:
            num = np.prod(np.sqrt(levels[:J - 2])) * np.prod(np.sqrt(bracket[rows]), axis=1)
            den = np.prod(np.abs(tilde[rows, :J - 1]), axis=1)
            ratio = (num / den) ** (1.0 / J)
            report["resonant_constant"] = float(ratio.max())
            chain = np.abs(mus[rows, :J - 1]) / np.abs(tilde[rows, :J - 1])
            report["resonant_chain_spread"] = [float(chain.min()), float(chain.max())]
        else:
            report["resonant_constant"] = 0.0
        report["resonant_samples"] = int(rows.size)

    nonres = in_nonresonant(mus, M)
    rows = nonres.nonzero()[0]
    report["nonresonant_samples"] = int(rows.size)
    if rows.size:
        den = np.prod(np.abs(tilde[rows]), axis=1)
        general = np.prod(levels ** delta) * np.prod(bracket[rows] ** (1.0 - delta), axis=1) / den
        half = np.prod(np.sqrt(levels)) * np.prod(np.sqrt(bracket[rows]), axis=1) / den
        report["nonresonant_constant"] = float((general ** (1.0 / J)).max())
        report["nonresonant_half_constant"] = float((half ** (1.0 / J)).max())
        above = np.abs(tilde[rows]) > levels
        report["levels_exceeded"] = bool(above.all())
    else:
        report["nonresonant_constant"] = 0.0
        report["nonresonant_half_constant"] = 0.0
        report["levels_exceeded"] = True
    return report


def resonance_scan(M: float, bounds: Sequence[int] = (100, 100, 40)) -> List[dict]:
    """Partition check for J = 1..len(bounds)."""
    return [resonance_partition_check(J, M, bound) for J, bound in enumerate(bounds, start=1)]


# Term families

class Family(str, Enum):
    N_R = "N_R"
    N_0 = "N_0"
    N_1 = "N_1"
    R = "R"
    N_NEXT = "N_next"


@dataclass(frozen=True)
class TermDescriptor:
    """One family of the generation-J expansion at resonance threshold M."""

    family: Family
    J: int
    M: float
    eta: float = ETA_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.J < 1:
            raise ConfigInvalid(f"generation must be at least 1, got {self.J}")
        if not self.M > 1:
            raise ConfigInvalid(f"resonance threshold M must exceed 1, got {self.M}")
        if not 0 < self.eta < 1:
            raise ConfigInvalid(f"eta must lie in (0, 1), got {self.eta}")
