"""Exhaustive scans of resonance identities and of an empty frequency region."""

import logging
from typing import Optional

import numpy as np

from core.multipliers import ETA_DEFAULT, in_A1, phi
from core.parallel import ordered_map

logger = logging.getLogger(__name__)


def phi5_scan(bound: int = 30) -> dict:
    """Check the reduced forms of Phi for n > 0, n1 > 0, n5 < 0 over |n_l| <= bound.

    With p = n1 + n3 + n5,
        n3 >= 0:  Phi = 2 n15 n35 + n^2 - p^2
        n3 <  0:  Phi = -2 n13 n15 + n^2 + p^2.
    """
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    n, n1, n3, n5 = np.meshgrid(axis[axis > 0], axis[axis > 0], axis, axis[axis < 0], indexing="ij")
    p = n1 + n3 + n5
    exact = phi(n, n1, n3, n5)
    reduced = np.where(n3 >= 0, 2 * (n1 + n5) * (n3 + n5) + n * n - p * p,
                       -2 * (n1 + n3) * (n1 + n5) + n * n + p * p)
    mismatches = int(np.count_nonzero(exact != reduced))
    return {"identity": "phi5", "bound": bound, "checked": int(exact.size), "mismatches": mismatches,
            "ok": mismatches == 0}


def phi6_scan(bound: int = 30) -> dict:
    """Check the reduced forms of Phi for n3, n5 > 0 over |n_l| <= bound.

    With p = n1 + n3 + n5,
        n1 >= 0:  6 Phi = -3 (2 n1 + n3 - p)^2 - (3 n3 - p)^2 + 6 n|n| - 2 p^2
        n1 <  0:  Phi = 2 n13 n15 + n|n| - p^2.
    """
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    n, n1, n3, n5 = np.meshgrid(axis, axis, axis[axis > 0], axis[axis > 0], indexing="ij")
    p = n1 + n3 + n5
    exact = phi(n, n1, n3, n5)
    six_phi = -3 * (2 * n1 + n3 - p) ** 2 - (3 * n3 - p) ** 2 + 6 * n * np.abs(n) - 2 * p * p
    hyperbolic = 2 * (n1 + n3) * (n1 + n5) + n * np.abs(n) - p * p
    mismatches = int(np.count_nonzero(np.where(n1 >= 0, 6 * exact != six_phi, exact != hyperbolic)))
    return {"identity": "phi6", "bound": bound, "checked": int(exact.size), "mismatches": mismatches,
            "ok": mismatches == 0}


def _small_n_slice(n1: int, bound: int, eta: float) -> dict:
    """Survivors of the small-output, small-phase region for one value of n1."""
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    n3, n5 = np.meshgrid(axis, axis, indexing="ij")
    n3, n5 = n3.ravel(), n5.ravel()
    eta2 = eta * eta
    # |n2| v |n4| < eta^2 (|n5| ^ |n|) <= eta^2 bound
    reach = int(np.ceil(eta2 * bound)) - 1
    reach = max(reach, 0)
    survivors, scanned = 0, 0
    witness = None
    light = np.arange(-reach, reach + 1, dtype=np.int64)
    for n2 in light:
        for n4 in light:
            n = n1 + n2 + n3 + n4 + n5
            n_max = np.maximum.reduce([np.full_like(n3, abs(n1)), np.abs(n3), np.abs(n5),
                                       np.full_like(n3, abs(int(n2))), np.full_like(n3, abs(int(n4)))])
            # n > 0 together with |n| < eta^2 n_max
            candidate = (n > 0) & (n < eta2 * n_max) & (n4 + n5 < 0)
            candidate &= abs(n1) >= np.abs(n3)
            candidate &= max(abs(int(n2)), abs(int(n4))) < eta2 * np.minimum(np.abs(n5), np.abs(n))
            candidate &= (n1 + n5) * (n3 + n5) != 0
            candidate &= (np.abs(n3) <= np.abs(n5) / eta) & (np.abs(n3) >= eta * np.minimum(abs(n1), np.abs(n5)))
            if not np.any(candidate):
                continue
            idx = candidate.nonzero()[0]
            scanned += idx.size
            big_phase = np.abs(phi(n[idx], n1, n3[idx], n5[idx])) >= eta ** 3 * n_max[idx].astype(np.float64) ** 2
            harmless = in_A1(np.full(idx.size, n1), np.full(idx.size, n2), n3[idx], np.full(idx.size, n4),
                             n5[idx], eta)
            hit = ~big_phase & ~np.asarray(harmless)
            if np.any(hit):
                k = int(idx[hit.nonzero()[0][0]])
                survivors += int(np.count_nonzero(hit))
                witness = witness or [int(n1), int(n2), int(n3[k]), int(n4), int(n5[k])]
    return {"survivors": survivors, "scanned": scanned, "witness": witness}


def small_output_region_scan(bound: int = 200, eta: float = ETA_DEFAULT,
                             threads: Optional[int] = None) -> dict:
    """Count tuples with every |n_l| <= bound in the region of the fourth small-output case.

    The joint hypotheses are
        standing:  |n2| v |n4| < eta^2 (|n5| ^ |n|) and n15 n35 != 0,
        case:      n > 0 > n45, |n1| >= |n3|, |n| < eta^2 n_max, |Phi| < eta^3 n_max^2,
                   eta^{-1}|n5| >= |n3| >= eta (|n1| ^ |n5|),
    and the tuple lies outside the first harmless set. For small eta the region
    is empty, so the expected survivor count is zero. Tuples are pruned by the
    necessary conditions before the harmless-set and phase tests; candidates
    counts the tuples reaching those tests. At eta = 2^-10 the standing
    hypothesis with |n| < eta^2 n_max needs n_max > 2^20, so bounds below that
    have no candidates at all.
    """
    axis = list(range(-bound, bound + 1))
    slices = ordered_map(lambda n1: _small_n_slice(n1, bound, eta), axis, threads)
    survivors = sum(s["survivors"] for s in slices)
    witness = next((s["witness"] for s in slices if s["witness"]), None)
    report = {
        "region": "small_output",
        "bound": bound,
        "eta": eta,
        "candidates": sum(s["scanned"] for s in slices),
        "survivors": survivors,
        "witness": witness,
        "empty": survivors == 0,
    }
    logger.info("small-output region scan: %d candidates, %d survivors", report["candidates"], survivors)
    return report
