"""Quintilinear multipliers m_i, the harmless frequency sets and the hat split.

All functions accept integer scalars or numpy arrays of equal shape. The
profile of m_i is real; the constant c_i carries the factor i of the
derivative, so m_i = c_i * profile_i with c_i purely imaginary.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from core.errors import ConstraintViolated, InvariantViolation

ETA_DEFAULT = 2.0 ** -10

# c_i / (i sigma)
_CONSTANTS = {1: -2, 2: 2, 3: 2, 4: 4, 5: 2, 6: -2, 7: 2}

OMEGA = "omega"
OMEGA_STAR = "omega_star"

# Slot pattern of Q_i: omega slots 1, 3, 5 and weight exponents k in slots 2, 4
# (the weight slot reads e^{ik sigma F[u]}).
SLOT_TABLE = {
    1: (OMEGA, 1, OMEGA, -1, OMEGA_STAR),
    2: (OMEGA_STAR, -3, OMEGA_STAR, -1, OMEGA_STAR),
    3: (OMEGA, 1, OMEGA, 1, OMEGA),
    4: (OMEGA, -1, OMEGA_STAR, 1, OMEGA),
    5: (OMEGA_STAR, -3, OMEGA_STAR, 1, OMEGA),
    6: (OMEGA, 1, OMEGA, 1, OMEGA),
    7: (OMEGA, -1, OMEGA_STAR, -1, OMEGA_STAR),
}

IntLike = Union[int, np.ndarray]


@dataclass(frozen=True)
class MultiplierId:
    i: int
    starred: bool = False

    def __post_init__(self):
        if self.i not in _CONSTANTS:
            raise ValueError(f"multiplier index must be in 1..7, got {self.i}")

    def star(self) -> "MultiplierId":
        return MultiplierId(self.i, not self.starred)

    @property
    def uses_A2(self) -> bool:
        return self.i >= 6

    def __str__(self) -> str:
        return f"m{self.i}{'*' if self.starred else ''}"


ALL_IDS = tuple(MultiplierId(i) for i in range(1, 8))
ALL_IDS_WITH_STARS = ALL_IDS + tuple(mid.star() for mid in ALL_IDS)


def multiplier_constant(i: int, sigma: int = 1) -> complex:
    return 1j * sigma * _CONSTANTS[i]


def slot_pattern(mid: MultiplierId) -> Tuple:
    """Slots of Q_i; the starred form swaps omega with omega* and k with -k."""
    pattern = SLOT_TABLE[mid.i]
    if not mid.starred:
        return pattern
    swapped = []
    for slot in pattern:
        if slot == OMEGA:
            swapped.append(OMEGA_STAR)
        elif slot == OMEGA_STAR:
            swapped.append(OMEGA)
        else:
            swapped.append(-slot)
    return tuple(swapped)


def phi(n: IntLike, n1: IntLike, n3: IntLike, n5: IntLike) -> IntLike:
    """Resonance function n|n| - n1|n1| - n3|n3| - n5|n5|."""
    return n * abs(n) - n1 * abs(n1) - n3 * abs(n3) - n5 * abs(n5)


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    safe = np.where(den == 0, 1.0, den)
    return np.where(den == 0, 0.0, num / safe)


def profile(i: int, n, n1, n2, n3, n4, n5) -> np.ndarray:
    """Real profile m_i / c_i, indicators included."""
    n, n1, n2, n3, n4, n5 = (np.asarray(x, dtype=np.int64) for x in (n, n1, n2, n3, n4, n5))
    n45 = n4 + n5
    if i in (1, 2):
        return np.where((n > 0) & (n45 < 0), n45, 0).astype(np.float64)
    if i in (3, 4, 5):
        active = (n < 0) & (n45 > 0)
        n123 = n1 + n2 + n3
        q = _ratio(n, n123)
        if i == 3:
            body = n45 * (2.0 + q)
        elif i == 4:
            body = n45 * (1.0 + q)
        else:
            body = n45 * q
        return np.where(active, body, 0.0)
    n23 = n2 + n3
    n2345 = n23 + n45
    if i == 6:
        active = (n23 > 0) & (n45 > 0)
    else:
        active = (n23 < 0) & (n45 < 0)
    return np.where(active, _ratio(n23 * n45, n2345), 0.0)


def multiplier_values(mid: MultiplierId, n, n1, n2, n3, n4, n5, sigma: int = 1) -> np.ndarray:
    """Vectorized m_i, or m_i* = conj(m_i(-n, -n1, ..., -n5))."""
    c = multiplier_constant(mid.i, sigma)
    if mid.starred:
        return np.conj(c) * profile(mid.i, -np.asarray(n), -np.asarray(n1), -np.asarray(n2),
                                    -np.asarray(n3), -np.asarray(n4), -np.asarray(n5))
    return c * profile(mid.i, n, n1, n2, n3, n4, n5)


def _check_constraint(n, n1, n2, n3, n4, n5):
    if n != n1 + n2 + n3 + n4 + n5:
        raise ConstraintViolated(f"n = {n} but n1 + ... + n5 = {n1 + n2 + n3 + n4 + n5}")


def multiplier(mid: MultiplierId, n: int, n1: int, n2: int, n3: int, n4: int, n5: int,
               sigma: int = 1) -> complex:
    """Value of m_i (or m_i*) at one frequency tuple.

    Raises:
        ConstraintViolated: If n != n1 + n2 + n3 + n4 + n5
    """
    _check_constraint(n, n1, n2, n3, n4, n5)
    sign = -1 if mid.starred else 1
    a, b, c, d, e, f = (sign * x for x in (n, n1, n2, n3, n4, n5))
    if mid.i in (3, 4, 5) and a < 0 < e + f and b + c + d == 0:
        raise InvariantViolation("n123 vanished under the sign indicators")
    if mid.i in (6, 7) and (c + d) * (e + f) > 0 and c + d + e + f == 0:
        raise InvariantViolation("n2345 vanished under the sign indicators")
    return complex(multiplier_values(mid, n, n1, n2, n3, n4, n5, sigma))


# Harmless sets

def in_A1(n1, n2, n3, n4, n5, eta: float = ETA_DEFAULT):
    """Union of the four branches of the first harmless set."""
    n1, n2, n3, n4, n5 = (np.asarray(x, dtype=np.int64) for x in (n1, n2, n3, n4, n5))
    a1, a3, a5 = np.abs(n1), np.abs(n3), np.abs(n5)
    top = np.maximum(np.abs(n2), np.abs(n4))
    n_out = np.abs(n1 + n2 + n3 + n4 + n5)
    eta2 = eta * eta
    n24 = np.abs(n2 + n4)
    degenerate = (n1 + n5) * (n3 + n5) == 0
    heavy = top >= eta2 * np.minimum(a5, n_out)
    light = top < eta2 * a5
    third = light & (a5 < eta * np.minimum(a1, a3)) & (n24 >= eta * np.abs(n1 + n3))
    fourth = (light & (a3 < eta * np.minimum(a1, a5)) & (n24 >= eta * np.abs(n1 + n5))
              & (a5 <= 2 * a1))
    result = degenerate | heavy | third | fourth
    return bool(result) if result.ndim == 0 else result


def in_A2(n1, n2, n3, n4, n5, eta: float = ETA_DEFAULT):
    n1, n2, n3, n4, n5 = (np.asarray(x, dtype=np.int64) for x in (n1, n2, n3, n4, n5))
    top = np.maximum(np.abs(n2), np.abs(n4))
    result = ((n1 + n3) * (n1 + n5) == 0) | (top >= eta * np.minimum(np.abs(n3), np.abs(n5)))
    return bool(result) if result.ndim == 0 else result


def hat_mask(mid: MultiplierId, n, n1, n2, n3, n4, n5, eta: float = ETA_DEFAULT) -> np.ndarray:
    """Indicator of the hat part: outside the harmless set and |Phi| > |n2|^2 v |n4|^2.

    Both conditions are invariant under negating the tuple, so the starred
    multipliers share the mask.
    """
    harmless = (in_A2 if mid.uses_A2 else in_A1)(n1, n2, n3, n4, n5, eta)
    top = np.maximum(np.abs(np.asarray(n2)), np.abs(np.asarray(n4)))
    phase = np.abs(phi(np.asarray(n), np.asarray(n1), np.asarray(n3), np.asarray(n5)))
    return ~np.asarray(harmless) & (phase > top * top)


def hat_values(mid: MultiplierId, n, n1, n2, n3, n4, n5, eta: float = ETA_DEFAULT,
               sigma: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized (hat, hathat) with hat + hathat = m exactly."""
    m = multiplier_values(mid, n, n1, n2, n3, n4, n5, sigma)
    keep = hat_mask(mid, n, n1, n2, n3, n4, n5, eta)
    return np.where(keep, m, 0), np.where(keep, 0, m)


def hat_split(mid: MultiplierId, n: int, n1: int, n2: int, n3: int, n4: int, n5: int,
              eta: float = ETA_DEFAULT, sigma: int = 1) -> Tuple[complex, complex]:
    _check_constraint(n, n1, n2, n3, n4, n5)
    hat, hathat = hat_values(mid, n, n1, n2, n3, n4, n5, eta, sigma)
    return complex(hat), complex(hathat)
