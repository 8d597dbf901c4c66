"""Exact lattice-point counts on translated ellipses and hyperbolas.

Points are counted in the l1 ball |n1 - b1| + |n2 - b2| <= R around a ball
center b (the origin unless stated). The conics are

    ellipse:    3 (n1 - c1)^2 + (n2 - c2)^2 = mu
    hyperbola:  (n1 - c1) (n2 - c2) = mu != 0
"""

import logging
from dataclasses import dataclass, field
from math import isqrt
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import divisors

from core.errors import ConfigInvalid, ZeroMu
from core.multipliers import phi
from core.parallel import ordered_map
from utils.helpers import fit_slope

logger = logging.getLogger(__name__)

CURVES = ("ellipse", "hyperbola")
R_MAX_DEFAULT = 2 ** 12


@dataclass
class CountReport:
    curve: str
    R_values: List[int]
    max_counts: List[int]
    witnesses: List[dict] = field(default_factory=list)
    slope: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "curve": self.curve,
            "R_values": self.R_values,
            "max_counts": self.max_counts,
            "witnesses": self.witnesses,
            "slope": self.slope,
        }


def _check_R(R: int):
    if R <= 1:
        raise ConfigInvalid(f"counting radius must exceed 1, got {R}")


def _ball_rows(R: int, ball: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Every lattice point of the l1 ball as two flat arrays."""
    n1 = np.arange(-R, R + 1, dtype=np.int64)
    widths = R - np.abs(n1)
    rows = np.repeat(n1, 2 * widths + 1)
    starts = np.repeat(-widths, 2 * widths + 1)
    offsets = np.arange(rows.size) - np.repeat(np.cumsum(2 * widths + 1) - (2 * widths + 1), 2 * widths + 1)
    return rows + ball[0], starts + offsets + ball[1]


def count_ellipse(c1: int, c2: int, mu: int, R: int, ball: Tuple[int, int] = (0, 0)) -> int:
    """Number of points with 3 (n1 - c1)^2 + (n2 - c2)^2 = mu in the ball."""
    _check_R(R)
    if mu < 0:
        return 0
    total = 0
    for n1 in range(ball[0] - R, ball[0] + R + 1):
        rest = mu - 3 * (n1 - c1) ** 2
        if rest < 0:
            continue
        root = isqrt(rest)
        if root * root != rest:
            continue
        width = R - abs(n1 - ball[0])
        for n2 in {c2 + root, c2 - root}:
            if abs(n2 - ball[1]) <= width:
                total += 1
    return total


def count_hyperbola(c1: int, c2: int, mu: int, R: int, ball: Tuple[int, int] = (0, 0)) -> int:
    """Number of points with (n1 - c1)(n2 - c2) = mu in the ball.

    Raises:
        ZeroMu: If mu == 0
    """
    _check_R(R)
    if mu == 0:
        raise ZeroMu("the hyperbola count needs mu != 0")
    total = 0
    for n1 in range(ball[0] - R, ball[0] + R + 1):
        d = n1 - c1
        if d == 0 or mu % d != 0:
            continue
        n2 = c2 + mu // d
        if abs(n1 - ball[0]) + abs(n2 - ball[1]) <= R:
            total += 1
    return total


def conic_values(curve: str, c1: int, c2: int, R: int) -> np.ndarray:
    """Value of the conic's quadratic form at every point of the ball."""
    n1, n2 = _ball_rows(R, (0, 0))
    x, y = n1 - c1, n2 - c2
    if curve == "ellipse":
        return 3 * x * x + y * y
    if curve == "hyperbola":
        return x * y
    raise ConfigInvalid(f"unknown curve {curve!r}, expected one of {CURVES}")


def max_count(curve: str, c1: int, c2: int, R: int) -> Tuple[int, int]:
    """(largest count over all mu, a mu attaining it) for one center."""
    values = conic_values(curve, c1, c2, R)
    if curve == "hyperbola":
        values = values[values != 0]
    if values.size == 0:
        return 0, 0
    levels, counts = np.unique(values, return_counts=True)
    best = int(np.argmax(counts))
    return int(counts[best]), int(levels[best])


def _centers(center_range: int, samples: int, seed: int) -> List[Tuple[int, int]]:
    rng = np.random.default_rng(seed)
    picks = rng.integers(-center_range, center_range + 1, size=(samples, 2))
    return [(0, 0)] + [(int(a), int(b)) for a, b in picks]


def counting_scan(curve: str, R_max: int = R_MAX_DEFAULT, center_range: int = 8,
                  centers: int = 4, seed: int = 0, threads: Optional[int] = None) -> CountReport:
    """Maximal count over sampled centers and all mu, for R = 2, 4, ..., R_max."""
    if curve not in CURVES:
        raise ConfigInvalid(f"unknown curve {curve!r}, expected one of {CURVES}")
    _check_R(R_max)
    R_values = [2 ** k for k in range(1, int(np.log2(R_max)) + 1)]
    report = CountReport(curve, R_values, [])
    center_list = _centers(center_range, centers, seed)
    for R in R_values:
        results = ordered_map(lambda c: max_count(curve, c[0], c[1], R), center_list, threads)
        best = max(range(len(center_list)), key=lambda k: results[k][0])
        count, mu = results[best]
        report.max_counts.append(count)
        report.witnesses.append({"R": R, "center": list(center_list[best]), "mu": mu, "count": count})
        logger.debug("%s R=%d max count %d at mu=%d", curve, R, count, mu)
    report.slope = fit_slope(R_values, report.max_counts)
    return report


def large_mu_probes(R: int, probes: int = 1000, seed: int = 0) -> dict:
    """Hyperbola counts at |mu| > R^6 through a guaranteed point of the ball.

    Each probe picks a point of the ball and a center far away along n1, so
    the point lies on the hyperbola and |mu| exceeds R^6.
    """
    _check_R(R)
    rng = np.random.default_rng(seed)
    worst, violations, checked = 0, 0, 0
    witness = None
    for _ in range(probes):
        a = int(rng.integers(-R, R + 1))
        b = int(rng.integers(-(R - abs(a)), R - abs(a) + 1))
        d2 = int(rng.integers(1, R + 1)) * (1 if rng.random() < 0.5 else -1)
        d1 = (R ** 6 // abs(d2) + 1 + int(rng.integers(0, R ** 3))) * (1 if rng.random() < 0.5 else -1)
        c1, c2 = a - d1, b - d2
        mu = d1 * d2
        count = count_hyperbola(c1, c2, mu, R)
        checked += 1
        if count > worst:
            worst, witness = count, {"center": [c1, c2], "mu": mu, "count": count}
        violations += count > 2
    return {"R": R, "probes": checked, "max_count": worst, "violations": violations, "witness": witness}


def translation_check(curve: str, c1: int, c2: int, mu: int, R: int, shift: Tuple[int, int]) -> bool:
    """Counts agree after moving the conic center and the ball by the same shift."""
    count = count_ellipse if curve == "ellipse" else count_hyperbola
    return count(c1, c2, mu, R) == count(c1 + shift[0], c2 + shift[1], mu, R, ball=shift)


# Choices of (n1, n3, n5) with fixed n, n2, n4 and resonance value

FACTS = ("fact1", "fact2")


def _fact_domain(which: str, n1, n3, n5) -> np.ndarray:
    if which == "fact1":
        return (n1 > 0) & (n5 < 0)
    if which == "fact2":
        return (n3 > 0) & (n5 > 0)
    raise ConfigInvalid(f"unknown fact {which!r}, expected one of {FACTS}")


def _restricted(intervals: Dict[str, int]) -> Tuple[str, str]:
    names = sorted(intervals)
    if len(names) != 2 or not set(names) <= {"n1", "n3", "n5"}:
        raise ConfigInvalid(f"exactly two of n1, n3, n5 must be restricted, got {names}")
    return names[0], names[1]


def fact_check(which: str, n: int, n2: int, n4: int, phi_target: int,
               intervals: Dict[str, int], R: int) -> int:
    """Exact number of (n1, n3, n5) with n = n1 + ... + n5 and Phi = phi_target.

    intervals maps two of "n1", "n3", "n5" to the left end of an interval of
    length R; the third variable is fixed by the frequency constraint. The
    sign domain is n1 > 0 > n5 for fact1 and n3, n5 > 0 for fact2.
    """
    _check_R(R)
    first, second = _restricted(intervals)
    p = n - n2 - n4
    a = np.arange(intervals[first], intervals[first] + R + 1, dtype=np.int64)
    b = np.arange(intervals[second], intervals[second] + R + 1, dtype=np.int64)
    A, B = np.meshgrid(a, b, indexing="ij")
    values = {first: A.ravel(), second: B.ravel()}
    third = ({"n1", "n3", "n5"} - {first, second}).pop()
    values[third] = p - values[first] - values[second]
    n1, n3, n5 = values["n1"], values["n3"], values["n5"]
    hit = _fact_domain(which, n1, n3, n5) & (phi(n, n1, n3, n5) == phi_target)
    return int(np.count_nonzero(hit))


def _in_window(point: Dict[str, int], intervals: Dict[str, int], R: int) -> bool:
    return all(start <= point[name] <= start + R for name, start in intervals.items())


def _hyperbola_points(product: int, x0: int, y0: int) -> List[Tuple[int, int]]:
    """Integer points with (x - x0)(y - y0) = product != 0."""
    points = []
    for d in divisors(abs(product)):
        for sign in (1, -1):
            dx = sign * d
            points.append((x0 + dx, y0 + product // dx))
    return points


def _ellipse_points(level: int) -> List[Tuple[int, int]]:
    """Integer points with 3 X^2 + Y^2 = level."""
    points = []
    if level < 0:
        return points
    for X in range(-isqrt(level // 3), isqrt(level // 3) + 1):
        rest = level - 3 * X * X
        Y = isqrt(rest)
        if Y * Y == rest:
            points.extend({(X, Y), (X, -Y)})
    return points


def fact_oracle(which: str, n: int, n2: int, n4: int, phi_target: int,
                intervals: Dict[str, int], R: int) -> Optional[int]:
    """The same count through the conic reductions of the resonance function.

    For fact1, with p = n1 + n3 + n5,
        n3 >= 0:  Phi = n|n| + 2 n15 n35 - p^2
        n3 <  0:  Phi = n|n| - 2 n13 n15 + p^2
    and for fact2 (n3, n5 > 0)
        n1 >= 0:  Phi = n|n| - p^2/3 - (3 (2n1 + n3 - p)^2 + (3n3 - p)^2) / 6
        n1 <  0:  Phi = n|n| + 2 n13 n15 - p^2.
    Points on the reduced conics are enumerated from divisors and mapped
    back. Returns None when a hyperbola branch degenerates (product 0).
    """
    _check_R(R)
    _restricted(intervals)
    p = n - n2 - n4
    base = n * abs(n)
    found = set()

    def keep(n1: int, n3: int, n5: int):
        point = {"n1": n1, "n3": n3, "n5": n5}
        if n1 + n3 + n5 == p and _in_window(point, intervals, R) and bool(_fact_domain(which, n1, n3, n5)):
            if phi(n, n1, n3, n5) == phi_target:
                found.add((n1, n3, n5))

    if which == "fact1":
        # n3 >= 0: (p - n3)(p - n1) = (Phi - n|n| + p^2) / 2
        twice = phi_target - base + p * p
        if twice % 2 == 0:
            if twice == 0:
                return None
            for x, y in _hyperbola_points(twice // 2, 0, 0):
                n3, n1 = p - x, p - y
                if n3 >= 0:
                    keep(n1, n3, p - n1 - n3)
        # n3 < 0: (n1 + n3)(p - n3) = (n|n| + p^2 - Phi) / 2
        twice = base + p * p - phi_target
        if twice % 2 == 0:
            if twice == 0:
                return None
            for x, y in _hyperbola_points(twice // 2, 0, 0):
                n3 = p - y
                n1 = x - n3
                if n3 < 0:
                    keep(n1, n3, p - n1 - n3)
    elif which == "fact2":
        # n1 >= 0: 3 X^2 + Y^2 = 6 n|n| - 2 p^2 - 6 Phi, X = 2 n1 + n3 - p, Y = 3 n3 - p
        for X, Y in _ellipse_points(6 * base - 2 * p * p - 6 * phi_target):
            if (Y + p) % 3 == 0:
                n3 = (Y + p) // 3
                if (X + p - n3) % 2 == 0:
                    n1 = (X + p - n3) // 2
                    if n1 >= 0:
                        keep(n1, n3, p - n1 - n3)
        # n1 < 0: (p - n5)(p - n3) = (Phi - n|n| + p^2) / 2
        twice = phi_target - base + p * p
        if twice % 2 == 0:
            if twice == 0:
                return None
            for x, y in _hyperbola_points(twice // 2, 0, 0):
                n5, n3 = p - x, p - y
                n1 = p - n3 - n5
                if n1 < 0:
                    keep(n1, n3, n5)
    else:
        raise ConfigInvalid(f"unknown fact {which!r}, expected one of {FACTS}")
    return len(found)


def fact_scan(which: str, R_values: Sequence[int], configurations: int = 20, seed: int = 0,
              threads: Optional[int] = None) -> dict:
    """Maximal fact count over random configurations per R, with a growth slope."""
    rng = np.random.default_rng(seed)
    maxima, agreements, compared = [], 0, 0
    for R in R_values:
        jobs = []
        for _ in range(configurations):
            n = int(rng.integers(1, 4 * R))
            n2, n4 = (int(x) for x in rng.integers(-2, 3, size=2))
            if which == "fact1":
                intervals = {"n1": int(rng.integers(1, 2 * R)), "n5": int(rng.integers(-3 * R, -R))}
            else:
                intervals = {"n3": int(rng.integers(1, 2 * R)), "n5": int(rng.integers(1, 2 * R))}
            jobs.append((n, n2, n4, intervals))

        def run(job):
            n, n2, n4, intervals = job
            # most frequent resonance value inside the window
            first, second = _restricted(intervals)
            a = np.arange(intervals[first], intervals[first] + R + 1)
            b = np.arange(intervals[second], intervals[second] + R + 1)
            A, B = np.meshgrid(a, b, indexing="ij")
            vals = {first: A.ravel(), second: B.ravel()}
            third = ({"n1", "n3", "n5"} - {first, second}).pop()
            vals[third] = n - n2 - n4 - vals[first] - vals[second]
            inside = _fact_domain(which, vals["n1"], vals["n3"], vals["n5"])
            if not np.any(inside):
                return 0, None
            phis = phi(n, vals["n1"], vals["n3"], vals["n5"])[inside]
            levels, counts = np.unique(phis, return_counts=True)
            target = int(levels[np.argmax(counts)])
            count = fact_check(which, n, n2, n4, target, intervals, R)
            return count, fact_oracle(which, n, n2, n4, target, intervals, R)

        results = ordered_map(run, jobs, threads)
        maxima.append(max(count for count, _ in results))
        for count, oracle in results:
            if oracle is not None:
                compared += 1
                agreements += count == oracle
    return {
        "fact": which,
        "R_values": list(R_values),
        "max_counts": maxima,
        "slope": fit_slope(R_values, maxima),
        "oracle_compared": compared,
        "oracle_agreements": agreements,
    }
