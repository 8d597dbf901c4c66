"""Empirical constants of the quintilinear estimates.

Every estimate bounds the l^2 norm of a quintilinear sum with a non-negative
kernel by a product of weighted norms of its five non-negative inputs. The
campaign records the worst LHS/RHS ratio over random inputs, the input that
attained it, and the growth of the worst ratio with the lattice size.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.datum import colored_noise
from core.errors import ConfigInvalid, InvalidRegularity
from core.multipliers import ALL_IDS, ALL_IDS_WITH_STARS, ETA_DEFAULT, MultiplierId, in_A1, in_A2
from core.quintic import QuinticBlock, SampledLattice, eval_Q_variants, lattice_for
from core.spectral import SpectralField, japanese, product_estimate_ratio, sobolev_norm
from utils.helpers import fit_slope

logger = logging.getLogger(__name__)

ESTIMATE_IDS = (
    "matome-0", "matome-1", "matome-2", "matome-3",
    "5linear-0", "5linear-1", "5linear-2",
    "6linear-0", "6linear-1", "6linear-2",
    "N1",
)
ENSEMBLES = ("uniform", "colored", "spikes")
MIXED = "mixed"
EXACT_MAX_N = 16
MC_SAMPLES = 4000
SPIKE_BACKGROUND = 1e-2

# estimates whose W factor carries one extra derivative on the right
_DERIVATIVE_IDS = ("matome-0", "5linear-0", "6linear-0")
# left-hand side measured in l^2_{s-1}
_LOWERED_IDS = ("matome-3", "N1")


def check_id(estimate_id: str) -> str:
    if estimate_id not in ESTIMATE_IDS:
        raise ConfigInvalid(f"unknown estimate {estimate_id!r}, expected one of {ESTIMATE_IDS}")
    return estimate_id


def check_regularity(s: float, delta: Optional[float] = None) -> float:
    """Validate s > 1/2 and return delta, defaulting to (s - 1/2) / 4.

    Raises:
        InvalidRegularity: If s <= 1/2
        ConfigInvalid: If delta lies outside (0, 1/2]
    """
    if not s > 0.5:
        raise InvalidRegularity(f"the quintilinear estimates need s > 1/2, got s = {s}")
    if delta is None:
        delta = (s - 0.5) / 4.0
    if not 0.0 < delta <= 0.5:
        raise ConfigInvalid(f"delta must lie in (0, 1/2], got {delta}")
    return delta


def multiplier_cycle(estimate_id: str) -> Sequence[Optional[MultiplierId]]:
    """Multipliers a campaign cycles through, one per trial."""
    if estimate_id == "matome-0":
        return ALL_IDS
    if estimate_id.startswith("matome") or estimate_id == "N1":
        return ALL_IDS_WITH_STARS
    return (None,)


def _bracket_power(values: np.ndarray, power: float) -> np.ndarray:
    """<x>^{-power}."""
    return (1.0 + values.astype(np.float64) ** 2) ** (-power / 2.0)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = num.astype(np.float64)
    den = den.astype(np.float64)
    return np.where(den == 0, 0.0, num / np.where(den == 0, 1.0, den))


def _kernel(estimate_id: str, block: QuinticBlock, mid: Optional[MultiplierId], delta: float,
            eta: float, sigma: int) -> np.ndarray:
    n, nv = block.n, block.nv
    family, _, level = estimate_id.partition("-")
    if family in ("matome", "N1"):
        hat, hathat = block.hat(mid, eta, sigma)
        if estimate_id == "matome-0":
            return np.abs(hathat)
        kernel = np.abs(hat)
        power = {"1": 0.5, "2": 1.0, "3": 1.0 - delta}.get(level, 0.0)
        return kernel * _bracket_power(block.phi, power)

    if family == "5linear":
        n45 = nv[3] + nv[4]
        active = (n > 0) & (n45 < 0)
        harmless = np.asarray(in_A1(*nv, eta))
        kernel = np.abs(n45).astype(np.float64)
    else:
        n23, n45 = nv[1] + nv[2], nv[3] + nv[4]
        active = (n23 > 0) & (n45 > 0)
        harmless = np.asarray(in_A2(*nv, eta))
        kernel = _ratio(n23 * n45, n23 + n45)
    region = harmless if level == "0" else ~harmless
    kernel = np.where(active & region, kernel, 0.0)
    if level == "1":
        kernel = kernel * _bracket_power(block.phi, 0.5)
    elif level == "2":
        n_max = np.abs(nv).max(axis=0)
        kernel = kernel * _bracket_power(block.phi, 1.0 - delta) * _ratio(japanese(n_max), japanese(np.array(n)))
    return kernel


def lhs_norms(estimate_id: str, inputs_list: Sequence[Sequence[SpectralField]], s: float, delta: float,
              mid: Optional[MultiplierId] = None, eta: float = ETA_DEFAULT, sigma: int = 1,
              lattice=None, threads: Optional[int] = 1) -> List[float]:
    """Left-hand norms for several input tuples sharing one kernel evaluation."""
    check_id(estimate_id)
    if mid is None:
        mid = multiplier_cycle(estimate_id)[0]
    n_max = inputs_list[0][0].n_max
    lattice = lattice or lattice_for(n_max)

    def weight(block: QuinticBlock) -> np.ndarray:
        return _kernel(estimate_id, block, mid, delta, eta, sigma)

    variants = [dict(enumerate(inputs)) for inputs in inputs_list]
    sums = eval_Q_variants(lattice, weight, inputs_list[0], variants, threads)
    shift = -1.0 if estimate_id in _LOWERED_IDS else 0.0
    return [sobolev_norm(SpectralField(lattice.scale * total.coeffs.real), s + shift) for total in sums]


def rhs_value(estimate_id: str, inputs: Sequence[SpectralField], s: float) -> float:
    """Right-hand side of an estimate: the stated product of weighted norms."""
    check_id(estimate_id)
    w1, W2, w3, W4, w5 = inputs

    def norm(f: SpectralField, r: float) -> float:
        return sobolev_norm(f, r)

    omegas = norm(w1, s) * norm(w3, s) * norm(w5, s)
    if estimate_id in _DERIVATIVE_IDS:
        return omegas * (norm(W2, s + 1) * norm(W4, s) + norm(W2, s) * norm(W4, s + 1))
    if estimate_id == "matome-2":
        return omegas * min(norm(W2, s - 1) * norm(W4, s), norm(W2, s) * norm(W4, s - 1))
    if estimate_id == "matome-3":
        lowered = min(norm(w1, s - 1) * norm(w3, s) * norm(w5, s),
                      norm(w1, s) * norm(w3, s - 1) * norm(w5, s),
                      norm(w1, s) * norm(w3, s) * norm(w5, s - 1))
        return lowered * norm(W2, s) * norm(W4, s)
    return omegas * norm(W2, s) * norm(W4, s)


def _safe_ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0 or rhs == 0.0:
        return 0.0
    return lhs / rhs


def estimate_ratio(estimate_id: str, inputs: Sequence[SpectralField], s: float, delta: Optional[float] = None,
                   mid: Optional[MultiplierId] = None, eta: float = ETA_DEFAULT, sigma: int = 1,
                   lattice=None) -> float:
    """LHS / RHS of one estimate at one input tuple; 0 when either side vanishes."""
    delta = check_regularity(s, delta)
    lhs = lhs_norms(estimate_id, [inputs], s, delta, mid, eta, sigma, lattice)[0]
    return _safe_ratio(lhs, rhs_value(estimate_id, inputs, s))


# Input ensembles

def draw_inputs(ensemble: str, n_max: int, s: float, rng: np.random.Generator) -> List[SpectralField]:
    """Five non-negative inputs from one ensemble.

    uniform: i.i.d. uniform[0, 1] coefficients
    colored: <n>^{-s-1/2} times uniform[0, 1]
    spikes:  one coefficient per input at a tuple with n1 > 0 > n5 and light
             n2, n4, over a small uniform background
    """
    size = 2 * n_max + 1
    modes = np.arange(-n_max, n_max + 1)
    if ensemble == "uniform":
        return [SpectralField(rng.uniform(0.0, 1.0, size)) for _ in range(5)]
    if ensemble == "colored":
        return [SpectralField(japanese(modes) ** (-s - 0.5) * rng.uniform(0.0, 1.0, size)) for _ in range(5)]
    if ensemble == "spikes":
        half = max(1, n_max // 2)
        tuple_ = [
            int(rng.integers(half, n_max + 1)),
            int(rng.integers(-1, 2)),
            int(rng.integers(-n_max, n_max + 1)),
            int(rng.integers(-1, 2)),
            -int(rng.integers(1, n_max + 1)),
        ]
        fields = []
        for freq in tuple_:
            coeffs = SPIKE_BACKGROUND * rng.uniform(0.0, 1.0, size)
            coeffs[freq + n_max] = 1.0
            fields.append(SpectralField(coeffs))
        return fields
    raise ConfigInvalid(f"unknown ensemble {ensemble!r}, expected one of {ENSEMBLES} or {MIXED!r}")


def _ensemble_for(ensemble: str, trial: int) -> str:
    return ENSEMBLES[trial % len(ENSEMBLES)] if ensemble == MIXED else ensemble


# Campaigns

@dataclass
class EstimateReport:
    estimate_id: str
    s: float
    delta: float
    lattice_sizes: List[int]
    trials: int
    worst_ratio: List[float] = field(default_factory=list)
    mean_ratio: List[float] = field(default_factory=list)
    modes: List[str] = field(default_factory=list)
    witnesses: List[dict] = field(default_factory=list)
    slope: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "estimate_id": self.estimate_id,
            "s": self.s,
            "delta": self.delta,
            "lattice_sizes": self.lattice_sizes,
            "trials": self.trials,
            "worst_ratio": self.worst_ratio,
            "mean_ratio": self.mean_ratio,
            "modes": self.modes,
            "witnesses": self.witnesses,
            "slope": self.slope,
        }


def _lattice(n_max: int, exact_max_n: int, samples: int, seed: int):
    if n_max <= exact_max_n:
        return lattice_for(n_max), "exact"
    return SampledLattice(n_max, samples, seed), "mc"


def verify_estimate(estimate_id: str, s: float, delta: Optional[float] = None, N: int = 16,
                    trials: int = 200, seed: int = 0, ensemble: str = MIXED, eta: float = ETA_DEFAULT,
                    sigma: int = 1, exact_max_n: int = EXACT_MAX_N, mc_samples: int = MC_SAMPLES,
                    threads: Optional[int] = None) -> dict:
    """Worst ratio of one estimate over random trials at lattice size N.

    Lattices up to exact_max_n are summed exactly; larger ones by stratified
    sampling of (n1, ..., n4) with the same samples for every trial.

    Raises:
        InvalidRegularity: If s <= 1/2
    """
    check_id(estimate_id)
    delta = check_regularity(s, delta)
    rng = np.random.default_rng([seed, N])
    lattice_seed = seed + 7919 * N
    lattice, mode = _lattice(N, exact_max_n, mc_samples, lattice_seed)
    cycle = multiplier_cycle(estimate_id)

    drawn = []
    for trial in range(trials):
        name = _ensemble_for(ensemble, trial)
        drawn.append((trial, name, cycle[trial % len(cycle)], draw_inputs(name, N, s, rng)))

    ratios = np.zeros(trials)
    for mid in cycle:
        group = [entry for entry in drawn if entry[2] == mid]
        if not group:
            continue
        lhs = lhs_norms(estimate_id, [entry[3] for entry in group], s, delta, mid, eta, sigma, lattice, threads)
        for (trial, _, _, inputs), value in zip(group, lhs):
            ratios[trial] = _safe_ratio(value, rhs_value(estimate_id, inputs, s))

    worst = int(np.argmax(ratios)) if trials else 0
    witness = None
    if trials:
        trial, name, mid, inputs = drawn[worst]
        witness = {
            "estimate_id": estimate_id, "s": s, "delta": delta, "eta": eta, "sigma": sigma,
            "n_max": N, "mode": mode, "samples": mc_samples if mode == "mc" else None,
            "lattice_seed": lattice_seed if mode == "mc" else None,
            "trial": trial, "ensemble": name, "multiplier": None if mid is None else str(mid),
            "inputs": [f.coeffs.real.tolist() for f in inputs],
            "ratio": float(ratios[worst]),
        }
    logger.info("%s N=%d (%s): worst ratio %.4g over %d trials", estimate_id, N, mode,
                float(ratios.max(initial=0.0)), trials)
    return {
        "estimate_id": estimate_id,
        "N": N,
        "trials": trials,
        "mode": mode,
        "worst_ratio": float(ratios.max(initial=0.0)),
        "mean_ratio": float(ratios.mean()) if trials else 0.0,
        "witness": witness,
    }


def parse_multiplier(text: Optional[str]) -> Optional[MultiplierId]:
    """Inverse of str(MultiplierId): "m3" or "m3*"."""
    if text is None:
        return None
    starred = text.endswith("*")
    return MultiplierId(int(text.strip("m*")), starred)


def replay_witness(witness: Dict) -> float:
    """Re-evaluate the ratio recorded in a witness."""
    n_max = witness["n_max"]
    if witness["mode"] == "mc":
        lattice = SampledLattice(n_max, witness["samples"], witness["lattice_seed"])
    else:
        lattice = lattice_for(n_max)
    inputs = [SpectralField(coeffs) for coeffs in witness["inputs"]]
    return estimate_ratio(witness["estimate_id"], inputs, witness["s"], witness["delta"],
                          parse_multiplier(witness["multiplier"]), witness["eta"], witness["sigma"], lattice)


def estimate_campaign(estimate_id: str, s: float, delta: Optional[float] = None,
                      sizes: Sequence[int] = (16, 32, 64), trials: int = 200, seed: int = 0,
                      ensemble: str = MIXED, eta: float = ETA_DEFAULT, sigma: int = 1,
                      exact_max_n: int = EXACT_MAX_N, mc_samples: int = MC_SAMPLES,
                      threads: Optional[int] = None) -> EstimateReport:
    """verify_estimate over several lattice sizes with the fitted growth slope."""
    delta = check_regularity(s, delta)
    report = EstimateReport(check_id(estimate_id), s, delta, list(sizes), trials)
    for N in sizes:
        entry = verify_estimate(estimate_id, s, delta, N, trials, seed, ensemble, eta, sigma,
                                exact_max_n, mc_samples, threads)
        report.worst_ratio.append(entry["worst_ratio"])
        report.mean_ratio.append(entry["mean_ratio"])
        report.modes.append(entry["mode"])
        report.witnesses.append(entry["witness"])
    report.slope = fit_slope(report.lattice_sizes, report.worst_ratio)
    return report


def all_estimates(s: float, delta: Optional[float] = None, sizes: Sequence[int] = (16, 32, 64),
                  trials: int = 200, seed: int = 0, **kwargs) -> List[EstimateReport]:
    return [estimate_campaign(estimate_id, s, delta, sizes, trials, seed, **kwargs)
            for estimate_id in ESTIMATE_IDS]


def product_campaign(s: float, sizes: Sequence[int] = (32, 64, 128), trials: int = 50,
                     seed: int = 0) -> dict:
    """Worst ||fg||_{H^{s-1}} / (||f||_{H^s} ||g||_{H^{s-1}}) over colored real inputs per lattice size."""
    check_regularity(s)
    worst = []
    for N in sizes:
        rng = np.random.default_rng([seed, N])
        best = 0.0
        for trial in range(trials):
            f = colored_noise(N, int(rng.integers(2 ** 31)), decay=s + 0.5)
            g = colored_noise(N, int(rng.integers(2 ** 31)), decay=s - 0.5)
            best = max(best, product_estimate_ratio(f, g, s))
        worst.append(best)
    return {"s": s, "lattice_sizes": list(sizes), "trials": trials, "worst_ratio": worst,
            "slope": fit_slope(sizes, worst)}
