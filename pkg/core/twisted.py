"""The twisted variable omega = e^{itn|n|} v and the equation it solves."""

import logging
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import InvariantViolation
from core.gauge import (
    WEIGHT_EXPONENTS, GaugeWeights, gauge_transform, gauge_weights, remainder_R, weight_rate,
)
from core.multipliers import ALL_IDS, ETA_DEFAULT, MultiplierId
from core.quintic import (
    QuinticLattice, eval_Q, hat_phase_weight, lattice_for, slot_fields, star,
)
from core.solver import Equation, Trajectory
from core.spectral import SpectralField, sobolev_norm

logger = logging.getLogger(__name__)


def _dispersion(n_max: int) -> np.ndarray:
    n = np.arange(-n_max, n_max + 1)
    return n * np.abs(n)


def twist_field(t: float, f: SpectralField) -> SpectralField:
    """e^{itn|n|} f(n)."""
    return SpectralField(np.exp(1j * t * _dispersion(f.n_max)) * f.coeffs)


class TwistedState:
    """omega(t, n) = e^{itn|n|} v(t, n) together with omega*(n) = conj(omega(-n))."""

    def __init__(self, t: float, omega: SpectralField):
        self.t = float(t)
        self.omega = omega
        self.omega_star = omega.conjugate()

    @classmethod
    def from_v(cls, t: float, v: SpectralField) -> "TwistedState":
        return cls(t, twist_field(t, v))

    def untwist(self) -> SpectralField:
        return twist_field(-self.t, self.omega)

    @property
    def n_max(self) -> int:
        return self.omega.n_max

    def __repr__(self) -> str:
        return f"TwistedState(t={self.t:.6g}, n_max={self.n_max})"


def twist(samples: Iterable[Tuple[float, SpectralField]]) -> List[TwistedState]:
    return [TwistedState.from_v(t, v) for t, v in samples]


def eval_R0(state: TwistedState, u: SpectralField, weights: GaugeWeights, sigma: int,
            eta: float = ETA_DEFAULT, lattice: Optional[QuinticLattice] = None,
            threads: Optional[int] = 1) -> SpectralField:
    """sum_i Q_i(e^{it Phi} m_hathat_i) + e^{itn|n|} R[u](n)."""
    lattice = lattice or lattice_for(state.n_max)
    slots = {k: weights[k].resize(state.n_max) for k in WEIGHT_EXPONENTS}
    total = twist_field(state.t, remainder_R(u, sigma, weights, n_out=state.n_max))
    for mid in ALL_IDS:
        fields = slot_fields(mid, state.omega, state.omega_star, slots)
        total = total + eval_Q(lattice, hat_phase_weight(mid, state.t, eta, sigma, "hathat"), fields, threads)
    return total


class Snapshot:
    """Everything the expansion reads at one sample time of an mBO' solution."""

    def __init__(self, t: float, u: SpectralField, sigma: int, eta: float = ETA_DEFAULT,
                 weight_band: Optional[int] = None, threads: Optional[int] = 1):
        self.t = float(t)
        self.u = u
        self.sigma = sigma
        self.eta = eta
        self.threads = threads
        self.weights = gauge_weights(u, sigma, n_out=weight_band)
        v, self.nu = gauge_transform(u, sigma, self.weights)
        self.state = TwistedState.from_v(t, v)
        self.lattice = lattice_for(u.n_max)
        self.families: Dict[tuple, dict] = {}

    @property
    def n_max(self) -> int:
        return self.u.n_max

    @cached_property
    def slot_weights(self) -> Dict[int, SpectralField]:
        return {k: self.weights[k].resize(self.n_max) for k in WEIGHT_EXPONENTS}

    @cached_property
    def rates(self) -> Dict[int, SpectralField]:
        """d_t e^{ik sigma F[u]} from the analytic identity, on the omega lattice."""
        return {k: weight_rate(self.u, k, self.sigma, self.weights, n_out=self.n_max)
                for k in WEIGHT_EXPONENTS}

    def fields(self, mid: MultiplierId) -> List[SpectralField]:
        return slot_fields(mid, self.state.omega, self.state.omega_star, self.slot_weights)

    @cached_property
    def R0(self) -> SpectralField:
        return eval_R0(self.state, self.u, self.weights, self.sigma, self.eta, self.lattice, self.threads)

    @cached_property
    def main_field(self) -> SpectralField:
        """sum_i Q_i(e^{it Phi} m_hat_i), the first-generation nonlinearity."""
        total = SpectralField.zeros(self.n_max, is_real=False)
        for mid in ALL_IDS:
            weight = hat_phase_weight(mid, self.t, self.eta, self.sigma, "hat")
            total = total + eval_Q(self.lattice, weight, self.fields(mid), self.threads)
        return total

    def full_rhs(self, starred: bool = False) -> SpectralField:
        """Right-hand side of the omega (or omega*) equation with the full multipliers."""
        R = twist_field(self.t, remainder_R(self.u, self.sigma, self.weights, n_out=self.n_max))
        total = star(R) if starred else R
        for base in ALL_IDS:
            mid = base.star() if starred else base
            weight = hat_phase_weight(mid, self.t, self.eta, self.sigma, "full")
            fields = slot_fields(mid, self.state.omega, self.state.omega_star, self.slot_weights)
            total = total + eval_Q(self.lattice, weight, fields, self.threads)
        return total

    def __repr__(self) -> str:
        return f"Snapshot(t={self.t:.6g}, n_max={self.n_max}, sigma={self.sigma})"


def build_snapshots(traj: Trajectory, eta: float = ETA_DEFAULT, weight_band: Optional[int] = None,
                    threads: Optional[int] = 1, stride: int = 1) -> List[Snapshot]:
    if traj.equation is not Equation.MBO_PRIME:
        raise InvariantViolation("the normal form is built on mBO' trajectories")
    return [Snapshot(t, u, traj.sigma, eta, weight_band, threads)
            for t, u in list(zip(traj.times, traj.states))[::stride]]


def _uniform_step(snaps: Sequence[Snapshot]) -> float:
    times = np.array([snap.t for snap in snaps])
    steps = np.diff(times)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise InvariantViolation("snapshots must be uniformly spaced")
    return float(steps[0])


def omega_equation_residual(snaps: Sequence[Snapshot], s: float) -> List[dict]:
    """Central-difference residual of the omega and omega* equations at interior samples."""
    dt = _uniform_step(snaps)
    rows = []
    for i in range(1, len(snaps) - 1):
        ahead, behind, snap = snaps[i + 1], snaps[i - 1], snaps[i]
        d_omega = SpectralField((ahead.state.omega.coeffs - behind.state.omega.coeffs) / (2 * dt))
        d_star = SpectralField((ahead.state.omega_star.coeffs - behind.state.omega_star.coeffs) / (2 * dt))
        rows.append({
            "t": snap.t,
            "residual": sobolev_norm(d_omega - snap.full_rhs(), s),
            "residual_star": sobolev_norm(d_star - snap.full_rhs(starred=True), s),
            "scale": sobolev_norm(d_omega, s),
        })
    return rows


def hathat_mass(snap: Snapshot, eta: float) -> float:
    """sum over i and all tuples of |m_hathat_i| times the moduli of the slot fields."""
    total = 0.0
    for mid in ALL_IDS:
        fields = [SpectralField(np.abs(f.coeffs)) for f in snap.fields(mid)]

        def weight(block, mid=mid):
            return np.abs(block.hat(mid, eta, snap.sigma)[1])

        total += float(np.sum(eval_Q(snap.lattice, weight, fields).coeffs.real))
    return total


def hathat_mass_scan(snap: Snapshot, etas: Sequence[float]) -> dict:
    masses = [hathat_mass(snap, eta) for eta in etas]
    diffs = np.diff(masses)
    return {
        "eta": list(etas),
        "mass": masses,
        "nonincreasing": bool(np.all(diffs <= 1e-12 * max(1.0, max(masses, default=0.0)))),
        "nondecreasing": bool(np.all(diffs >= -1e-12 * max(1.0, max(masses, default=0.0)))),
    }
