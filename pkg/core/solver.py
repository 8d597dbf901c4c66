"""Reference trajectories of mBO and mBO' by integrating-factor RK4."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from core.errors import BlowupDetected, InvariantViolation
from core.spectral import (
    SpectralField, dx, from_grid, linear_propagator, multiply, padded_size,
    sobolev_norm, to_grid,
)

logger = logging.getLogger(__name__)

ZERO_MODE_TOL = 1e-10
DEFAULT_BLOWUP_FACTOR = 1e6


class Equation(str, Enum):
    MBO = "mbo"              # d_t u = -H u_xx + sigma u^2 u_x
    MBO_PRIME = "mbo_prime"  # d_t u = -H u_xx + 2 sigma P_{!=c}(u^2) u_x


class ConservedTriple(NamedTuple):
    mean: float
    mass_l2: float
    energy: float


@dataclass(frozen=True)
class StepConfig:
    """One time-stepping configuration of a twin probe."""

    dt: float
    scheme_id: str = "if-rk4"


class Trajectory:
    """Uniformly sampled sequence of real fields."""

    def __init__(self, times: Sequence[float], states: Sequence[SpectralField], sigma: int,
                 dt: float, scheme_id: str = "if-rk4", equation: Equation = Equation.MBO_PRIME,
                 step_dt: Optional[float] = None):
        """Initialize trajectory.

        Args:
            times: Sample times, strictly increasing with spacing dt
            states: Real fields on a common lattice
            sigma: Focusing (+1) or defocusing (-1) sign
            dt: Spacing of the samples
            scheme_id: Tag of the integrator that produced the samples
            equation: Which equation the samples solve
            step_dt: Internal step of the integrator (defaults to dt)
        """
        self.times = np.asarray(times, dtype=np.float64)
        self.states = list(states)
        self.sigma = int(sigma)
        self.dt = float(dt)
        self.scheme_id = scheme_id
        self.equation = Equation(equation)
        self.step_dt = float(step_dt) if step_dt is not None else self.dt
        self._validate()

    def _validate(self):
        if len(self.times) != len(self.states) or not self.states:
            raise InvariantViolation("trajectory needs one state per sample time")
        if len(self.times) > 1:
            gaps = np.diff(self.times)
            if np.any(gaps <= 0) or not np.allclose(gaps, self.dt, rtol=1e-9, atol=1e-12):
                raise InvariantViolation("sample times must be uniform with spacing dt")
        n_max = self.states[0].n_max
        for state in self.states:
            if not state.is_real:
                raise InvariantViolation("trajectory states must be real fields")
            if state.n_max != n_max:
                raise InvariantViolation("trajectory states must share one lattice")

    @property
    def n_max(self) -> int:
        return self.states[0].n_max

    @property
    def final(self) -> SpectralField:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        return (f"Trajectory(equation={self.equation.value}, n_max={self.n_max}, "
                f"samples={len(self)}, dt={self.dt:g}, sigma={self.sigma})")


def _require_real(u: SpectralField):
    if not u.is_real:
        raise InvariantViolation("expected a real field")


def nonlinearity(u: SpectralField, sigma: int, equation: Equation = Equation.MBO_PRIME) -> SpectralField:
    """Dealiased cubic term of the chosen equation; the zero mode is checked then zeroed."""
    n_max = u.n_max
    m = padded_size(3 * n_max, n_max)
    values = to_grid(u, m)
    slope = to_grid(dx(u), m)
    if Equation(equation) is Equation.MBO:
        grid = sigma * values ** 2 * slope
    else:
        mean_sq = float(np.sum(np.abs(u.coeffs) ** 2))
        grid = 2.0 * sigma * (values ** 2 - mean_sq) * slope
    out = from_grid(grid, n_max, is_real=True)
    scale = max(1.0, float(np.max(np.abs(out.coeffs))))
    if abs(out[0]) > ZERO_MODE_TOL * scale:
        raise InvariantViolation(f"nonlinearity has nonzero mean {abs(out[0]):.3e}")
    coeffs = out.coeffs.copy()
    coeffs[n_max] = 0.0
    return SpectralField(coeffs, is_real=True)


def rhs(u: SpectralField, sigma: int, equation: Equation = Equation.MBO_PRIME) -> SpectralField:
    """Full right-hand side -H u_xx + nonlinearity."""
    _require_real(u)
    n = u.modes
    linear = u.with_coeffs(-1j * n * np.abs(n) * u.coeffs)
    return linear + nonlinearity(u, sigma, equation)


def rhs_mbo_prime(u: SpectralField, sigma: int) -> SpectralField:
    return rhs(u, sigma, Equation.MBO_PRIME)


def step(u: SpectralField, dt: float, sigma: int, equation: Equation = Equation.MBO_PRIME,
         nonlinear: bool = True, reference_norm: Optional[float] = None,
         blowup_factor: float = DEFAULT_BLOWUP_FACTOR) -> SpectralField:
    """Advance u by dt with classical RK4 on the twisted variable e^{itn|n|}u(n).

    Raises:
        BlowupDetected: If the l2 norm leaves the allowed range or turns non-finite
    """
    _require_real(u)
    n_max = u.n_max
    half = linear_propagator(n_max, dt / 2)
    full = linear_propagator(n_max, dt)

    def nl(coeffs: np.ndarray) -> np.ndarray:
        if not nonlinear:
            return np.zeros_like(coeffs)
        return nonlinearity(SpectralField(coeffs, is_real=True), sigma, equation).coeffs

    c0 = u.coeffs
    k1 = nl(c0)
    k2 = nl(half * (c0 + 0.5 * dt * k1))
    k3 = nl(half * c0 + 0.5 * dt * k2)
    k4 = nl(full * c0 + dt * half * k3)
    c1 = full * c0 + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    out = SpectralField.real(c1)

    norm = out.l2()
    if not np.isfinite(norm):
        raise BlowupDetected("state became non-finite")
    if reference_norm and norm > blowup_factor * reference_norm:
        raise BlowupDetected(f"l2 norm {norm:.3e} exceeds {blowup_factor:g} x initial {reference_norm:.3e}")
    return out


def simulate(u0: SpectralField, dt: float, T: float, sigma: int,
             equation: Equation = Equation.MBO_PRIME, sample_every: int = 1,
             blowup_factor: float = DEFAULT_BLOWUP_FACTOR, scheme_id: str = "if-rk4") -> Trajectory:
    """Integrate from u0 up to T, keeping every sample_every-th state."""
    _require_real(u0)
    n_steps = int(round(T / dt))
    reference = u0.l2()
    times, states = [0.0], [u0]
    u = u0
    logger.debug("simulating %s: n_max=%d dt=%g steps=%d", Equation(equation).value, u0.n_max, dt, n_steps)
    for k in range(1, n_steps + 1):
        u = step(u, dt, sigma, equation, reference_norm=reference, blowup_factor=blowup_factor)
        if k % sample_every == 0:
            times.append(k * dt)
            states.append(u)
    return Trajectory(times, states, sigma, dt * sample_every, scheme_id=scheme_id,
                      equation=equation, step_dt=dt)


def conserved(u: SpectralField, sigma: int, equation: Equation = Equation.MBO) -> ConservedTriple:
    """Mean, integral of u^2 and the Hamiltonian of the chosen equation."""
    _require_real(u)
    weights = np.abs(u.coeffs) ** 2
    mass = 2.0 * np.pi * float(np.sum(weights))
    dispersive = 2.0 * np.pi * float(np.sum(np.abs(u.modes) * weights))
    square = multiply(u, u)
    quartic = 2.0 * np.pi * multiply(square, square, n_out=0)[0].real
    coefficient = 1.0 / 12.0 if Equation(equation) is Equation.MBO else 1.0 / 6.0
    energy = 0.5 * dispersive - coefficient * sigma * quartic
    return ConservedTriple(float(u[0].real), mass, float(energy))


def conserved_log(traj: Trajectory) -> List[Tuple[float, ConservedTriple]]:
    return [(float(t), conserved(u, traj.sigma, traj.equation)) for t, u in zip(traj.times, traj.states)]


def conserved_drift(traj: Trajectory) -> dict:
    """Largest mean drift and relative drifts of mass and energy."""
    log = conserved_log(traj)
    first = log[0][1]

    def relative(value: float, base: float) -> float:
        return abs(value - base) / abs(base) if base != 0 else abs(value - base)

    return {
        "mean": max(abs(c.mean - first.mean) for _, c in log),
        "mass_l2": max(relative(c.mass_l2, first.mass_l2) for _, c in log),
        "energy": max(relative(c.energy, first.energy) for _, c in log),
    }


def order_check(u0: SpectralField, dt: float, T: float, sigma: int,
                equation: Equation = Equation.MBO_PRIME) -> float:
    """Ratio of successive step-halving differences at T; about 16 for RK4."""
    finals = [_final_state(u0, dt / 2 ** k, T, sigma, equation) for k in range(3)]
    coarse = (finals[0] - finals[1]).l2()
    fine = (finals[1] - finals[2]).l2()
    return coarse / fine if fine > 0 else float("inf")


def _final_state(u0: SpectralField, dt: float, T: float, sigma: int, equation: Equation) -> SpectralField:
    u = u0
    reference = u0.l2()
    for _ in range(int(round(T / dt))):
        u = step(u, dt, sigma, equation, reference_norm=reference)
    return u


def mbo_to_mbo_prime(traj: Trajectory) -> Trajectory:
    """Map an mBO trajectory to mBO' by 2^{-1/2} u(t, x - sigma int_0^t P_c(u^2) ds)."""
    if traj.equation is not Equation.MBO:
        raise InvariantViolation("mbo_to_mbo_prime expects an mBO trajectory")
    mean_sq = np.array([np.sum(np.abs(u.coeffs) ** 2) for u in traj.states])
    if len(traj) > 1:
        shift = traj.sigma * cumulative_trapezoid(mean_sq, traj.times, initial=0.0)
    else:
        shift = np.zeros(1)
    states = []
    for u, a in zip(traj.states, shift):
        phase = np.exp(-1j * u.modes * a)
        states.append(SpectralField.real(phase * u.coeffs / np.sqrt(2.0)))
    return Trajectory(traj.times, states, traj.sigma, traj.dt, scheme_id=traj.scheme_id + "+shift",
                      equation=Equation.MBO_PRIME, step_dt=traj.step_dt)


class TwinProbeResult(NamedTuple):
    report: dict
    first: Trajectory
    second: Trajectory


def truncation_error(u0: SpectralField, config: StepConfig, T: float, sigma: int, s: float,
                     equation: Equation = Equation.MBO_PRIME, every: int = 1) -> float:
    """Richardson estimate of sup_t ||u_dt - u|| for the run at config.dt.

    With e_h = C h^4 the step-halving difference is (15/16) e_h, hence the 16/15.
    """
    base = simulate(u0, config.dt, T, sigma, equation, sample_every=every)
    halved = simulate(u0, config.dt / 2, T, sigma, equation, sample_every=2 * every)
    diff = max(sobolev_norm(a - b, s) for a, b in zip(base.states, halved.states))
    return diff * 16.0 / 15.0


def twin_probe(u0: SpectralField, schemes: Tuple[StepConfig, StepConfig], T: float, sigma: int,
               s: float, equation: Equation = Equation.MBO_PRIME,
               perturbation: Optional[SpectralField] = None,
               estimate_errors: bool = True) -> TwinProbeResult:
    """Run two configurations from one datum and measure their divergence.

    Args:
        u0: Common datum
        schemes: Pair of step configurations
        T: Final time
        sigma: Sign of the nonlinearity
        s: Sobolev index of the divergence norm
        equation: Equation to integrate
        perturbation: Optional real field added to the datum of the second run
        estimate_errors: Whether to estimate each scheme's truncation error

    Returns:
        TwinProbeResult with the report and both trajectories
    """
    first_cfg, second_cfg = schemes
    spacing = max(first_cfg.dt, second_cfg.dt)
    every = [max(1, int(round(spacing / cfg.dt))) for cfg in schemes]
    datum2 = u0 if perturbation is None else u0 + perturbation
    first = simulate(u0, first_cfg.dt, T, sigma, equation, sample_every=every[0],
                     scheme_id=first_cfg.scheme_id)
    second = simulate(datum2, second_cfg.dt, T, sigma, equation, sample_every=every[1],
                      scheme_id=second_cfg.scheme_id)
    gaps = [sobolev_norm(a - b, s) for a, b in zip(first.states, second.states)]
    report = {
        "divergence": max(gaps),
        "divergence_final": gaps[-1],
        "times": [float(t) for t in first.times],
        "gaps": gaps,
        "datum_distance": sobolev_norm(datum2 - u0, s),
    }
    if report["datum_distance"] > 0:
        report["lipschitz_ratio"] = report["divergence"] / report["datum_distance"]
    if estimate_errors and perturbation is None:
        errors = [
            truncation_error(u0, cfg, T, sigma, s, equation, ev)
            for cfg, ev in zip(schemes, every)
        ]
        combined = errors[0] + errors[1]
        fine = min(errors)
        report.update({
            "truncation_errors": errors,
            "combined_error": combined,
            "ratio_to_fine": report["divergence"] / fine if fine > 0 else 0.0,
            "ratio_to_combined": report["divergence"] / combined if combined > 0 else 0.0,
            "within_bound": report["divergence"] <= 10.0 * combined,
        })
    return TwinProbeResult(report, first, second)
