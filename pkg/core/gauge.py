"""Gauge transform of mBO', its exponential weights and the v equation.

Every composite expression is evaluated with exact (full-support) products
and truncated once at the end, so the only approximation is the band kept for
the non-band-limited weights e^{ik sigma F[u]}.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigInvalid, InconsistentPair, InvariantViolation, SizeMismatch
from core.solver import Equation, Trajectory
from core.spectral import (
    IDENTITY_TOL, Projection, SpectralField, dx, from_grid, hilbert, inv_dx,
    multiply, multiply_all, project, sobolev_norm, to_grid,
)

logger = logging.getLogger(__name__)

WEIGHT_EXPONENTS = (1, -1, 3, -3)
DEFAULT_OVERSAMPLE = 4
DEFAULT_PAIR_TOL = 1e-6

_oversample = DEFAULT_OVERSAMPLE


class GaugeWeights:
    """Fourier coefficients of e^{ik sigma F[u]} for k in {+-1, +-3}."""

    def __init__(self, exps: Dict[int, SpectralField], F_field: SpectralField, nu: float, sigma: int):
        self.exps = dict(exps)
        self.F_field = F_field
        self.nu = float(nu)
        self.sigma = int(sigma)

    def __getitem__(self, k: int) -> SpectralField:
        return self.exps[k]

    @property
    def n_max(self) -> int:
        return self.exps[1].n_max

    def truncate(self, n_max: int) -> "GaugeWeights":
        return GaugeWeights({k: w.resize(n_max) for k, w in self.exps.items()},
                            self.F_field, self.nu, self.sigma)

    def __repr__(self) -> str:
        return f"GaugeWeights(n_max={self.n_max}, nu={self.nu:.4g}, sigma={self.sigma})"


def _require_real(u: SpectralField):
    if not u.is_real:
        raise InvariantViolation("gauge operations expect a real field")


def _band(u: SpectralField, band: Optional[int]) -> int:
    return 2 * u.n_max if band is None else band


def _mean_square(u: SpectralField) -> float:
    return float(np.sum(np.abs(u.coeffs) ** 2))


def _plus_half_mean(u: SpectralField) -> SpectralField:
    """P_+ u + nu / 2."""
    coeffs = project(u, Projection.PLUS).coeffs.copy()
    coeffs[u.n_max] = 0.5 * u[0]
    return SpectralField(coeffs)


def _scalar(value: complex, n_max: int = 0) -> SpectralField:
    return SpectralField.constant(n_max, value)


# Weights

def gauge_F(u: SpectralField, n_out: Optional[int] = None) -> SpectralField:
    """F[u] = d_x^{-1} P_{!=c}(u^2), real and mean-zero.

    n_out defaults to the lattice of u; 2 n_max keeps F exactly.
    """
    _require_real(u)
    square = multiply(u, u)
    full = inv_dx(project(square, Projection.NON_MEAN))
    return full.resize(u.n_max if n_out is None else n_out)


def set_oversample(factor: int):
    """Grid oversampling used when no explicit factor is passed."""
    global _oversample
    if factor < 2:
        raise ConfigInvalid(f"gauge grid oversampling must be at least 2, got {factor}")
    _oversample = factor


def gauge_exp(u: SpectralField, k: int, sigma: int, n_out: Optional[int] = None,
              oversample: Optional[int] = None) -> SpectralField:
    """Coefficients of e^{ik sigma F[u]} by exponentiation on an oversampled grid."""
    _require_real(u)
    oversample = oversample or _oversample
    n_out = u.n_max if n_out is None else n_out
    F_full = gauge_F(u, n_out=2 * u.n_max)
    m = max(oversample * (2 * n_out + 1), 2 * F_full.n_max + 1)
    values = np.exp(1j * k * sigma * to_grid(F_full, m))
    return from_grid(values, n_out)


def gauge_weights(u: SpectralField, sigma: int, n_out: Optional[int] = None,
                  oversample: Optional[int] = None) -> GaugeWeights:
    n_out = _band(u, n_out)
    exps = {k: gauge_exp(u, k, sigma, n_out, oversample) for k in WEIGHT_EXPONENTS}
    return GaugeWeights(exps, gauge_F(u, n_out=2 * u.n_max), float(u[0].real), sigma)


def gauge_transform(u: SpectralField, sigma: int, weights: Optional[GaugeWeights] = None,
                    n_out: Optional[int] = None) -> Tuple[SpectralField, float]:
    """v = e^{-i sigma F[u]} (P_+ u + nu/2); returns (v, nu)."""
    _require_real(u)
    weights = weights or gauge_weights(u, sigma)
    n_out = u.n_max if n_out is None else n_out
    v = multiply(weights[-1], _plus_half_mean(u), n_out=n_out)
    return v, float(u[0].real)


def reconstruct(v: SpectralField, weights: GaugeWeights, n_out: Optional[int] = None) -> SpectralField:
    """e^{i sigma F} v + e^{-i sigma F} conj(v)."""
    n_out = v.n_max if n_out is None else n_out
    total = multiply(weights[1], v, n_out=n_out) + multiply(weights[-1], v.conjugate(), n_out=n_out)
    return SpectralField.real(total.coeffs)


def reconstruction_defect(u: SpectralField, v: SpectralField, weights: GaugeWeights) -> float:
    """Relative l2 defect of the reconstruction identity."""
    gap = (reconstruct(v, weights, n_out=u.n_max) - u).l2()
    return gap / max(u.l2(), 1e-300) if u.l2() > 0 else gap


def reconstruction_floor(u: SpectralField, weights: GaugeWeights, v_n_max: Optional[int] = None) -> float:
    """Relative reconstruction defect explained by truncating v and the weights.

    The share carried by the modes of v beyond its lattice is computed exactly;
    the weight band enters through the l2 tail of e^{-i sigma F} on a doubled band.
    """
    v_n_max = u.n_max if v_n_max is None else v_n_max
    Q = _plus_half_mean(u)
    v_full = multiply(weights[-1], Q)
    tail = SpectralField(np.where(np.abs(v_full.modes) > v_n_max, v_full.coeffs, 0))
    lost = multiply(weights[1], tail, n_out=u.n_max) + multiply(weights[-1], tail.conjugate(), n_out=u.n_max)
    wide = gauge_exp(u, -1, weights.sigma, n_out=2 * weights.n_max)
    eps = float(np.linalg.norm(wide.coeffs[np.abs(wide.modes) > weights.n_max]))
    total = lost.l2() + 2.0 * (2.0 * eps + eps ** 2) * float(np.sum(np.abs(Q.coeffs)))
    norm = u.l2()
    return total / norm if norm > 0 else total


# Bilinear form

def bilinear_B(f: SpectralField, g: SpectralField, n_out: Optional[int] = None) -> SpectralField:
    """B(f, g) = d_x^{-1}((P_+ f')(P_+ g') - (P_- f')(P_- g')).

    Raises:
        SizeMismatch: If f and g live on different lattices
        InvariantViolation: If the argument of d_x^{-1} is not mean-zero
    """
    if f.n_max != g.n_max:
        raise SizeMismatch(f"bilinear_B needs equal lattices, got {f.n_max} and {g.n_max}")
    return _bilinear(f, g, f.n_max if n_out is None else n_out)


def _bilinear(f: SpectralField, g: SpectralField, n_out: Optional[int] = None) -> SpectralField:
    df, dg = dx(f), dx(g)
    plus = multiply(project(df, Projection.PLUS), project(dg, Projection.PLUS))
    minus = multiply(project(df, Projection.MINUS), project(dg, Projection.MINUS))
    inner = plus - minus
    scale = max(1.0, float(np.max(np.abs(inner.coeffs))))
    if abs(inner[0]) > IDENTITY_TOL * scale:
        raise InvariantViolation(f"B argument has nonzero mean {abs(inner[0]):.3e}")
    coeffs = inner.coeffs.copy()
    coeffs[inner.n_max] = 0.0
    out = inv_dx(inner.with_coeffs(coeffs))
    return out if n_out is None else out.resize(n_out)


# Remainder

def remainder_terms(u: SpectralField, sigma: int, weights: Optional[GaugeWeights] = None,
                    n_out: Optional[int] = None) -> Dict[str, SpectralField]:
    """The summands of R[u], each truncated to n_out (default: lattice of u)."""
    _require_real(u)
    weights = weights or gauge_weights(u, sigma)
    n_out = u.n_max if n_out is None else n_out
    E = weights[-1]
    Q = _plus_half_mean(u)
    square = multiply(u, u)
    P2 = project(square, Projection.NON_MEAN)
    P2_sq = multiply(P2, P2)
    ux = dx(u)
    Hux = hilbert(ux)
    transport = multiply(P2, ux)
    mean_sq = _mean_square(u)

    def out(field: SpectralField) -> SpectralField:
        return field.resize(n_out)

    terms = {}
    terms["quartic_phase"] = out(-1j * multiply_all(E, project(P2_sq, Projection.NON_MEAN), Q))
    terms["hilbert_quartic"] = out(-hilbert(multiply_all(E, P2_sq, Q)))

    mean_dispersion = multiply(u, 1j * Hux, n_out=0)[0]
    terms["mean_dispersion"] = out(-2 * sigma * mean_dispersion * multiply(E, Q))
    mean_cross = multiply(multiply_all(E, u, Q), 1j * Hux, n_out=0)[0]
    terms["mean_cross"] = out(_scalar(2 * sigma * mean_cross))

    low = project(transport, Projection.MEAN) + project(transport, Projection.MINUS)
    with_plus = multiply(E, project(transport, Projection.PLUS))
    terms["commutator_plus"] = out(2 * sigma * (project(with_plus, Projection.MEAN)
                                                + project(with_plus, Projection.MINUS)))
    terms["commutator_minus"] = out(-2 * sigma * project(multiply(E, low), Projection.PLUS))

    left = project(multiply(E, project(ux, Projection.MINUS)), Projection.PLUS)
    right = project(multiply(E, project(ux, Projection.PLUS)), Projection.MINUS)
    terms["mean_square_transport"] = out(-2 * sigma * mean_sq * (left + right))

    uxx_plus = project(dx(ux), Projection.PLUS)
    second_mean = multiply(E, uxx_plus, n_out=0)[0]
    primitive = inv_dx(project(E, Projection.MINUS))
    second_tail = project(multiply(primitive, uxx_plus), Projection.MINUS)
    terms["second_order"] = out(_scalar(1j * second_mean, n_out)) + out(-2 * sigma * mean_sq * second_tail)
    return terms


def remainder_R(u: SpectralField, sigma: int, weights: Optional[GaugeWeights] = None,
                n_out: Optional[int] = None) -> SpectralField:
    terms = remainder_terms(u, sigma, weights, n_out)
    total = None
    for field in terms.values():
        total = field if total is None else total + field
    return total


# The v equation

def _check_pair(u: SpectralField, v: SpectralField, nu: float, weights: GaugeWeights, tol: float):
    if abs(nu - u[0].real) > tol * max(1.0, abs(nu)):
        raise InconsistentPair(f"nu = {nu} does not match the mean {u[0].real} of u")
    defect = reconstruction_defect(u, v, weights)
    if defect <= tol:
        return
    allowed = tol + reconstruction_floor(u, weights, v.n_max)
    if defect > allowed:
        raise InconsistentPair(f"reconstruction defect {defect:.3e} exceeds {allowed:.3e}")


def rhs_v_terms(u: SpectralField, v: SpectralField, nu: float, sigma: int,
                form: str = "grouped", weights: Optional[GaugeWeights] = None,
                pair_tol: float = DEFAULT_PAIR_TOL, check: bool = True) -> Dict[str, SpectralField]:
    """Main terms of (d_t + H d_x^2) v, without R[u], on the lattice of v.

    form "grouped" is the equation written in v; "ungrouped" is the form in u
    before P_+ u + nu/2 = e^{i sigma F} v is substituted.
    """
    _require_real(u)
    weights = weights or gauge_weights(u, sigma)
    if check:
        _check_pair(u, v, nu, weights, pair_tol)
    n_out = v.n_max
    if form == "grouped":
        return _grouped_terms(v, sigma, weights, n_out)
    if form == "ungrouped":
        return _ungrouped_terms(u, sigma, weights, n_out)
    raise ValueError(f"unknown form {form!r}")


def _grouped_terms(v: SpectralField, sigma: int, weights: GaugeWeights, n_out: int) -> Dict[str, SpectralField]:
    vb = v.conjugate()
    w1, wm1, wm3 = weights[1], weights[-1], weights[-3]
    vv = multiply(v, v)
    vvb = multiply(v, vb)
    vbvb = multiply(vb, vb)
    d_minus_bar = dx(project(multiply(wm1, vb), Projection.MINUS))
    d_plus = dx(project(multiply(w1, v), Projection.PLUS))

    def cut(field: SpectralField) -> SpectralField:
        return field.resize(n_out)

    terms = {}
    terms["q1"] = cut(-2 * sigma * project(multiply_all(w1, vv, d_minus_bar), Projection.PLUS))
    terms["q2"] = cut(2 * sigma * project(multiply_all(wm3, vbvb, d_minus_bar), Projection.PLUS))
    terms["q3"] = cut(4 * sigma * project(multiply_all(w1, vv, d_plus), Projection.MINUS))
    terms["q4"] = cut(4 * sigma * project(multiply_all(wm1, vvb, d_plus), Projection.MINUS))

    a = multiply(w1, vv)
    b = multiply(wm1, vvb)
    c = multiply(wm3, vbvb)
    size = max(a.n_max, b.n_max, c.n_max)
    mixed = a.resize(size) + 2 * b.resize(size) + c.resize(size)
    primitive = inv_dx(project(mixed, Projection.MINUS))
    terms["q5"] = cut(2 * sigma * dx(project(multiply(primitive, d_plus), Projection.MINUS)))

    plus_sq = multiply(d_plus, d_plus)
    minus_sq = multiply(d_minus_bar, d_minus_bar)
    terms["q6"] = cut(-2 * sigma * multiply(v, inv_dx(plus_sq)))
    terms["q7"] = cut(2 * sigma * multiply(v, inv_dx(minus_sq)))
    return terms


def _ungrouped_terms(u: SpectralField, sigma: int, weights: GaugeWeights, n_out: int) -> Dict[str, SpectralField]:
    E = weights[-1]
    Q = _plus_half_mean(u)
    ux = dx(u)
    ux_minus = project(ux, Projection.MINUS)
    ux_plus = project(ux, Projection.PLUS)
    square = multiply(u, u)
    EuQ = multiply_all(E, u, Q)
    Euu = multiply(E, square)

    def cut(field: SpectralField) -> SpectralField:
        return field.resize(n_out)

    terms = {}
    terms["u1"] = cut(-4 * sigma * project(multiply(EuQ, ux_minus), Projection.PLUS))
    terms["u2"] = cut(4 * sigma * project(multiply(EuQ, ux_plus), Projection.MINUS))
    terms["u3"] = cut(2 * sigma * project(multiply(Euu, ux_minus), Projection.PLUS))
    primitive = inv_dx(project(Euu, Projection.MINUS))
    terms["u4"] = cut(2 * sigma * dx(project(multiply(primitive, ux_plus), Projection.MINUS)))
    terms["u5"] = cut(-2 * sigma * multiply_all(E, Q, _bilinear(u, u)))
    return terms


def rhs_v(u: SpectralField, v: SpectralField, nu: float, sigma: int, form: str = "grouped",
          weights: Optional[GaugeWeights] = None, pair_tol: float = DEFAULT_PAIR_TOL,
          check: bool = True, include_remainder: bool = True) -> SpectralField:
    """Full right-hand side of (d_t + H d_x^2) v on the lattice of v.

    Raises:
        InconsistentPair: If (u, v, nu) fails the reconstruction identity
    """
    weights = weights or gauge_weights(u, sigma)
    terms = rhs_v_terms(u, v, nu, sigma, form, weights, pair_tol, check)
    total = SpectralField.zeros(v.n_max, is_real=False)
    for field in terms.values():
        total = total + field
    if include_remainder:
        total = total + remainder_R(u, sigma, weights, n_out=v.n_max)
    return total


# Time derivative of the weights

def phase_rate(u: SpectralField, sigma: int) -> SpectralField:
    """d_t F[u] = -2 P_{!=c}(u H u_x) - 2i B(u, u) + sigma P_{!=c}[(P_{!=c} u^2)^2]."""
    _require_real(u)
    transport = project(multiply(u, hilbert(dx(u))), Projection.NON_MEAN)
    P2 = project(multiply(u, u), Projection.NON_MEAN)
    quartic = project(multiply(P2, P2), Projection.NON_MEAN)
    B = _bilinear(u, u)
    size = quartic.n_max
    total = -2 * transport.resize(size) - 2j * B.resize(size) + sigma * quartic
    return SpectralField.real(total.coeffs)


def weight_rate(u: SpectralField, k: int, sigma: int, weights: Optional[GaugeWeights] = None,
                n_out: Optional[int] = None) -> SpectralField:
    """d_t e^{ik sigma F[u]} = ik sigma e^{ik sigma F[u]} d_t F[u], analytically."""
    weights = weights or gauge_weights(u, sigma)
    n_out = u.n_max if n_out is None else n_out
    return 1j * k * sigma * multiply(weights[k], phase_rate(u, sigma), n_out=n_out)


# Empirical bounds

def exponential_bounds(u: SpectralField, s: float, sigma: int = 1,
                       band: Optional[int] = None) -> Dict[str, float]:
    """X_s, X_{s+1}, the v bound and the remainder bound as ratios to their majorants."""
    weights = gauge_weights(u, sigma, n_out=band)
    norm = sobolev_norm(u, s)
    X_s = max(sobolev_norm(weights[k], s) for k in WEIGHT_EXPONENTS)
    X_s1 = max(sobolev_norm(weights[k], s + 1) for k in WEIGHT_EXPONENTS)
    v, _ = gauge_transform(u, sigma, weights)
    R = remainder_R(u, sigma, weights)
    rates = max(sobolev_norm(weight_rate(u, k, sigma, weights), s - 1) for k in WEIGHT_EXPONENTS)

    def ratio(a: float, b: float) -> float:
        return a / b if b > 0 else 0.0

    return {
        "X_s": X_s,
        "X_s1": X_s1,
        "X_s_ratio": ratio(X_s, 1 + norm ** 2),
        "X_s1_ratio": ratio(X_s1, 1 + norm ** 4),
        "v_ratio": ratio(sobolev_norm(v, s), (1 + norm ** 2) * norm),
        "R_ratio": ratio(sobolev_norm(R, s), (1 + norm ** 6) * norm),
        "weight_rate_ratio": ratio(rates, X_s * (1 + norm ** 2) ** 2),
    }


def difference_bounds(u: SpectralField, w: SpectralField, s: float, sigma: int = 1,
                      band: Optional[int] = None) -> Dict[str, float]:
    """Lipschitz-type ratios of Y_s, Y_{s+1}, v - v~ and R[u] - R[u~]."""
    wu = gauge_weights(u, sigma, n_out=band)
    ww = gauge_weights(w, sigma, n_out=band)
    a, b = sobolev_norm(u, s), sobolev_norm(w, s)
    gap = sobolev_norm(u - w, s)
    if gap == 0:
        return {"Y_s_ratio": 0.0, "Y_s1_ratio": 0.0, "v_diff_ratio": 0.0, "R_diff_ratio": 0.0}
    Y_s = max(sobolev_norm(wu[k] - ww[k], s) for k in WEIGHT_EXPONENTS)
    Y_s1 = max(sobolev_norm(wu[k] - ww[k], s + 1) for k in WEIGHT_EXPONENTS)
    v_gap = sobolev_norm(gauge_transform(u, sigma, wu)[0] - gauge_transform(w, sigma, ww)[0], s)
    R_gap = sobolev_norm(remainder_R(u, sigma, wu) - remainder_R(w, sigma, ww), s)
    return {
        "Y_s_ratio": Y_s / ((1 + a ** 3 + b ** 3) * gap),
        "Y_s1_ratio": Y_s1 / ((1 + a ** 5 + b ** 5) * gap),
        "v_diff_ratio": v_gap / ((1 + a ** 4 + b ** 4) * gap),
        "R_diff_ratio": R_gap / ((1 + a ** 8 + b ** 8) * gap),
    }


def bilinear_ratio(f: SpectralField, g: SpectralField, s: float) -> float:
    """||B(f, g)||_{H^{s-1}} / (||f||_{H^s} ||g||_{H^s})."""
    denom = sobolev_norm(f, s) * sobolev_norm(g, s)
    if denom == 0:
        return 0.0
    return sobolev_norm(_bilinear(f, g), s - 1) / denom


# Trajectory checks

def gauge_residuals(traj: Trajectory, s: float, weight_band: Optional[int] = None,
                    pair_tol: float = DEFAULT_PAIR_TOL) -> List[dict]:
    """Central-difference residuals of the v equation and of the weight identity.

    (d_t + H d_x^2) v is differenced through the twisted variable
    e^{itn|n|} v(n), which removes the linear oscillation from the stencil.
    """
    sigma = traj.sigma
    dt = traj.dt
    if traj.equation is not Equation.MBO_PRIME:
        raise InvariantViolation("gauge residuals need an mBO' trajectory")
    n_max = traj.n_max
    n = np.arange(-n_max, n_max + 1)
    disp = n * np.abs(n)
    weights = [gauge_weights(u, sigma, n_out=weight_band) for u in traj.states]
    vs = [gauge_transform(u, sigma, w)[0] for u, w in zip(traj.states, weights)]
    rows = []
    for i in range(1, len(traj) - 1):
        t = traj.times[i]
        ahead = np.exp(1j * dt * disp) * vs[i + 1].coeffs
        behind = np.exp(-1j * dt * disp) * vs[i - 1].coeffs
        lhs = SpectralField((ahead - behind) / (2 * dt))
        u = traj.states[i]
        nu = float(u[0].real)
        grouped = rhs_v(u, vs[i], nu, sigma, "grouped", weights[i], pair_tol)
        ungrouped = rhs_v(u, vs[i], nu, sigma, "ungrouped", weights[i], pair_tol, check=False)
        row = {
            "t": float(t),
            "residual_grouped": sobolev_norm(lhs - grouped, s - 1),
            "residual_ungrouped": sobolev_norm(lhs - ungrouped, s - 1),
            "form_gap": sobolev_norm(grouped - ungrouped, s - 1),
        }
        for k in WEIGHT_EXPONENTS:
            ahead_w = weights[i + 1][k].resize(n_max)
            behind_w = weights[i - 1][k].resize(n_max)
            diff = SpectralField((ahead_w.coeffs - behind_w.coeffs) / (2 * dt))
            rate = weight_rate(u, k, sigma, weights[i], n_out=n_max)
            row[f"weight_residual_{k:+d}"] = sobolev_norm(diff - rate, s - 1)
        rows.append(row)
    return rows


def lipschitz_probe(u_traj: Trajectory, u2_traj: Trajectory, s: float,
                    horizons: Optional[Sequence[float]] = None) -> List[dict]:
    """sup ||u - u~|| / (||u(0) - u~(0)|| + sup ||v - v~||) over growing horizons."""
    sigma = u_traj.sigma
    count = min(len(u_traj), len(u2_traj))
    times = u_traj.times[:count]
    if horizons is None:
        T = float(times[-1])
        horizons = [T / 8, T / 4, T / 2, T] if T > 0 else [0.0]
    u_gaps, v_gaps = [], []
    for a, b in zip(u_traj.states[:count], u2_traj.states[:count]):
        u_gaps.append(sobolev_norm(a - b, s))
        va, _ = gauge_transform(a, sigma)
        vb, _ = gauge_transform(b, sigma)
        v_gaps.append(sobolev_norm(va - vb, s))
    rows = []
    for horizon in horizons:
        mask = times <= horizon + 1e-12
        sup_u = max(g for g, keep in zip(u_gaps, mask) if keep)
        sup_v = max(g for g, keep in zip(v_gaps, mask) if keep)
        denom = u_gaps[0] + sup_v
        if denom == 0:
            rows.append({"horizon": float(horizon), "ratio": None, "status": "degenerate"})
        else:
            rows.append({"horizon": float(horizon), "ratio": sup_u / denom, "status": "ok"})
    return rows
