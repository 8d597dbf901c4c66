"""Periodic Fourier calculus on the symmetric lattice [-N, N].

Coefficients follow the convention F f(n) = (1/2pi) * integral of f(x) e^{-inx},
so a field is f(x) = sum_n f(n) e^{inx}. All products are dealiased: the
only modeling error of the lab is truncation of the lattice.
"""

from enum import Enum
from typing import Mapping, Optional

import numpy as np
from scipy import fft as sfft

from core.errors import NonZeroMean, SizeMismatch

IDENTITY_TOL = 1e-12


class Projection(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    MEAN = "mean"
    NON_MEAN = "non_mean"


class ProductMode(str, Enum):
    EXACT = "exact_convolution"
    PADDED = "padded_transform"


class SpectralField:
    """Fourier coefficients of a 2pi-periodic function.

    Stored densely as a read-only complex array ordered n = -N..N.
    """

    def __init__(self, coeffs, is_real: bool = False):
        """Initialize field.

        Args:
            coeffs: Complex sequence of odd length 2N+1, ordered n = -N..N
            is_real: Whether the field represents a real-valued function
        """
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.ndim != 1 or arr.size % 2 == 0:
            raise SizeMismatch(f"coefficient array must have odd length, got shape {arr.shape}")
        arr.flags.writeable = False
        self._coeffs = arr
        self._is_real = bool(is_real)

    # Constructors

    @classmethod
    def zeros(cls, n_max: int, is_real: bool = True) -> "SpectralField":
        return cls(np.zeros(2 * n_max + 1), is_real=is_real)

    @classmethod
    def constant(cls, n_max: int, value: complex) -> "SpectralField":
        arr = np.zeros(2 * n_max + 1, dtype=np.complex128)
        arr[n_max] = value
        return cls(arr, is_real=np.imag(value) == 0)

    @classmethod
    def from_modes(cls, n_max: int, modes: Mapping[int, complex], is_real: bool = False) -> "SpectralField":
        """Build a field from a sparse {n: coefficient} map."""
        arr = np.zeros(2 * n_max + 1, dtype=np.complex128)
        for n, c in modes.items():
            if abs(n) > n_max:
                raise SizeMismatch(f"mode {n} outside lattice [-{n_max}, {n_max}]")
            arr[n + n_max] = c
        return cls(arr, is_real=is_real)

    @classmethod
    def real(cls, coeffs) -> "SpectralField":
        """Build a real field, projecting coeffs onto conjugate symmetry."""
        arr = np.asarray(coeffs, dtype=np.complex128)
        return cls(0.5 * (arr + np.conj(arr[::-1])), is_real=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralField":
        coeffs = np.array([complex(re, im) for re, im in data["coeffs"]])
        if coeffs.size != 2 * int(data["n_max"]) + 1:
            raise SizeMismatch("coefficient count does not match n_max")
        return cls(coeffs, is_real=bool(data["is_real"]))

    # Properties

    @property
    def n_max(self) -> int:
        return (self._coeffs.size - 1) // 2

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def is_real(self) -> bool:
        return self._is_real

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_max:
            return 0j
        return complex(self._coeffs[n + self.n_max])

    # Arithmetic

    def _check_same(self, other: "SpectralField"):
        if self.n_max != other.n_max:
            raise SizeMismatch(f"lattices differ: {self.n_max} vs {other.n_max}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return SpectralField(self._coeffs + other._coeffs, self._is_real and other._is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same(other)
        return SpectralField(self._coeffs - other._coeffs, self._is_real and other._is_real)

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self._coeffs, self._is_real)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self._coeffs * scalar, self._is_real and np.imag(scalar) == 0)

    __rmul__ = __mul__

    def with_coeffs(self, coeffs, is_real: Optional[bool] = None) -> "SpectralField":
        return SpectralField(coeffs, self._is_real if is_real is None else is_real)

    def conjugate(self) -> "SpectralField":
        """Coefficients of the complex conjugate function: g(n) = conj(f(-n))."""
        return SpectralField(np.conj(self._coeffs[::-1]), self._is_real)

    def truncate(self, n_max: int) -> "SpectralField":
        if n_max == self.n_max:
            return self
        if n_max > self.n_max:
            return self.pad(n_max)
        lo = self.n_max - n_max
        return SpectralField(self._coeffs[lo:lo + 2 * n_max + 1], self._is_real)

    def pad(self, n_max: int) -> "SpectralField":
        if n_max == self.n_max:
            return self
        if n_max < self.n_max:
            return self.truncate(n_max)
        arr = np.zeros(2 * n_max + 1, dtype=np.complex128)
        arr[n_max - self.n_max:n_max + self.n_max + 1] = self._coeffs
        return SpectralField(arr, self._is_real)

    def resize(self, n_max: int) -> "SpectralField":
        return self.pad(n_max) if n_max > self.n_max else self.truncate(n_max)

    def reality_defect(self) -> float:
        """Max |f(-n) - conj f(n)|."""
        return float(np.max(np.abs(self._coeffs - np.conj(self._coeffs[::-1]))))

    def l2(self) -> float:
        return float(np.linalg.norm(self._coeffs))

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "is_real": self._is_real,
            "coeffs": [[float(c.real), float(c.imag)] for c in self._coeffs],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectralField):
            return NotImplemented
        return self._is_real == other._is_real and np.array_equal(self._coeffs, other._coeffs)

    __hash__ = None

    def __repr__(self) -> str:
        return f"SpectralField(n_max={self.n_max}, is_real={self._is_real}, l2={self.l2():.3e})"


def japanese(n) -> np.ndarray:
    """<n> = (1 + n^2)^{1/2}."""
    n = np.asarray(n, dtype=np.float64)
    return np.sqrt(1.0 + n * n)


# Fourier multipliers

def hilbert(f: SpectralField) -> SpectralField:
    """H f with multiplier -i sgn(n)."""
    return f.with_coeffs(-1j * np.sign(f.modes) * f.coeffs)


def dx(f: SpectralField) -> SpectralField:
    return f.with_coeffs(1j * f.modes * f.coeffs)


def project(f: SpectralField, which: Projection) -> SpectralField:
    """Restrict coefficients to {n>0}, {n<0}, {n=0} or {n!=0}."""
    which = Projection(which)
    n = f.modes
    if which is Projection.PLUS:
        keep = n > 0
    elif which is Projection.MINUS:
        keep = n < 0
    elif which is Projection.MEAN:
        keep = n == 0
    else:
        keep = n != 0
    is_real = f.is_real and which in (Projection.MEAN, Projection.NON_MEAN)
    return f.with_coeffs(np.where(keep, f.coeffs, 0), is_real=is_real)


def inv_dx(f: SpectralField, tol: float = IDENTITY_TOL) -> SpectralField:
    """Periodic primitive: f(n)/(in) for n != 0, zero mean.

    Raises:
        NonZeroMean: If |f(0)| exceeds tol (relative to max(1, max |f|))
    """
    scale = max(1.0, float(np.max(np.abs(f.coeffs))))
    if abs(f[0]) > tol * scale:
        raise NonZeroMean(f"inv_dx needs a mean-zero field, |f(0)| = {abs(f[0]):.3e}")
    n = f.modes
    safe = np.where(n == 0, 1, n)
    return f.with_coeffs(np.where(n == 0, 0, f.coeffs / (1j * safe)))


def linear_propagator(n_max: int, tau: float) -> np.ndarray:
    """e^{-i tau n|n|}, the flow of -H d_x^2 over time tau."""
    n = np.arange(-n_max, n_max + 1)
    return np.exp(-1j * tau * (n * np.abs(n)))


# Grid transforms

def to_grid(f: SpectralField, m: int) -> np.ndarray:
    """Values of f at x_j = 2 pi j / m, j = 0..m-1."""
    if m < 2 * f.n_max + 1:
        raise SizeMismatch(f"grid of {m} points cannot hold lattice half-width {f.n_max}")
    buf = np.zeros(m, dtype=np.complex128)
    buf[f.modes % m] = f.coeffs
    values = sfft.ifft(buf, norm="forward")
    return values.real if f.is_real else values


def from_grid(values: np.ndarray, n_max: int, is_real: bool = False) -> SpectralField:
    """Fourier coefficients |n| <= n_max of grid samples."""
    m = values.size
    if m < 2 * n_max + 1:
        raise SizeMismatch(f"grid of {m} points cannot resolve lattice half-width {n_max}")
    if is_real:
        half = sfft.rfft(np.real(values), norm="forward")[:n_max + 1]
        return SpectralField(np.concatenate([np.conj(half[:0:-1]), half]), is_real=True)
    full = sfft.fft(values, norm="forward")
    return SpectralField(full[np.arange(-n_max, n_max + 1) % m])


def padded_size(support: int, n_out: int, widest: int = 0) -> int:
    """Grid length free of aliasing for a product of total support into |n| <= n_out.

    The grid also holds every factor, the widest of half-width `widest`.
    """
    return sfft.next_fast_len(max(support + n_out + 1, 2 * widest + 1))


# Products

def multiply(f: SpectralField, g: SpectralField, n_out: Optional[int] = None,
             mode: ProductMode = ProductMode.PADDED) -> SpectralField:
    """Exact product of two fields, returned on lattice n_out.

    n_out defaults to the full support f.n_max + g.n_max, so nothing is dropped.
    """
    support = f.n_max + g.n_max
    n_out = support if n_out is None else n_out
    is_real = f.is_real and g.is_real
    if ProductMode(mode) is ProductMode.EXACT:
        full = SpectralField(np.convolve(f.coeffs, g.coeffs), is_real=is_real)
        return full.resize(n_out)
    m = padded_size(support, n_out, max(f.n_max, g.n_max))
    values = to_grid(f, m) * to_grid(g, m)
    return from_grid(values, n_out, is_real=is_real)


def product(f: SpectralField, g: SpectralField, mode: ProductMode = ProductMode.PADDED) -> SpectralField:
    """Dealiased product truncated to the common lattice.

    Raises:
        SizeMismatch: If the fields live on different lattices
    """
    if f.n_max != g.n_max:
        raise SizeMismatch(f"product needs equal lattices, got {f.n_max} and {g.n_max}")
    return multiply(f, g, n_out=f.n_max, mode=mode)


def multiply_all(*fields: SpectralField, n_out: Optional[int] = None) -> SpectralField:
    """Exact product of several fields on one padded grid."""
    support = sum(f.n_max for f in fields)
    n_out = support if n_out is None else n_out
    m = padded_size(support, n_out, max(f.n_max for f in fields))
    values = np.ones(m, dtype=np.complex128)
    for f in fields:
        values = values * to_grid(f, m)
    return from_grid(values, n_out, is_real=all(f.is_real for f in fields))


# Norms

def sobolev_norm(f: SpectralField, s: float) -> float:
    """||f||_{l^2_s} = (sum <n>^{2s} |f(n)|^2)^{1/2}."""
    weights = japanese(f.modes) ** (2.0 * s)
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def product_estimate_ratio(f: SpectralField, g: SpectralField, s: float) -> float:
    """||fg||_{H^{s-1}} / (||f||_{H^s} ||g||_{H^{s-1}}), 0 for vanishing inputs."""
    denom = sobolev_norm(f, s) * sobolev_norm(g, s - 1.0)
    if denom == 0.0:
        return 0.0
    return sobolev_norm(multiply(f, g), s - 1.0) / denom
