"""Periodic grids, sampled fields and Fourier multipliers.

Everything lives on a uniform grid of ``n`` points covering ``[-L, L)``.
Fields are stored as point samples.  Operators that involve the power
nonlinearity are evaluated Galerkin-style: the field is interpolated to a
finer grid, the pointwise product is taken there and the result is projected
back onto the coarse Fourier modes.  The Nyquist mode is dropped by these
projections, so the coarse space is the span of the modes |k| < n/2.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Fine-grid factor used for nonlinearities that are not polynomial in u.
NONPOLYNOMIAL_OVERSAMPLE = 64


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _readonly(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-half_length, half_length)``.

    ``oversample`` fixes the fine-grid factor used for nonlinear terms.  When
    left as ``None`` it is chosen from the power ``p``: even integer powers
    are integrated exactly with a factor ``p/2``, anything else uses
    ``NONPOLYNOMIAL_OVERSAMPLE``.
    """

    n: int
    half_length: float
    oversample: int | None = None

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if self.n < 8 or not _is_power_of_two(int(self.n)):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        if self.oversample is not None and self.oversample < 2:
            raise ValueError("oversample must be at least 2")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def dx(self):
        return 2.0 * self.half_length / self.n

    @cached_property
    def x(self):
        """Sample points, ``x_j = -L + j*dx``; x = 0 sits at index n/2."""
        return _readonly(-self.half_length + self.dx * np.arange(self.n))

    @cached_property
    def modes(self):
        """Signed wavenumbers pi*k/L in natural FFT order (k = 0..n/2-1, -n/2..-1)."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        return _readonly(np.pi * k / self.half_length)

    @cached_property
    def rmodes(self):
        """Nonnegative wavenumbers of the real transform, 0..n/2."""
        return _readonly(np.pi * np.arange(self.n // 2 + 1) / self.half_length)

    @property
    def xi_max(self):
        """Largest resolved wavenumber of the coarse space."""
        return np.pi * (self.n // 2 - 1) / self.half_length

    def quadrature_factor(self, p):
        """Fine-grid factor for integrating |u|^p and projecting |u|^(p-2)u."""
        if self.oversample is not None:
            return self.oversample
        if float(p).is_integer() and int(p) % 2 == 0:
            return max(2, int(p) // 2)
        return NONPOLYNOMIAL_OVERSAMPLE


def make_grid(n, half_length, oversample=None):
    """Build a :class:`Grid`, rejecting sizes that are not powers of two."""
    return Grid(n, half_length, oversample)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a grid.  Immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(np.asarray(grid.x)))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n))

    def with_values(self, values):
        return Field(self.grid, values)

    def inner(self, other):
        return float(np.dot(self.values, other.values) * self.grid.dx)

    def norm(self):
        return float(np.sqrt(self.inner(self)))

    def shift(self, s):
        """Return the spectrally translated field x -> u(x + s)."""
        c = np.fft.rfft(self.values) * np.exp(1j * self.grid.rmodes * s)
        if self.grid.n % 2 == 0:
            c[-1] = c[-1].real
        return self.with_values(np.fft.irfft(c, n=self.grid.n))

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, a):
        return self.with_values(self.values * _vals(a))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _vals(obj):
    return obj.values if isinstance(obj, Field) else obj


# --- transforms --------------------------------------------------------------

def transform(f):
    """Continuous-transform approximation ``dx * sum_j f_j exp(-i xi_k x_j)``.

    Returned in natural FFT order, matching ``f.grid.modes``.
    """
    g = f.grid
    k = np.fft.fftfreq(g.n, 1.0 / g.n)
    return g.dx * np.fft.fft(f.values) * np.cos(np.pi * k)


def inverse_transform(grid, coeffs):
    """Inverse of :func:`transform`; the imaginary part is discarded."""
    k = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    vals = np.fft.ifft(np.asarray(coeffs) * np.cos(np.pi * k)) / grid.dx
    return Field(grid, vals.real)


def project(values):
    """Drop the Nyquist mode of a sample vector."""
    c = np.fft.rfft(values)
    c[-1] = 0.0
    return np.fft.irfft(c, n=len(values))


def to_fine(values, m):
    """Band-limited interpolation of coarse samples onto an m-times finer grid."""
    n = len(values)
    c = np.fft.rfft(values)
    c[-1] = 0.0
    return np.fft.irfft(c, n=m * n) * m


def from_fine(values, n, m):
    """Project fine samples onto the coarse modes |k| < n/2."""
    c = np.fft.rfft(values)[: n // 2 + 1] / m
    c[-1] = 0.0
    return np.fft.irfft(c, n=n)


def apply_multiplier(values, mult):
    """``irfft(mult * rfft(values))`` for a multiplier sampled on ``rmodes``."""
    return np.fft.irfft(mult * np.fft.rfft(values), n=len(values))


def quadratic_form(values, grid, mult=1.0):
    """``sum_k mult(xi_k) |u_k|^2`` in physical normalization (Plancherel)."""
    c = np.fft.rfft(values)
    w = np.full(c.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return float(np.sum(w * mult * np.abs(c) ** 2) * grid.dx / grid.n)


# --- multipliers -------------------------------------------------------------

class SymbolKind(enum.Enum):
    ZYGMUND = "zygmund"
    DX = "dx"
    HILBERT = "hilbert"
    SHIFTED_SQUARE = "shifted_square"
    GREEN = "green"
    RESOLVENT = "resolvent"


def multiplier(kind, xi, omega=None):
    """Multiplier of ``kind`` on nonnegative wavenumbers ``xi`` (rfft layout).

    The odd multipliers (derivative, Hilbert) vanish on the last entry, the
    Nyquist mode, so that their output stays real.
    """
    kind = SymbolKind(kind)
    xi = np.asarray(xi, dtype=float)
    if kind in (SymbolKind.GREEN, SymbolKind.RESOLVENT):
        if omega is None or not omega > 0:
            raise ValueError(f"Green/resolvent multiplier needs omega > 0, got {omega}")
        return 1.0 / ((xi - 1.0) ** 2 + omega)
    if kind is SymbolKind.ZYGMUND:
        return np.abs(xi)
    if kind is SymbolKind.SHIFTED_SQUARE:
        return (np.abs(xi) - 1.0) ** 2
    if kind is SymbolKind.DX:
        m = 1j * xi
    else:
        m = -1j * np.sign(xi)
    m = m.astype(complex)
    m[-1] = 0.0
    return m


def apply_symbol(f, kind, omega=None):
    """Apply a Fourier multiplier to a field and return the real result."""
    mult = multiplier(kind, f.grid.rmodes, omega)
    return f.with_values(apply_multiplier(f.values, mult))


def derivative(values, grid, order=1):
    """Spectral derivative of a sample vector (Nyquist mode dropped)."""
    mult = (1j * grid.rmodes) ** order
    mult[-1] = 0.0
    return apply_multiplier(values, mult)


def greens_function(grid, omega):
    """Field whose transform is ``1/((|xi|-1)^2 + omega)`` at every mode."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    ghat = 1.0 / ((np.abs(grid.modes) - 1.0) ** 2 + omega)
    return inverse_transform(grid, ghat)


def bump(s):
    """Smooth compactly supported bump with value 1 at the origin."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def spectral_bump(grid, eps):
    """Test function concentrated near |xi| = 1 with a small bump at xi = 0.

    Transform: ``b((xi-1)/eps) + b((xi+1)/eps) + eps*b(xi/eps)``.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError(f"eps must lie in (0, 1/4), got {eps}")
    modes_per_bump = 2.0 * eps * grid.half_length / np.pi
    if modes_per_bump < 8:
        raise ValueError(
            f"grid too coarse: {modes_per_bump:.1f} modes per bump, need at least 8")
    if grid.xi_max < 1.0 + eps:
        raise ValueError("grid does not resolve wavenumbers near |xi| = 1")
    xi = grid.modes
    uhat = bump((xi - 1.0) / eps) + bump((xi + 1.0) / eps) + eps * bump(xi / eps)
    return inverse_transform(grid, uhat)
