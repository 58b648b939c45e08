"""Scalar functionals of waves: quotients, norms, Pohozaev residuals, invariants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import from_fine, quadratic_form, to_fine


class NoWaveRegime(ValueError):
    """Parameters for which no normalized travelling wave exists."""


@dataclass(frozen=True)
class WaveParams:
    """Speed parameter ``omega`` and nonlinearity power ``p``."""

    omega: float
    p: float

    def __post_init__(self):
        if not np.isfinite(self.omega) or self.omega <= 0:
            raise NoWaveRegime(
                f"omega must be positive (waves need c > gamma^2/4), got {self.omega}")
        if not np.isfinite(self.p) or self.p <= 2:
            raise ValueError(f"p must exceed 2, got {self.p}")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True)
class PhysicalParams:
    """Wave speed ``c`` and dispersion parameter ``gamma`` of the original model."""

    c: float
    gamma: float

    def __post_init__(self):
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


@dataclass(frozen=True)
class PohozaevResiduals:
    r1: float
    r2: float
    relative: float


def physical_to_normalized(pp):
    """Map (c, gamma) to omega = 4c/gamma^2 - 1."""
    ratio = 4.0 * pp.c / pp.gamma**2
    if not ratio > 1.0:
        raise NoWaveRegime(f"4c/gamma^2 = {ratio} must exceed 1 for a wave to exist")
    return ratio - 1.0


# --- array-level building blocks ----------------------------------------------

def power_term(u, p):
    """Pointwise |u|^(p-2) u, with value 0 at u = 0."""
    return np.abs(u) ** (p - 2.0) * u


def nonlinearity(values, grid, p):
    """Projection of |u|^(p-2) u onto the coarse modes, via the fine grid."""
    m = grid.quadrature_factor(p)
    return from_fine(power_term(to_fine(values, m), p), grid.n, m)


def lp_power(values, grid, p, signed=False):
    """``int |u|^p dx`` (or ``int u^p`` when ``signed``) on the fine grid."""
    m = grid.quadrature_factor(p)
    uf = to_fine(values, m)
    integrand = uf**p if signed else np.abs(uf) ** p
    return float(np.sum(integrand) * grid.dx / m)


def shifted_symbol(grid):
    """(|xi| - 1)^2 on the rfft modes."""
    return (grid.rmodes - 1.0) ** 2


def _nonzero(u):
    if not np.any(u.values):
        raise ValueError("functional undefined for the zero field")


# --- quotients ----------------------------------------------------------------

def gn_quotient(u, alpha, p, signed=False):
    """``int |u|^p / (||u||^(p-2) (||(D-1)u||^2 + alpha ||u||^2))``.

    With ``signed=True`` the numerator is ``int u^p`` (the classical cubic form
    for p = 3).
    """
    _nonzero(u)
    if not 2.0 < p <= 6.0:
        raise ValueError(f"p must lie in (2, 6], got {p}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    g = u.grid
    l2 = quadratic_form(u.values, g)
    energy = quadratic_form(u.values, g, shifted_symbol(g)) + alpha * l2
    return lp_power(u.values, g, p, signed) / (l2 ** ((p - 2.0) / 2.0) * energy)


def sobolev_quotient(u, omega, p):
    """``||u||_p^2 / (||(D-1)u||^2 + omega ||u||^2)``, for p >= 2."""
    _nonzero(u)
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    g = u.grid
    energy = quadratic_form(u.values, g, shifted_symbol(g) + omega)
    if p == 2:
        num = quadratic_form(u.values, g)
    else:
        num = lp_power(u.values, g, p) ** (2.0 / p)
    return num / energy


def omega_from_alpha(phi, alpha, p):
    """Speed parameter of the wave obtained from a maximizer at constraint alpha."""
    _nonzero(phi)
    g = phi.grid
    l2 = quadratic_form(phi.values, g)
    d1 = quadratic_form(phi.values, g, shifted_symbol(g))
    if p == 3:
        return alpha + (d1 + alpha * l2) / (2.0 * l2)
    return p * alpha / 2.0 + (p - 2.0) / 2.0 * d1 / l2


# --- identities and invariants ------------------------------------------------

def pohozaev_residuals(phi, params):
    """Residuals of the two Pohozaev identities satisfied by exact waves."""
    g = phi.grid
    u = phi.values
    xi = g.rmodes
    grad2 = quadratic_form(u, g, xi**2)
    half = quadratic_form(u, g, xi)
    l2 = quadratic_form(u, g)
    lp = lp_power(u, g, params.p)
    w = params.omega + 1.0
    r1 = grad2 - 2.0 * half + w * l2 - lp
    r2 = grad2 - w * l2 + 2.0 / params.p * lp
    rel = max(abs(r1), abs(r2)) / lp if lp > 0 else 0.0
    return PohozaevResiduals(r1, r2, rel)


def hamiltonian(values, grid, params):
    energy = quadratic_form(values, grid, shifted_symbol(grid) + params.omega)
    return 0.5 * energy - lp_power(values, grid, params.p) / params.p


def invariants(u, params):
    """Return ``(mass, l2, hamiltonian)`` of a field."""
    g = u.grid
    mass = float(np.sum(u.values) * g.dx)
    l2 = quadratic_form(u.values, g)
    return mass, l2, hamiltonian(u.values, g, params)


def instability_margin(params):
    """``p/4 + 4/p - 1/omega - 5/2``; positive values signal instability."""
    p = params.p
    return p / 4.0 + 4.0 / p - 1.0 / params.omega - 2.5


def lp_norm(u, p):
    return lp_power(u.values, u.grid, p) ** (1.0 / p)
