"""Travelling-wave profiles by fixed-point iteration and by quotient maximization.

Both routes solve ``(D-1)^2 phi + omega phi - |phi|^(p-2) phi = 0`` on the
Galerkin space of the grid.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .functionals import (WaveParams, lp_power, nonlinearity, omega_from_alpha,
                          shifted_symbol)
from .spectral import (Field, apply_multiplier, greens_function, project,
                       quadratic_form, spectral_bump)

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Iteration failure carrying the iteration count and last residual."""

    def __init__(self, message, iterations=0, residual=float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonConvergence(SolverError):
    pass


class CollapseToZero(SolverError):
    pass


class RangeError(ValueError):
    """Power outside the range where a quotient is bounded."""


class Route(enum.Enum):
    FIXED_POINT = "fixedpoint"
    QUOTIENT_MAX = "quotient"


class Problem(enum.Enum):
    GN = "gn"
    SOBOLEV = "sobolev"


class Seed(enum.Enum):
    GREEN = "green"
    SPECTRAL_BUMP = "bump"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.  ``init`` is a :class:`Seed` or a path to a field CSV."""

    max_iter: int = 2000
    tol: float = 1e-10
    stab_exponent: float | None = None
    init: Seed | str | Path = Seed.GREEN
    damping: float = 0.1
    fallback: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if isinstance(self.init, str):
            try:
                object.__setattr__(self, "init", Seed(self.init))
            except ValueError:
                object.__setattr__(self, "init", Path(self.init))


@dataclass(frozen=True, eq=False)
class WaveProfile:
    phi: Field
    params: WaveParams
    residual: float
    iterations: int
    route: Route

    @property
    def grid(self):
        return self.phi.grid

    def metadata(self):
        return {
            "omega": self.params.omega,
            "p": self.params.p,
            "residual": self.residual,
            "iterations": self.iterations,
            "route": self.route.value,
            "grid": {"n": self.grid.n, "half_length": self.grid.half_length},
        }


@dataclass(frozen=True, eq=False)
class MaximizerReport:
    varphi: Field
    quotient_value: float
    wave: WaveProfile
    alpha: float | None
    problem: Problem
    route_detail: str


@dataclass(frozen=True)
class DecayReport:
    k_estimate: float
    window: tuple
    plateau_variation: float
    truncation_dominated: bool


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    quotient: float = float("nan")
    phi_norm: float = float("nan")
    omega: float = float("nan")
    status: str = "ok"
    message: str = ""


@dataclass
class SweepTable:
    p: float
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)


# --- helpers -------------------------------------------------------------------

def profile_residual(values, grid, params):
    """Relative residual ``||(D-1)^2 u + omega u - |u|^(p-2) u|| / ||u||``."""
    au = apply_multiplier(values, shifted_symbol(grid) + params.omega)
    r = au - nonlinearity(values, grid, params.p)
    return float(np.linalg.norm(r) / np.linalg.norm(values))


def initial_guess(grid, omega, cfg):
    if cfg.init is Seed.GREEN:
        u = greens_function(grid, omega).values
    elif cfg.init is Seed.SPECTRAL_BUMP:
        eps = max(0.1, 4.5 * np.pi / grid.half_length)
        u = spectral_bump(grid, eps).values
    else:
        from .io import read_field_csv
        seed = read_field_csv(cfg.init)
        if seed.grid.n != grid.n or not np.isclose(seed.grid.half_length, grid.half_length):
            raise ValueError(f"seed file {cfg.init} is on a different grid")
        u = seed.values
    u = project(u)
    return u / np.max(np.abs(u))


def _peak_offset(values, grid):
    """Location s of the extremum of |u| as a continuous point of the interpolant."""
    n = grid.n
    c = np.fft.rfft(values)
    c[-1] = 0.0
    w = np.full(c.shape, 2.0)
    w[0] = 1.0
    xi = grid.rmodes
    j = int(np.argmax(np.abs(values)))
    s = grid.x[j]
    for _ in range(20):
        ph = w * c * np.exp(1j * xi * (s + grid.half_length)) / n
        d1 = np.real(np.sum(1j * xi * ph))
        d2 = np.real(np.sum(-(xi**2) * ph))
        if d2 == 0:
            break
        step = d1 / d2
        s -= step
        if abs(step) < 1e-14 * grid.dx:
            break
    if abs(s - grid.x[j]) > grid.dx:
        s = grid.x[j]
    return s


def canonicalize(values, grid):
    """Move the peak of |u| to x = 0, make it positive, and evenize when nearly even.

    Returns the new samples together with the applied shift and sign.
    """
    s = _peak_offset(values, grid)
    u = values
    if abs(s) > 1e-13 * grid.dx:
        u = Field(grid, values).shift(s).values
        u = project(u)
    mid = grid.n // 2
    sign = 1.0 if u[mid] >= 0 else -1.0
    u = sign * u
    mirrored = np.roll(u[::-1], 1)
    if np.linalg.norm(u - mirrored) < 1e-8 * np.linalg.norm(u):
        u = 0.5 * (u + mirrored)
    return u, s, sign


def _check_params(params):
    if not isinstance(params, WaveParams):
        params = WaveParams(*params)
    return params


# --- fixed-point route ---------------------------------------------------------

def _fixed_point(u, grid, params, cfg, max_iter):
    p, omega = params.p, params.omega
    gamma = cfg.stab_exponent if cfg.stab_exponent is not None else (p - 1.0) / (p - 2.0)
    sym = shifted_symbol(grid) + omega
    floor = 1e-12 / np.sqrt(grid.dx)
    res = np.inf
    for it in range(1, max_iter + 1):
        norm_u = np.linalg.norm(u)
        if not np.isfinite(norm_u):
            raise NonConvergence("iterates became non-finite", it, res)
        if norm_u < floor:
            raise CollapseToZero("iterates collapsed to zero", it, res)
        nl = nonlinearity(u, grid, p)
        cu = np.fft.rfft(u)
        au = np.fft.irfft(sym * cu, n=grid.n)
        res = np.linalg.norm(au - nl) / norm_u
        if res <= cfg.tol:
            return u, it, res
        b = np.dot(nl, u)
        if not b > 0:
            raise CollapseToZero("nonlinear term vanished", it, res)
        mult = (np.dot(au, u) / b) ** gamma
        u = mult * np.fft.irfft(np.fft.rfft(nl) / sym, n=grid.n)
    raise NonConvergence(f"no convergence in {max_iter} iterations", max_iter, res)


def solve_profile(params, grid, cfg=SolverConfig(), seed=None):
    """Solve the profile equation by the normalized fixed-point iteration.

    On failure, and when ``cfg.fallback`` is set, the Sobolev quotient is
    maximized instead and its rescaled maximizer is returned.
    """
    params = _check_params(params)
    u0 = project(seed.values) if seed is not None else initial_guess(grid, params.omega, cfg)
    try:
        u, its, _ = _fixed_point(u0, grid, params, cfg, cfg.max_iter)
        u2, _, _ = canonicalize(u, grid)
        if not np.array_equal(u2, u):
            u2, extra, _ = _fixed_point(u2, grid, params, cfg, cfg.max_iter)
            its += extra
            u2, _, _ = canonicalize(u2, grid)
    except SolverError as err:
        if not cfg.fallback:
            raise
        log.warning("fixed-point route failed for %s (%s); maximizing the quotient",
                    params, err)
        fb = SolverConfig(cfg.max_iter, cfg.tol, cfg.stab_exponent, Seed.GREEN,
                          cfg.damping, fallback=False)
        return maximize_quotient(params.omega, params.p, grid, fb, Problem.SOBOLEV).wave
    res = profile_residual(u2, grid, params)
    return WaveProfile(Field(grid, u2), params, res, its, Route.FIXED_POINT)


# --- quotient maximization -----------------------------------------------------

class _Quotient:
    """Log-quotient, its stationarity data and the preconditioned ascent step."""

    def __init__(self, grid, p, value, problem):
        self.grid, self.p, self.value, self.problem = grid, p, value, problem
        self.s = shifted_symbol(grid)

    def state(self, u):
        g, p = self.grid, self.p
        l2 = quadratic_form(u, g)
        d1 = quadratic_form(u, g, self.s)
        lp = lp_power(u, g, p)
        if self.problem is Problem.GN:
            energy = d1 + self.value * l2
            logq = np.log(lp) - 0.5 * (p - 2.0) * np.log(l2) - np.log(energy)
            shift = self.value + 0.5 * (p - 2.0) * energy / l2
            coef = 0.5 * p * energy / lp
        else:
            energy = d1 + self.value * l2
            logq = 2.0 / p * np.log(lp) - np.log(energy)
            shift = self.value
            coef = energy / lp
        return dict(l2=l2, lp=lp, energy=energy, logq=logq, shift=shift, coef=coef)

    def quotient(self, st):
        p = self.p
        if self.problem is Problem.GN:
            return st["lp"] / (st["l2"] ** (0.5 * (p - 2.0)) * st["energy"])
        return st["lp"] ** (2.0 / p) / st["energy"]

    def normalize(self, u):
        return u / np.sqrt(quadratic_form(u, self.grid))


def maximize_quotient(value, p, grid, cfg=SolverConfig(), problem=Problem.GN, seed=None):
    """Maximize the GN quotient (constraint ``alpha = value``) or the Sobolev
    quotient (``omega = value``) by preconditioned normalized ascent.

    The step direction is the gradient preconditioned by ``((D-1)^2 + w)^-1``
    where ``w`` is the current Lagrange shift; the step length starts at
    ``cfg.damping`` and is grown on success and halved when the quotient drops.
    """
    problem = Problem(problem)
    if not value > 0:
        raise ValueError(f"alpha/omega must be positive, got {value}")
    if problem is Problem.GN and not 2.0 < p <= 6.0:
        raise RangeError(f"GN quotient needs p in (2, 6], got {p}")
    if not p > 2.0:
        raise ValueError(f"p must exceed 2, got {p}")
    q = _Quotient(grid, p, value, problem)
    if seed is not None:
        u = project(seed.values)
    else:
        u = initial_guess(grid, value, cfg)
    u = q.normalize(u)
    st = q.state(u)
    tau = cfg.damping
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        nl = nonlinearity(u, grid, p)
        sym = q.s + st["shift"]
        au = np.fft.irfft(sym * np.fft.rfft(u), n=grid.n)
        res = np.linalg.norm(au - st["coef"] * nl) / np.linalg.norm(u)
        if res <= cfg.tol:
            break
        d = np.fft.irfft(np.fft.rfft(st["coef"] * nl) / sym, n=grid.n) - u
        while True:
            trial = q.normalize(u + tau * d)
            st_t = q.state(trial)
            if st_t["logq"] >= st["logq"] - 1e-14 * abs(st["logq"]):
                u, st = trial, st_t
                tau = min(1.5 * tau, 1.0)
                break
            tau *= 0.5
            if tau < 1e-12:
                raise NonConvergence("line search stalled", it, res)
    else:
        raise NonConvergence(f"no convergence in {cfg.max_iter} ascent steps",
                             cfg.max_iter, res)

    qval = q.quotient(st)
    scale = st["coef"] ** (1.0 / (p - 2.0))
    varphi_vals, shift, sign = canonicalize(u, grid)
    varphi = Field(grid, varphi_vals)
    if problem is Problem.GN:
        omega = omega_from_alpha(varphi, value, p)
        alpha = value
    else:
        omega = value
        alpha = None
    params = WaveParams(omega, p)
    phi = Field(grid, scale * varphi_vals)
    wave = WaveProfile(phi, params, profile_residual(phi.values, grid, params), it,
                       Route.QUOTIENT_MAX)
    detail = f"{problem.value} value={value:g} p={p:g}: {it} ascent steps"
    return MaximizerReport(varphi, float(qval), wave, alpha, problem, detail)


def alpha_for_omega(omega, p, grid, cfg=SolverConfig(), tol=1e-8):
    """Find the GN constraint alpha whose maximizer yields speed ``omega``.

    Uses a bracketed root find on alpha -> omega_alpha; the bracket is checked
    for monotonicity of the sampled map.
    """
    cache = {}
    last = [None]

    def f(a):
        rep = maximize_quotient(a, p, grid, cfg, Problem.GN, seed=last[0])
        last[0] = rep.varphi
        cache[a] = rep
        return rep.wave.params.omega - omega

    hi = 2.0 * omega / p
    f_hi = f(hi)
    lo, f_lo = hi, f_hi
    while f_lo >= 0:
        lo *= 0.5
        if lo < 1e-8 * hi:
            raise NonConvergence("could not bracket the target omega")
        f_lo = f(lo)
    a = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-12, maxiter=100) \
        if f_hi != 0 else hi
    samples = sorted((k, v.wave.params.omega) for k, v in cache.items())
    om = [s[1] for s in samples]
    if any(b <= a_ for a_, b in zip(om, om[1:])):
        log.warning("alpha -> omega map not monotone on the sampled points: %s", samples)
    rep = cache.get(a) or maximize_quotient(a, p, grid, cfg, Problem.GN, seed=last[0])
    if abs(rep.wave.params.omega - omega) > tol * max(1.0, omega):
        raise NonConvergence(
            f"alpha search reached omega={rep.wave.params.omega}, target {omega}")
    return rep


# --- diagnostics ---------------------------------------------------------------

def decay_constant(w):
    """Plateau of x^2 |phi(x)| over the tail window L/4 <= |x| <= L/2."""
    f = w.phi if isinstance(w, WaveProfile) else w
    g = f.grid
    a = np.abs(np.asarray(g.x))
    u = np.abs(f.values)
    L = g.half_length
    if np.max(u[a >= L / 4]) > 0.1 * np.max(u):
        raise ValueError("tail window is not tail-dominated (|phi| at L/4 exceeds 10% of peak)")
    win = (a >= L / 4) & (a <= L / 2)
    y = a[win] ** 2 * u[win]
    lo = np.min(y)
    var = np.max(y) / lo - 1.0 if lo > 0 else np.inf
    return DecayReport(float(np.median(y)), (L / 4, L / 2), float(var), bool(var > 0.25))


def sweep_alpha(alphas, p, grid, cfg=SolverConfig()):
    """GN maximizers over increasing alphas, with monotonicity verdicts."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    table = SweepTable(p)
    seed = None
    for a in alphas:
        try:
            rep = maximize_quotient(a, p, grid, cfg, Problem.GN, seed=seed)
        except (SolverError, ValueError) as err:
            table.rows.append(SweepRow(a, status="error", message=str(err)))
            continue
        seed = rep.varphi
        table.rows.append(SweepRow(a, rep.quotient_value, rep.wave.phi.norm(),
                                   rep.wave.params.omega))
    ok = [r for r in table.rows if r.status == "ok"]
    if len(ok) >= 2:
        c = [r.quotient for r in ok]
        nrm = [r.phi_norm for r in ok]
        om = [r.omega for r in ok]
        table.verdicts = {
            "quotient_decreasing": all(b < a for a, b in zip(c, c[1:])),
            "norm_increasing": all(b > a for a, b in zip(nrm, nrm[1:])),
            "omega_increasing": all(b > a for a, b in zip(om, om[1:])),
        }
    return table
