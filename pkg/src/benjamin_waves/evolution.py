"""Time integration of u_t + d/dx((D-1)^2 u + omega u - |u|^(p-2) u) = 0.

The dispersive part is integrated exactly by an integrating factor and the
nonlinear flux by classical fourth-order Runge-Kutta.  The flux uses the same
Galerkin projection as the profile solver, so a converged wave is a steady
state of the discrete flow up to its solver residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .functionals import invariants, nonlinearity
from .spectral import Field

RK4_IMAGINARY_LIMIT = 2.8


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    t_final: float
    save_every: int = 1
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if int(self.save_every) != self.save_every or self.save_every < 1:
            raise ValueError(f"save_every must be a positive integer, got {self.save_every}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")

    @property
    def steps(self):
        return int(round(self.t_final / self.dt))


def stable_dt(u, params):
    """Largest dt for which RK4 keeps the linearized flux on its stability region."""
    g = u.grid
    speed = (params.p - 1.0) * float(np.max(np.abs(u.values))) ** (params.p - 2.0)
    if speed == 0:
        return np.inf
    return RK4_IMAGINARY_LIMIT / (g.xi_max * speed)


class Stepper:
    """One integrating-factor RK4 step on rfft coefficients.

    With a ``base`` field the unknown is the deviation ``u - base``: the flow is
    the same, but the stepper then preserves ``base`` to within its own
    residual when ``base`` is a steady wave.  ``dt`` may be negative, which runs
    the flow backwards.
    """

    def __init__(self, grid, params, dt, nonlinear=True, base=None):
        self.grid = grid
        self.params = params
        self.dt = float(dt)
        self.nonlinear = nonlinear
        xi = grid.rmodes
        self._ik = 1j * xi
        self._ik[-1] = 0.0
        self._lin = -self._ik * ((xi - 1.0) ** 2 + params.omega)
        self._half = np.exp(0.5 * self.dt * self._lin)
        self._full = self._half**2
        self.base = None if base is None else np.asarray(base, dtype=float)
        self._base_hat = None if base is None else np.fft.rfft(self.base)

    def flux(self, uhat):
        if not self.nonlinear:
            return np.zeros_like(uhat)
        u = np.fft.irfft(uhat, n=self.grid.n)
        if self.base is None:
            return self.dt * self._ik * np.fft.rfft(nonlinearity(u, self.grid, self.params.p))
        nl = np.fft.rfft(nonlinearity(self.base + u, self.grid, self.params.p))
        return self.dt * (self._ik * nl + self._lin * self._base_hat)

    def step(self, uhat):
        E, E2 = self._half, self._full
        a = self.flux(uhat)
        b = self.flux(E * (uhat + 0.5 * a))
        c = self.flux(E * uhat + 0.5 * b)
        d = self.flux(E2 * uhat + E * c)
        return E2 * uhat + (E2 * a + 2.0 * E * (b + c) + d) / 6.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    frames: np.ndarray
    grid: object
    drift: dict
    status: str

    @property
    def final(self):
        return Field(self.grid, self.frames[-1])

    def frame(self, i):
        return Field(self.grid, self.frames[i])


def _drift(values, grid, params):
    q = np.array([invariants(Field(grid, v), params) for v in values])
    rel = np.max(np.abs(q - q[0]), axis=0) / np.maximum(np.abs(q[0]), 1.0)
    return {"mass": float(rel[0]), "l2": float(rel[1]), "hamiltonian": float(rel[2])}


def evolve(u0, params, cfg, nonlinear=True, check_cfl=True, base=None):
    """Integrate from ``u0`` to ``cfg.t_final``; stops early on blow-up or NaN.

    ``base`` (a Field, typically a steady wave) selects deviation variables,
    see :class:`Stepper`.
    """
    g = u0.grid
    if check_cfl and nonlinear:
        bound = stable_dt(u0, params)
        if cfg.dt > cfg.cfl_safety * bound:
            raise ValueError(f"dt={cfg.dt} exceeds {cfg.cfl_safety} x stability bound {bound:.3e}")
    offset = np.zeros(g.n) if base is None else base.values
    stepper = Stepper(g, params, cfg.dt, nonlinear, None if base is None else offset)
    uhat = np.fft.rfft(u0.values - offset)
    sup0 = max(float(np.max(np.abs(u0.values))), np.finfo(float).tiny)
    times, frames = [0.0], [u0.values.copy()]
    status = "ok"
    for k in range(1, cfg.steps + 1):
        uhat = stepper.step(uhat)
        if k % cfg.save_every and k != cfg.steps:
            continue
        u = offset + np.fft.irfft(uhat, n=g.n)
        if not np.all(np.isfinite(u)):
            status = "nan"
            break
        times.append(k * cfg.dt)
        frames.append(u)
        if np.max(np.abs(u)) > 1e6 * sup0:
            status = "blowup"
            break
    frames = np.array(frames)
    return Trajectory(np.array(times), frames, g, _drift(frames, g, params), status)


# --- perturbed waves ----------------------------------------------------------

@dataclass(frozen=True)
class SeededNoise:
    seed: int
    amplitude: float


@dataclass(frozen=True, eq=False)
class EigenDirection:
    """Eigenvector of d/dx L+ for a real eigenvalue ``lambda > 0``.

    The flow linearizes to ``v_t = -d/dx L+ v``, so the growing direction is
    the eigenvector for ``-lambda``; for an even wave that is the reflection
    x -> -x of ``vector``, which :func:`perturbation_experiment` applies.
    """

    amplitude: float
    vector: np.ndarray
    eigenvalue: float | None = None


def band_limited_noise(grid, seed):
    """Unit-L2 random field with modes |xi| <= xi_max / 4."""
    rng = np.random.default_rng(seed)
    nr = grid.n // 2 + 1
    coef = rng.standard_normal(nr) + 1j * rng.standard_normal(nr)
    coef[grid.rmodes > grid.xi_max / 4] = 0.0
    coef[0] = coef[0].real
    u = np.fft.irfft(coef, n=grid.n)
    return u / np.sqrt(np.dot(u, u) * grid.dx)


def _unit(values, grid):
    values = np.real_if_close(np.asarray(values))
    if np.iscomplexobj(values):
        values = values.real
    return values / np.sqrt(np.dot(values, values) * grid.dx)


def tracked_distance(u, phi):
    """``min_s ||u(. + s) - phi||`` and the minimizing shift."""
    g = phi.grid
    uh, ph = np.fft.rfft(u.values), np.fft.rfft(phi.values)
    corr = np.fft.irfft(uh * np.conj(ph), n=g.n)
    j = int(np.argmax(corr))
    s0 = (j if j <= g.n // 2 else j - g.n) * g.dx

    def dist(s):
        return (u.shift(s) - phi).norm()

    res = optimize.minimize_scalar(dist, bounds=(s0 - g.dx, s0 + g.dx), method="bounded",
                                   options={"xatol": 1e-10 * g.dx})
    if res.fun <= dist(s0):
        return float(res.fun), float(res.x)
    return dist(s0), s0


@dataclass(frozen=True, eq=False)
class GrowthReport:
    lambda_fit: float
    fit_window: tuple
    fit_r2: float
    reference_lambda: float | None
    void: bool
    times: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    status: str = "ok"

    @property
    def relative_error(self):
        if self.reference_lambda is None or self.void:
            return None
        return abs(self.lambda_fit - self.reference_lambda) / abs(self.reference_lambda)

    @property
    def meaningful(self):
        return not self.void and self.fit_r2 > 0.99

    def as_dict(self):
        return {"lambda_fit": self.lambda_fit, "fit_window": list(self.fit_window),
                "fit_r2": self.fit_r2, "reference_lambda": self.reference_lambda,
                "void": self.void, "no_growth": self.void, "status": self.status,
                "relative_error": self.relative_error,
                "d_initial": float(self.distances[0]), "d_max": float(np.max(self.distances))}


def perturbation_experiment(w, mode, cfg, reference_lambda=None, floor=None):
    """Evolve ``phi + eps * direction`` and fit the growth rate of the tracked distance.

    The fit uses samples with 5 d(0) <= d(t) <= 1e-3 ||phi||.  The fit is void
    (no growth, evidence of stability) when d(t) never exceeds 3 x max(d(0), floor).
    """
    phi = w.phi
    g = phi.grid
    if isinstance(mode, SeededNoise):
        direction, eps = band_limited_noise(g, mode.seed), mode.amplitude
    elif isinstance(mode, EigenDirection):
        mirror = np.roll(phi.values[::-1], 1)
        if np.linalg.norm(mirror - phi.values) > 1e-6 * np.linalg.norm(phi.values):
            raise ValueError("eigen-direction perturbations need an even wave centred at x = 0")
        v = _unit(mode.vector, g)
        direction, eps = np.roll(v[::-1], 1), mode.amplitude
        if reference_lambda is None and mode.eigenvalue is not None:
            reference_lambda = float(np.real(mode.eigenvalue))
    else:
        raise TypeError(f"unknown perturbation mode {mode!r}")
    traj = evolve(phi + Field(g, eps * direction), w.params, cfg, base=phi)
    dist = np.array([tracked_distance(traj.frame(i), phi)[0] for i in range(len(traj.times))])
    d0 = dist[0]
    if floor is None:
        floor = 10.0 * w.residual * phi.norm()
    if np.max(dist) <= 3.0 * max(d0, floor):
        return GrowthReport(0.0, (0.0, 0.0), 0.0, reference_lambda, True,
                            traj.times, dist, traj.status)
    top = 1e-3 * phi.norm()
    sel = (dist >= 5.0 * d0) & (dist <= top)
    # keep the first contiguous run so that nonlinear saturation is excluded
    idx = np.flatnonzero(sel)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        idx = idx[: breaks[0] + 1] if breaks.size else idx
    if idx.size < 3:
        return GrowthReport(float("nan"), (0.0, 0.0), 0.0, reference_lambda, False,
                            traj.times, dist, traj.status)
    t, y = traj.times[idx], np.log(dist[idx])
    fit = np.polynomial.polynomial.Polynomial.fit(t, y, 1).convert()
    resid = y - fit(t)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((y - y.mean()) ** 2))
    return GrowthReport(float(fit.coef[1]), (float(t[0]), float(t[-1])), r2, reference_lambda,
                        False, traj.times, dist, traj.status)
