import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from benjamin_waves import Field, WaveParams, make_grid
from benjamin_waves.evolution import (EigenDirection, EvolveConfig, SeededNoise, Stepper,
                                      band_limited_noise, evolve, perturbation_experiment,
                                      stable_dt, tracked_distance)
from benjamin_waves.solver import WaveProfile

GRID = make_grid(256, 20.0)
PARAMS = WaveParams(1.0, 4.0)


def packet(grid, amp=0.5, seed=0):
    u = band_limited_noise(grid, seed) * np.exp(-(np.asarray(grid.x) / 5.0) ** 2)
    return Field(grid, amp * u / np.max(np.abs(u)))


class TestConfig:
    @pytest.mark.parametrize("bad", [dict(dt=0.0), dict(t_final=-1.0), dict(save_every=0),
                                     dict(save_every=1.5), dict(cfl_safety=1.5)])
    def test_validation(self, bad):
        kw = dict(dt=0.1, t_final=1.0)
        kw.update(bad)
        with pytest.raises(ValueError):
            EvolveConfig(**kw)

    def test_steps(self):
        assert EvolveConfig(0.01, 1.0).steps == 100

    def test_dt_above_bound_is_rejected(self):
        u0 = packet(GRID)
        bound = stable_dt(u0, PARAMS)
        with pytest.raises(ValueError):
            evolve(u0, PARAMS, EvolveConfig(0.9 * bound, 1.0))


def test_zero_stays_zero():
    traj = evolve(Field.zeros(GRID), PARAMS, EvolveConfig(0.01, 1.0, save_every=10))
    assert np.all(traj.frames == 0.0)
    assert traj.status == "ok"
    assert len(traj.times) == 11


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_mass_is_conserved(seed):
    u0 = packet(GRID, 0.4, seed)
    dt = 0.4 * stable_dt(u0, PARAMS)
    traj = evolve(u0, PARAMS, EvolveConfig(dt, 50 * dt, save_every=10))
    mass = traj.frames.sum(axis=1) * GRID.dx
    assert np.max(np.abs(mass - mass[0])) < 1e-12


def test_linear_flow_reverses():
    u0 = packet(GRID)
    uh = np.fft.rfft(u0.values)
    fwd = Stepper(GRID, PARAMS, 0.05, nonlinear=False)
    back = Stepper(GRID, PARAMS, -0.05, nonlinear=False)
    v = uh
    for _ in range(20):
        v = fwd.step(v)
    for _ in range(20):
        v = back.step(v)
    assert np.linalg.norm(np.fft.irfft(v, n=GRID.n) - u0.values) < 1e-10


def test_invariants_are_conserved():
    u0 = packet(GRID, 0.5)
    traj = evolve(u0, PARAMS, EvolveConfig(5e-4, 1.0, save_every=100))
    assert max(traj.drift.values()) < 1e-8


def test_fourth_order_in_time():
    u0 = packet(GRID, 0.5)
    T = 0.25

    def final(dt):
        return evolve(u0, PARAMS, EvolveConfig(dt, T, save_every=10**6)).final.values

    # larger steps are pre-asymptotic on this grid (xi_max * dt is not small)
    ref = final(1 / 32000)
    err = [np.linalg.norm(final(dt) - ref) for dt in (1 / 2000, 1 / 4000, 1 / 8000)]
    ratios = [a / b for a, b in zip(err, err[1:])]
    assert all(12 <= r <= 20 for r in ratios), ratios


def test_blowup_is_detected():
    u0 = packet(GRID, 2.0)
    traj = evolve(u0, PARAMS, EvolveConfig(0.5, 50.0), check_cfl=False)
    assert traj.status in ("blowup", "nan")
    assert traj.times[-1] < 50.0


class TestNoise:
    def test_unit_and_band_limited(self):
        u = band_limited_noise(GRID, 3)
        assert np.sqrt(np.dot(u, u) * GRID.dx) == pytest.approx(1.0, rel=1e-12)
        c = np.fft.rfft(u)
        assert np.max(np.abs(c[GRID.rmodes > GRID.xi_max / 4])) < 1e-12

    def test_seeded(self):
        assert np.array_equal(band_limited_noise(GRID, 5), band_limited_noise(GRID, 5))
        assert not np.array_equal(band_limited_noise(GRID, 5), band_limited_noise(GRID, 6))


def test_tracked_distance_recovers_shift():
    phi = Field(GRID, np.exp(-np.asarray(GRID.x) ** 2))
    d, s = tracked_distance(phi.shift(0.3), phi)
    assert d < 1e-8
    assert s == pytest.approx(-0.3, abs=1e-8)


class TestSteadyWave:
    @pytest.mark.slow
    def test_plain_flow_keeps_wave(self, wave_1_3):
        cfg = EvolveConfig(0.005, 10.0, save_every=500)
        traj = evolve(wave_1_3.phi, wave_1_3.params, cfg)
        phi = wave_1_3.phi.values
        dev = np.max(np.linalg.norm(traj.frames - phi, axis=1)) / np.linalg.norm(phi)
        assert dev < 1e-4

    def test_zero_amplitude_is_void(self, wave_1_3):
        cfg = EvolveConfig(0.02, 2.0, save_every=10)
        rep = perturbation_experiment(wave_1_3, SeededNoise(1, 0.0), cfg)
        assert rep.void
        assert not rep.meaningful
        assert np.max(rep.distances) < 1e-8 * wave_1_3.phi.norm()

    def test_eigen_direction_needs_even_wave(self, wave_1_3):
        w = wave_1_3
        shifted = WaveProfile(w.phi.shift(1.0), w.params, w.residual, w.iterations, w.route)
        mode = EigenDirection(1e-4, np.ones(w.grid.n))
        with pytest.raises(ValueError):
            perturbation_experiment(shifted, mode, EvolveConfig(0.01, 0.1))

    def test_unknown_mode(self, wave_1_3):
        with pytest.raises(TypeError):
            perturbation_experiment(wave_1_3, "noise", EvolveConfig(0.01, 0.1))
