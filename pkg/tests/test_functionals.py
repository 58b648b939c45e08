import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from benjamin_waves import (Field, NoWaveRegime, PhysicalParams, WaveParams, gn_quotient,
                            instability_margin, invariants, make_grid, omega_from_alpha,
                            physical_to_normalized, pohozaev_residuals, sobolev_quotient,
                            spectral_bump)
from benjamin_waves.functionals import hamiltonian, lp_power, nonlinearity, shifted_symbol
from benjamin_waves.spectral import quadratic_form


def smooth_field(grid, seed):
    rng = np.random.default_rng(seed)
    x = grid.x
    u = sum(rng.standard_normal() * np.exp(-((x - rng.uniform(-3, 3)) / rng.uniform(0.7, 2))**2)
            for _ in range(4))
    return Field(grid, u)


class TestParams:
    def test_no_wave_at_boundary(self):
        with pytest.raises(NoWaveRegime):
            physical_to_normalized(PhysicalParams(1.0, 2.0))

    def test_unit_gamma(self):
        assert physical_to_normalized(PhysicalParams(1.0, 1.0)) == pytest.approx(3.0)

    @pytest.mark.parametrize("gamma", [0.3, 1.0, 2.5, -4.0])
    def test_half_gamma_squared_gives_unit_omega(self, gamma):
        pp = PhysicalParams(gamma**2 / 2, gamma)
        assert physical_to_normalized(pp) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("omega", [0.0, -0.5, np.nan])
    def test_wave_params_reject_nonpositive_omega(self, omega):
        with pytest.raises(NoWaveRegime):
            WaveParams(omega, 3.0)

    def test_wave_params_reject_small_p(self):
        with pytest.raises(ValueError):
            WaveParams(1.0, 2.0)


class TestQuotients:
    def test_cubic_of_cosine_vanishes(self):
        g = make_grid(64, np.pi)
        u = Field.from_function(g, np.cos)
        assert gn_quotient(u, 1.0, 3.0, signed=True) == pytest.approx(0.0, abs=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), a=st.floats(0.01, 100.0))
    def test_gn_homogeneity(self, seed, a):
        g = make_grid(128, 12.0)
        u = smooth_field(g, seed)
        for p in (3.0, 4.0, 5.5):
            assert gn_quotient(a * u, 1.0, p) == pytest.approx(gn_quotient(u, 1.0, p), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), a=st.floats(0.01, 100.0))
    def test_sobolev_homogeneity(self, seed, a):
        g = make_grid(128, 12.0)
        u = smooth_field(g, seed)
        assert sobolev_quotient(-a * u, 1.0, 4.0) == pytest.approx(
            sobolev_quotient(u, 1.0, 4.0), rel=1e-12)

    def test_zero_field_rejected(self):
        g = make_grid(32, 5.0)
        with pytest.raises(ValueError):
            gn_quotient(Field.zeros(g), 1.0, 3.0)
        with pytest.raises(ValueError):
            sobolev_quotient(Field.zeros(g), 1.0, 3.0)

    def test_gn_range(self):
        g = make_grid(32, 5.0)
        with pytest.raises(ValueError):
            gn_quotient(smooth_field(g, 1), 1.0, 8.0)

    def test_sobolev_l2_quotient_approaches_inverse_omega(self):
        g = make_grid(8192, 800 * np.pi)
        omega = 0.8
        vals = [sobolev_quotient(spectral_bump(g, eps), omega, 2.0) for eps in (0.1, 0.05, 0.025)]
        gaps = [1 / omega - v for v in vals]
        assert all(gap > 0 for gap in gaps)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.01 / omega


class TestPohozaev:
    def test_zero(self):
        r = pohozaev_residuals(Field.zeros(make_grid(32, 4.0)), WaveParams(1.0, 3.0))
        assert (r.r1, r.r2, r.relative) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
    def test_cosine_mode_arithmetic(self, omega):
        g = make_grid(64, np.pi)
        u = Field.from_function(g, np.cos)
        r = pohozaev_residuals(u, WaveParams(omega, 3.0))
        l3 = np.sum(np.abs(np.cos(np.linspace(-np.pi, np.pi, 200001)[:-1]))**3) * 2 * np.pi / 200000
        # ||u'||^2 - 2||D^(1/2)u||^2 + (omega+1)||u||^2 with each term equal to pi
        assert r.r1 == pytest.approx(np.pi - 2 * np.pi + (omega + 1) * np.pi - l3, abs=1e-8)

    def test_converged_wave(self, wave_1_3):
        assert pohozaev_residuals(wave_1_3.phi, wave_1_3.params).relative < 1e-5


class TestInvariants:
    def test_zero(self):
        assert invariants(Field.zeros(make_grid(32, 4.0)), WaveParams(1.0, 3.0)) == (0.0, 0.0, 0.0)

    def test_translation(self):
        g = make_grid(256, 20.0)
        u = smooth_field(g, 11)
        params = WaveParams(1.3, 4.0)
        a = invariants(u, params)
        b = invariants(u.shift(1.234), params)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)

    def test_wave_energy_identity(self, wave_1_3):
        _, _, H = invariants(wave_1_3.phi, wave_1_3.params)
        p = wave_1_3.params.p
        lp = lp_power(wave_1_3.phi.values, wave_1_3.grid, p)
        assert 2 * H == pytest.approx((1 - 2 / p) * lp, rel=1e-6)

    @pytest.mark.parametrize("p", [3.0, 4.0, 5.5])
    def test_gateaux_derivative_matches_flux_operand(self, p):
        g = make_grid(256, 20.0)
        u = smooth_field(g, 21).values
        h = smooth_field(g, 22).values
        params = WaveParams(0.9, p)
        s = 1e-6
        fd = (hamiltonian(u + s * h, g, params) - hamiltonian(u - s * h, g, params)) / (2 * s)
        au = np.fft.irfft((shifted_symbol(g) + params.omega) * np.fft.rfft(u), n=g.n)
        grad = au - nonlinearity(u, g, p)
        exact = float(np.sum(grad * h) * g.dx)
        assert fd == pytest.approx(exact, rel=1e-6)


class TestMargin:
    def test_ten_ten(self):
        assert instability_margin(WaveParams(10.0, 10.0)) == pytest.approx(0.3, abs=1e-14)

    @pytest.mark.parametrize("p", [2.1, 3.0, 5.0, 7.9])
    @pytest.mark.parametrize("omega", [0.01, 1.0, 1e6])
    def test_negative_below_eight(self, p, omega):
        assert instability_margin(WaveParams(omega, p)) < 0

    def test_limit_at_eight(self):
        m = instability_margin(WaveParams(1e12, 8.0))
        assert -1e-11 < m < 0


class TestOmegaFromAlpha:
    def unit_ratio_field(self):
        # modes 0 and 2 both have (|xi| - 1)^2 = 1, so ||(D-1)u|| = ||u||
        g = make_grid(64, np.pi)
        return Field.from_function(g, lambda x: 1.0 + np.cos(2 * x))

    def test_unit_ratio_field(self):
        u = self.unit_ratio_field()
        g = u.grid
        assert quadratic_form(u.values, g, shifted_symbol(g)) == pytest.approx(
            quadratic_form(u.values, g), rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.25, 1.0, 3.0])
    def test_cubic(self, alpha):
        assert omega_from_alpha(self.unit_ratio_field(), alpha, 3.0) == pytest.approx(
            alpha + (1 + alpha) / 2, rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.25, 1.0, 3.0])
    def test_quartic(self, alpha):
        assert omega_from_alpha(self.unit_ratio_field(), alpha, 4.0) == pytest.approx(
            2 * alpha + 1, rel=1e-13)

    def test_cubic_forms_agree(self):
        g = make_grid(128, 12.0)
        u = smooth_field(g, 5)
        alpha = 0.7
        l2 = quadratic_form(u.values, g)
        d1 = quadratic_form(u.values, g, shifted_symbol(g))
        general = 3 * alpha / 2 + 0.5 * d1 / l2
        assert omega_from_alpha(u, alpha, 3.0) == pytest.approx(general, rel=1e-13)
