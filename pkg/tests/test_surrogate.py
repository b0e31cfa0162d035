"""Cubic noise law, calibration, block transmission and MI estimation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chanmatch.errors import InvalidParameterError
from chanmatch.surrogate import (
    ChannelState,
    NlinParams,
    calibrate_kappa,
    effective_snr,
    mi_uniform,
    noise_variances,
    transmit,
)
from chanmatch.units import dbm_to_watt
from oracles import mi_quadrature, snr_argmax_grid

P_STAR = float(dbm_to_watt(-6.8))  # 2.0893e-4 W


class TestEffectiveSnr:
    def test_reference_point(self):
        # frozen from the calibrated full-scale chain
        params = NlinParams(4.5627e-6, 2.5015e5)
        snr = effective_snr(params, 2.0893e-4)
        assert snr == pytest.approx(30.53, abs=0.01)
        assert 10 * np.log10(snr) == pytest.approx(14.85, abs=0.01)

    def test_linear_channel_when_kappa_zero(self):
        params = NlinParams(1e-6, 0.0)
        assert effective_snr(params, 1e-4) == pytest.approx(100.0, rel=1e-12)

    def test_vanishes_at_high_power(self):
        params = NlinParams(1e-6, 1e5)
        assert effective_snr(params, 1e3) < 1e-3

    def test_rejects_nonpositive_power(self):
        with pytest.raises(InvalidParameterError):
            effective_snr(NlinParams(1e-6, 0.0), 0.0)

    @given(
        sigma2=st.floats(1e-8, 1e-4),
        kappa=st.floats(1e2, 1e8),
    )
    @settings(max_examples=50, deadline=None)
    def test_unimodal_in_power(self, sigma2, kappa):
        params = NlinParams(sigma2, kappa)
        p = np.geomspace(1e-6, 1e-1, 400)
        snr = effective_snr(params, p)
        signs = np.sign(np.diff(snr))
        changes = np.sum(np.diff(signs[signs != 0]) != 0)
        assert changes <= 1


class TestCalibrateKappa:
    def test_closed_form_value(self):
        kappa = calibrate_kappa(4.5627e-6, P_STAR)
        assert kappa == pytest.approx(2.5015e5, rel=1e-3)

    def test_linear_in_sigma2(self):
        assert calibrate_kappa(2e-6, P_STAR) == pytest.approx(
            2 * calibrate_kappa(1e-6, P_STAR), rel=1e-12
        )

    def test_grid_search_recovers_p_star(self, calibrated_params):
        p_best, grid, _ = snr_argmax_grid(calibrated_params, P_STAR / 10, P_STAR * 10)
        assert abs(10 * np.log10(p_best / P_STAR)) <= 0.01 + 1e-9

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidParameterError):
            calibrate_kappa(0.0, P_STAR)
        with pytest.raises(InvalidParameterError):
            calibrate_kappa(1e-6, -1.0)


class TestTransmit:
    def test_noiseless_limit(self, const, rng):
        params = NlinParams(0.0, 0.0)
        x = const.points[rng.integers(0, 16, 500)]
        y = transmit(x, ChannelState(P_STAR, 500), params, rng)
        assert np.array_equal(y, x)

    def test_empirical_variance_at_p_star(self, const, calibrated_params):
        rng = np.random.default_rng(11)
        n = 1_000_000
        x = const.points[rng.integers(0, 16, n)]
        y = transmit(x, ChannelState(P_STAR, n), calibrated_params, rng)
        nu = np.mean(np.abs(y - x) ** 2)
        expect = 1.0 / effective_snr(calibrated_params, P_STAR)
        assert nu == pytest.approx(expect, rel=0.005)

    def test_ring_variance_ratio_with_epsilon(self, const):
        params = NlinParams(4.5627e-6, 2.5015e5, epsilon=0.5)
        rng = np.random.default_rng(12)
        n = 400_000
        x = const.points[rng.integers(0, 16, n)]
        y = transmit(x, ChannelState(P_STAR, n), params, rng)
        e2 = np.abs(y - x) ** 2
        ring = const.ring_index[const.index_of(x)]
        ratio = e2[ring == 2].mean() / e2[ring == 0].mean()
        assert ratio == pytest.approx(7.0 / 3.0, rel=0.02)

    def test_same_seed_is_bit_reproducible(self, const, calibrated_params):
        x = const.points[np.random.default_rng(0).integers(0, 16, 256)]
        state = ChannelState(P_STAR, 256)
        y1 = transmit(x, state, calibrated_params, np.random.default_rng(42))
        y2 = transmit(x, state, calibrated_params, np.random.default_rng(42))
        assert np.array_equal(y1, y2)

    def test_isotropic_noise_when_epsilon_zero(self, const, calibrated_params):
        rng = np.random.default_rng(13)
        n = 200_000
        x = const.points[rng.integers(0, 16, n)]
        y = transmit(x, ChannelState(P_STAR, n), calibrated_params, rng)
        e = y - x
        rho = np.mean(e.real * e.imag) / np.sqrt(
            np.mean(e.real**2) * np.mean(e.imag**2)
        )
        assert abs(rho) < 3.0 / np.sqrt(n)

    def test_rejects_excessive_epsilon(self, const, rng):
        params = NlinParams(1e-6, 0.0, epsilon=1.3)  # 1 - 1.3*0.8 < 0
        x = const.points[rng.integers(0, 16, 500)]
        with pytest.raises(InvalidParameterError):
            transmit(x, ChannelState(P_STAR, 500), params, rng)

    def test_variances_follow_instantaneous_energy(self, const):
        params = NlinParams(4.5627e-6, 2.5015e5, epsilon=0.5)
        nu = noise_variances(params, P_STAR, const.points)
        base = (params.sigma2_ase + params.kappa * P_STAR**3) / P_STAR
        expect = base * (1 + 0.5 * (np.abs(const.points) ** 2 - 1))
        assert np.allclose(nu, expect, rtol=1e-12)


class TestMiUniform:
    def test_matches_quadrature_oracle_at_peak(self, const, calibrated_params):
        nu = 1.0 / effective_snr(calibrated_params, P_STAR)
        oracle = mi_quadrature(nu, const)
        est = mi_uniform(
            calibrated_params, P_STAR, 100_000, np.random.default_rng(5), const
        )
        assert est.bits == pytest.approx(oracle, abs=0.02)

    def test_high_snr_limit_is_four_bits(self, const):
        params = NlinParams(1e-12, 0.0)
        est = mi_uniform(params, 1e-3, 20_000, np.random.default_rng(6), const)
        assert est.bits == pytest.approx(4.0, abs=1e-3)

    def test_low_snr_limit_is_zero_bits(self, const):
        params = NlinParams(1.0, 0.0)
        est = mi_uniform(params, 1e-9, 20_000, np.random.default_rng(7), const)
        assert abs(est.bits) < 0.01

    def test_monotone_in_effective_snr(self, const, calibrated_params):
        p1, p2 = P_STAR, P_STAR / 4
        e1 = mi_uniform(calibrated_params, p1, 50_000, np.random.default_rng(8), const)
        e2 = mi_uniform(calibrated_params, p2, 50_000, np.random.default_rng(9), const)
        assert effective_snr(calibrated_params, p1) > effective_snr(
            calibrated_params, p2
        )
        assert e1.bits > e2.bits + 3 * (e1.std_err + e2.std_err)

    def test_rejects_small_sample_count(self, const, calibrated_params):
        with pytest.raises(InvalidParameterError):
            mi_uniform(calibrated_params, P_STAR, 100, np.random.default_rng(0), const)


class TestParamValidation:
    def test_negative_fields_rejected(self):
        for bad in ((-1e-6, 0.0, 0.0), (1e-6, -1.0, 0.0), (1e-6, 0.0, -0.1)):
            with pytest.raises(InvalidParameterError):
                NlinParams(*bad)

    def test_channel_state_validation(self):
        with pytest.raises(InvalidParameterError):
            ChannelState(0.0, 100)
        with pytest.raises(InvalidParameterError):
            ChannelState(1e-4, 0)
