import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpjam import dsp
from cpjam.channel import (
    ChannelRealization,
    LinkNoise,
    PathlossParams,
    apply_channel,
    awgn,
    cfr_from_taps,
    dbm_to_watts,
    draw_rayleigh_taps,
    exponential_pdp,
    pathloss_db,
    watts_to_dbm,
)


class TestPathloss:
    @pytest.mark.parametrize(
        "d, expected",
        [
            (1000, 66 + 20 * math.log10(2) + 28),  # 100.0206
            (100, 44 + 20 * math.log10(2) + 28),  # 78.0206
        ],
    )
    def test_values(self, d, expected):
        assert pathloss_db(d, PathlossParams(2.0, 4.0), 0.0) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(100.0206 if d == 1000 else 78.0206, abs=1e-4)

    def test_shadow_is_additive(self):
        p = PathlossParams()
        assert pathloss_db(500, p, 3.5) - pathloss_db(500, p, 0.0) == pytest.approx(3.5)

    def test_monotone_and_deterministic(self):
        p = PathlossParams()
        d = np.linspace(1, 5000, 200)
        pl = [pathloss_db(x, p, 1.0) for x in d]
        assert all(a < b for a, b in zip(pl, pl[1:]))
        assert pathloss_db(123.0, p, -2.0) == pathloss_db(123.0, p, -2.0)

    @pytest.mark.parametrize("d", [0, -1])
    def test_nonpositive_distance(self, d):
        with pytest.raises(ValueError):
            pathloss_db(d, PathlossParams(), 0.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            PathlossParams(fc_ghz=0)
        with pytest.raises(ValueError):
            PathlossParams(shadow_sigma_db=-1)


class TestTaps:
    def test_profile_ratio(self):
        p = exponential_pdp(32, 20.0)
        assert p[31] / p[0] == pytest.approx(0.01, rel=1e-12)
        assert p.sum() == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_array_equal(exponential_pdp(1, 20.0), [1.0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            draw_rayleigh_taps(0, 20.0, np.random.default_rng(0))

    def test_single_tap_unit_power(self):
        rng = np.random.default_rng(11)
        h = np.array([draw_rayleigh_taps(1, 20.0, rng)[0] for _ in range(100_000)])
        assert 0.99 <= np.mean(np.abs(h) ** 2) <= 1.01

    @pytest.mark.parametrize("cir_len", [2, 8, 32, 64])
    def test_total_power_normalized(self, cir_len):
        rng = np.random.default_rng(cir_len)
        e = [np.sum(np.abs(draw_rayleigh_taps(cir_len, 20.0, rng)) ** 2) for _ in range(100_000)]
        assert 0.99 <= np.mean(e) <= 1.01

    def test_per_tap_variances_follow_profile(self):
        rng = np.random.default_rng(2)
        h = np.array([draw_rayleigh_taps(8, 20.0, rng) for _ in range(40_000)])
        np.testing.assert_allclose(np.mean(np.abs(h) ** 2, axis=0), exponential_pdp(8, 20.0), rtol=0.05)
        # circular symmetry of the first tap
        assert np.var(h[:, 0].real) / np.var(h[:, 0].imag) == pytest.approx(1.0, abs=0.04)

    def test_realization_validation(self):
        with pytest.raises(ValueError):
            ChannelRealization(np.array([]), 1.0)
        with pytest.raises(ValueError):
            ChannelRealization(np.array([1.0]), 0.0)


class TestApplyChannel:
    def test_unit_tap_identity(self):
        x = np.random.default_rng(0).standard_normal(20) + 0j
        np.testing.assert_array_equal(apply_channel(x, ChannelRealization(np.array([1.0]))), x)

    def test_impulse_response(self):
        taps = np.array([0.5, -0.2j, 0.1])
        ch = ChannelRealization(taps, 0.3)
        y = apply_channel(np.array([1.0, 0, 0, 0]), ch)
        assert len(y) == 4 + 3 - 1
        np.testing.assert_allclose(y[:3], 0.3 * taps, atol=1e-16)
        np.testing.assert_allclose(y[3:], 0, atol=1e-16)

    def test_batched_matches_rows(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((3, 10)) + 1j * rng.standard_normal((3, 10))
        ch = ChannelRealization(draw_rayleigh_taps(4, 20.0, rng), 0.7)
        y = apply_channel(x, ch)
        for row_x, row_y in zip(x, y):
            np.testing.assert_allclose(row_y, apply_channel(row_x, ch), atol=1e-14)

    def test_energy_scales_with_amp_squared(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        amp = 0.01
        ratios = [
            np.sum(np.abs(apply_channel(x, ChannelRealization(draw_rayleigh_taps(8, 20.0, rng), amp))) ** 2)
            for _ in range(10_000)
        ]
        assert np.mean(ratios) / (amp**2 * np.sum(np.abs(x) ** 2)) == pytest.approx(1.0, rel=0.05)


class TestAwgn:
    def test_zero_power_bit_exact(self):
        x = np.random.default_rng(0).standard_normal(50) + 1j
        np.testing.assert_array_equal(awgn(x, 0.0, np.random.default_rng(1)), x)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            awgn(np.zeros(3), -1.0, np.random.default_rng(0))

    def test_statistics(self):
        n = awgn(np.zeros(1_000_000), 2.0, np.random.default_rng(7))
        assert 1.99 <= np.mean(np.abs(n) ** 2) <= 2.01
        assert 0.98 <= np.var(n.real) / np.var(n.imag) <= 1.02
        assert abs(np.mean(n)) < 3 / math.sqrt(1e6) * math.sqrt(2.0)
        assert abs(np.mean(np.abs(n) ** 2) - 2.0) <= 0.01 * 2.0


class TestCfr:
    def test_unit_tap_flat(self):
        h = cfr_from_taps(ChannelRealization(np.array([1.0])), 16)
        np.testing.assert_array_equal(h, np.ones(16))

    def test_two_tap_closed_form(self):
        n = 16
        h = cfr_from_taps(ChannelRealization(np.array([1.0, 1.0])), n)
        k = np.arange(n)
        np.testing.assert_allclose(h, 1 + np.exp(-2j * np.pi * k / n), atol=1e-14)
        assert abs(h[n // 2]) < 1e-15

    def test_too_long_rejected(self):
        with pytest.raises(ValueError):
            cfr_from_taps(ChannelRealization(np.ones(9)), 8)

    @given(
        n_exp=st.integers(3, 8),
        cir_len=st.integers(1, 16),
        extra_cp=st.integers(0, 8),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_cp_turns_convolution_into_product(self, n_exp, cir_len, extra_cp, seed):
        n = 2**n_exp
        cir_len = min(cir_len, n)
        cp = min(cir_len - 1 + extra_cp, n)
        rng = np.random.default_rng(seed)
        ch = ChannelRealization(draw_rayleigh_taps(cir_len, 20.0, rng), float(rng.uniform(0.1, 2)))
        s = dsp.qpsk_modulate(rng.integers(0, 2, 2 * n))
        p = dsp.OfdmParams(n, cp)
        y = dsp.ofdm_demodulate(apply_channel(dsp.ofdm_modulate(s, p), ch)[: n + cp], p)
        expected = cfr_from_taps(ch, n) * s
        assert np.linalg.norm(y - expected) <= 1e-10 * np.linalg.norm(expected)

    def test_matches_brute_circular_convolution(self):
        rng = np.random.default_rng(9)
        n = 32
        taps = draw_rayleigh_taps(5, 20.0, rng)
        ch = ChannelRealization(taps, 1.0)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        circ = np.array([sum(taps[l] * x[(i - l) % n] for l in range(5)) for i in range(n)])
        np.testing.assert_allclose(dsp.fft(circ), cfr_from_taps(ch, n) * dsp.fft(x), atol=1e-12)


class TestUnits:
    def test_examples(self):
        assert dbm_to_watts(23) == pytest.approx(0.19953, rel=1e-4)
        assert dbm_to_watts(0) == pytest.approx(1e-3, rel=1e-15)
        assert dbm_to_watts(30) == pytest.approx(1.0, rel=1e-15)
        assert dbm_to_watts(-math.inf) == 0.0

    @given(st.floats(-200, 100))
    def test_roundtrip(self, p):
        assert watts_to_dbm(dbm_to_watts(p)) == pytest.approx(p, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("p", [0.0, -1.0])
    def test_inverse_rejects_nonpositive(self, p):
        with pytest.raises(ValueError):
            watts_to_dbm(p)

    def test_noise_power(self):
        ln = LinkNoise(-174.0, 3.84e6)
        assert ln.power_w == pytest.approx(10 ** ((-174 + 10 * math.log10(3.84e6) - 30) / 10), rel=1e-12)
        with pytest.raises(ValueError):
            LinkNoise(-174.0, 0.0)
