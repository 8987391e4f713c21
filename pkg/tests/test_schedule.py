"""Schedule construction, SNR, and forward diffusion."""

import mpmath as mp
import numpy as np
import pytest

from diffci import forward_diffuse, make_linear_schedule, snr


def mp_alpha_bars(T, beta_start, beta_end, dps=50):
    """Extended-precision cumulative-product oracle."""
    mp.mp.dps = dps
    if T == 1:
        betas = [mp.mpf(beta_start)]
    else:
        b0, b1 = mp.mpf(beta_start), mp.mpf(beta_end)
        betas = [b0 + (b1 - b0) * i / (T - 1) for i in range(T)]
    out, acc = [], mp.mpf(1)
    for b in betas:
        acc *= (1 - b)
        out.append(acc)
    return out


class TestMakeLinearSchedule:
    def test_single_step(self):
        s = make_linear_schedule(1, 1e-4, 1e-4)
        assert s.betas.tolist() == [1e-4]
        assert s.alpha_bars[0] == pytest.approx(0.9999, abs=1e-15)
        assert s.snrs[0] == pytest.approx(9999.0, rel=1e-12)

    def test_two_step_constant_beta(self):
        s = make_linear_schedule(2, 0.5, 0.5)
        np.testing.assert_allclose(s.alpha_bars, [0.5, 0.25], rtol=1e-14)
        np.testing.assert_allclose(s.sigmas, [np.sqrt(0.5), np.sqrt(0.75)],
                                   rtol=1e-14)

    def test_default_against_extended_precision_oracle(self):
        s = make_linear_schedule(1000, 1e-4, 0.02)
        oracle = mp_alpha_bars(1000, 1e-4, 0.02)
        for i in (0, 1, 249, 499, 750, 999):
            ab = oracle[i]
            assert s.alpha_bars[i] == pytest.approx(float(ab), rel=1e-12)
            assert s.snrs[i] == pytest.approx(float(ab / (1 - ab)), rel=1e-10)
        assert s.snrs[0] == pytest.approx(9999.0, rel=1e-10)
        assert s.snrs[-1] < 1e-3

    def test_invariants_hold(self):
        s = make_linear_schedule(1000)
        assert np.all(np.diff(s.alpha_bars) < 0)
        assert np.all(np.diff(s.snrs) < 0)
        np.testing.assert_allclose(s.signal_coefs**2 + s.sigmas**2, 1.0,
                                   atol=1e-12)

    @pytest.mark.parametrize("T,lo,hi", [
        (0, 1e-4, 0.02),
        (10, 0.0, 0.02),
        (10, 1e-4, 1.0),
        (10, 0.02, 0.01),
        (10, float("nan"), 0.02),
        (10, 1e-4, float("inf")),
    ])
    def test_rejects_bad_arguments(self, T, lo, hi):
        with pytest.raises(ValueError):
            make_linear_schedule(T, lo, hi)

    def test_arrays_immutable(self):
        s = make_linear_schedule(10)
        with pytest.raises(ValueError):
            s.snrs[0] = 1.0


class TestSnr:
    def test_matches_precomputed_array(self):
        s = make_linear_schedule(100)
        for t in (1, 50, 100):
            assert snr(s, t) == s.snrs[t - 1]

    def test_single_step_value(self):
        assert snr(make_linear_schedule(1, 1e-4, 1e-4), 1) == pytest.approx(
            9999.0, rel=1e-12)

    def test_half_signal_gives_unit_snr(self):
        # alpha_bar = 0.5 <=> equal signal and noise power
        s = make_linear_schedule(2, 0.5, 0.5)
        assert snr(s, 1) == pytest.approx(1.0, rel=1e-14)

    def test_oracle_at_midpoint(self):
        s = make_linear_schedule(1000)
        ab = mp_alpha_bars(1000, 1e-4, 0.02)[499]
        assert snr(s, 500) == pytest.approx(float(ab / (1 - ab)), rel=1e-10)

    @pytest.mark.parametrize("t", [0, -3, 101])
    def test_rejects_out_of_range(self, t):
        with pytest.raises(ValueError):
            snr(make_linear_schedule(100), t)


class TestForwardDiffuse:
    def test_zero_noise_returns_scaled_signal(self):
        s = make_linear_schedule(10)
        x0 = np.array([1.0, -2.0, 3.0])
        out = forward_diffuse(s, x0, 5, np.zeros(3))
        np.testing.assert_allclose(out, s.signal_coefs[4] * x0)

    def test_zero_signal_returns_scaled_noise(self):
        s = make_linear_schedule(10)
        eps = np.array([0.5, -0.5])
        out = forward_diffuse(s, np.zeros(2), 7, eps)
        np.testing.assert_allclose(out, s.sigmas[6] * eps)

    def test_hand_evaluated_two_step(self):
        s = make_linear_schedule(2, 0.5, 0.5)
        out = forward_diffuse(s, np.array([1.0]), 2, np.array([1.0]))
        assert out[0] == pytest.approx(np.sqrt(0.25) + np.sqrt(0.75), rel=1e-12)
        assert out[0] == pytest.approx(1.3660254, abs=1e-7)

    def test_linear_in_signal_and_noise(self):
        s = make_linear_schedule(50)
        rng = np.random.default_rng(3)
        x0 = rng.standard_normal(8)
        eps = rng.standard_normal(8)
        for a in (0.25, -3.0, 7.5):
            np.testing.assert_allclose(
                forward_diffuse(s, a * x0, 20, a * eps),
                a * forward_diffuse(s, x0, 20, eps), atol=1e-12)

    def test_noise_variance_matches_sigma(self):
        s = make_linear_schedule(100)
        rng = np.random.default_rng(7)
        t = 60
        draws = np.array([forward_diffuse(s, np.zeros(1), t, e)[0]
                          for e in rng.standard_normal((100_000, 1))])
        assert np.var(draws) == pytest.approx(s.sigmas[t - 1] ** 2, rel=0.05)

    def test_rejects_length_mismatch(self):
        s = make_linear_schedule(10)
        with pytest.raises(ValueError):
            forward_diffuse(s, np.zeros(3), 1, np.zeros(4))
