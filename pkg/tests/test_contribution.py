"""Per-timestep contribution model and its mean-derivative."""

import numpy as np
import pytest

from diffci import (
    CIConfig,
    NormalParams,
    contribution,
    contribution_dmu,
    make_linear_schedule,
    pmf_from_ci,
    region_split,
    total_gradient_proxy,
    uniform_pmf,
)
from diffci.contribution import normal_density


@pytest.fixture(scope="module")
def sched():
    return make_linear_schedule(1000)


def fd_contribution_dmu(params, sched, t, h=1e-4):
    """Central finite difference of SNR(t) * density(t; mu, sigma) in mu."""
    up = NormalParams(params.mu + h, params.sigma)
    dn = NormalParams(params.mu - h, params.sigma)
    s = sched.snrs[t - 1]
    return s * (normal_density(up, t) - normal_density(dn, t)) / (2 * h)


class TestContribution:
    def test_uniform_pmf_scales_snr(self, sched):
        pmf = uniform_pmf(1000)
        for t in (1, 123, 1000):
            assert contribution(pmf, sched, t) == pytest.approx(
                sched.snrs[t - 1] / 1000, rel=1e-14)

    def test_ratio_to_uniform_is_probability_ratio(self, sched):
        pmf = pmf_from_ci(CIConfig(700.0, 1000.0), 1000)
        uni = uniform_pmf(1000)
        t = 900
        ratio = contribution(pmf, sched, t) / contribution(uni, sched, t)
        assert ratio == pytest.approx(pmf.probs[t - 1] / (1.0 / 1000), rel=1e-12)

    def test_zero_probability_gives_zero(self, sched):
        from diffci.timesteps import TimestepPMF
        probs = np.zeros(1000)
        probs[499] = 1.0
        pmf = TimestepPMF(1000, probs, 1.0, 0.0, None, np.cumsum(probs))
        assert contribution(pmf, sched, 10) == 0.0

    def test_rejects_mismatched_horizon(self, sched):
        with pytest.raises(ValueError):
            contribution(uniform_pmf(500), sched, 1)


class TestContributionDmu:
    def test_zero_at_mean(self, sched):
        assert contribution_dmu(NormalParams(500.0, 100.0), sched, 500) == 0.0

    def test_sign_follows_position(self, sched):
        p = NormalParams(500.0, 100.0)
        assert contribution_dmu(p, sched, 600) > 0
        assert contribution_dmu(p, sched, 400) < 0

    def test_matches_finite_differences(self, sched):
        p = NormalParams(500.0, 100.0)
        got = contribution_dmu(p, sched, 600)
        assert got == pytest.approx(fd_contribution_dmu(p, sched, 600),
                                    rel=1e-4)

    def test_finite_difference_grid(self, sched):
        # healthy density everywhere: |t - mu| <= 3.6 sigma
        sigma = 250.0
        for t in range(100, 1001, 100):
            for mu in np.linspace(100.0, 1000.0, 10):
                p = NormalParams(float(mu), sigma)
                got = contribution_dmu(p, sched, t)
                want = fd_contribution_dmu(p, sched, t)
                assert got == pytest.approx(want, rel=1e-4, abs=1e-300)


class TestTotalGradientProxy:
    def test_single_step(self):
        s1 = make_linear_schedule(1, 1e-4, 1e-4)
        pmf = uniform_pmf(1)
        assert total_gradient_proxy(pmf, s1) == pytest.approx(9999.0, rel=1e-12)

    def test_uniform_sum_dominated_by_early_steps(self, sched):
        pmf = uniform_pmf(1000)
        total = total_gradient_proxy(pmf, sched)
        assert total == pytest.approx(float(np.sum(sched.snrs)) / 1000,
                                      rel=1e-12)
        first_decile = float(np.sum(sched.snrs[:100])) / 1000
        assert first_decile > 0.5 * total

    def test_linear_in_probabilities(self, sched):
        from diffci.timesteps import TimestepPMF
        pmf = uniform_pmf(1000)
        probs = pmf.probs.copy()
        t0, dp = 250, 1e-3
        probs[t0 - 1] += dp  # deliberately unnormalized
        bumped = TimestepPMF(1000, probs, 0.0, 1.0, None, np.cumsum(probs))
        delta = total_gradient_proxy(bumped, sched) - total_gradient_proxy(pmf, sched)
        assert delta == pytest.approx(sched.snrs[t0 - 1] * dp, rel=1e-9)

    def test_left_shifted_interval_has_larger_proxy(self, sched):
        left = pmf_from_ci(CIConfig(200.0, 400.0), 1000)
        right = pmf_from_ci(CIConfig(300.0, 500.0), 1000)
        assert total_gradient_proxy(left, sched) > total_gradient_proxy(right, sched)


class TestRegionSplit:
    def test_tau_below_min_snr(self, sched):
        prof = region_split(uniform_pmf(1000), sched, tau=1e-9)
        assert prof.low_region_mass == 0.0

    def test_tau_above_max_snr(self, sched):
        prof = region_split(uniform_pmf(1000), sched, tau=1e6)
        assert prof.high_region_mass == 0.0

    def test_partition_matches_brute_force(self, sched):
        pmf = uniform_pmf(1000)
        prof = region_split(pmf, sched, tau=1.0)
        high = sum(pmf.probs[t - 1] * sched.snrs[t - 1]
                   for t in range(1, 1001) if sched.snrs[t - 1] >= 1.0)
        low = sum(pmf.probs[t - 1] * sched.snrs[t - 1]
                  for t in range(1, 1001) if sched.snrs[t - 1] < 1.0)
        assert prof.high_region_mass == pytest.approx(high, rel=1e-12)
        assert prof.low_region_mass == pytest.approx(low, rel=1e-12)

    def test_partition_sums_to_total(self, sched):
        rng = np.random.default_rng(11)
        pmf = pmf_from_ci(CIConfig(300.0, 800.0), 1000)
        total = total_gradient_proxy(pmf, sched)
        for tau in 10.0 ** rng.uniform(-4, 4, 10):
            prof = region_split(pmf, sched, tau=float(tau))
            assert prof.high_region_mass + prof.low_region_mass == pytest.approx(
                total, rel=1e-9)
            assert prof.total == pytest.approx(total, rel=1e-12)
