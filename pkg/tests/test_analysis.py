import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.special import comb
from scipy.stats import norm

from hcmlink import analysis
from hcmlink.analysis import (
    achievable_snr,
    clipping_variance_discrete,
    clipping_variance_gaussian,
    dcr_amplitude_pmf,
    dcr_energy_efficiency,
    dcr_energy_efficiency_exact,
    extended_binomial,
    hcm_amplitude_pmf,
    hcm_analytical_ber,
    hcm_peak_snr,
    hcm_snr,
    qfunc,
)
from hcmlink.errors import DomainError
from hcmlink.modem_hcm import encode_levels


class TestExtendedBinomial:
    def test_binary_reduces_to_binomial_row(self):
        assert extended_binomial(2, 5) == [1, 5, 10, 10, 5, 1]

    def test_ternary_square(self):
        assert extended_binomial(3, 2) == [1, 2, 3, 2, 1]

    def test_row_sums_to_m_power_n(self):
        assert sum(extended_binomial(3, 4)) == 81
        assert sum(extended_binomial(16, 8)) == 16**8

    def test_rows_are_symmetric(self):
        for m, n in ((2, 9), (4, 5), (16, 3)):
            row = extended_binomial(m, n)
            assert row == row[::-1]
            assert len(row) == n * (m - 1) + 1

    def test_matches_exact_binomial_up_to_64(self):
        for n in (1, 7, 32, 64):
            want = [int(comb(n, k, exact=True)) for k in range(n + 1)]
            assert extended_binomial(2, n) == want

    def test_domain(self):
        with pytest.raises(DomainError):
            extended_binomial(1, 4)


class TestAmplitudePmf:
    def test_binary_small_order(self):
        # with u[0] pinned, each chip is a sum of n-1 fair binary terms
        pmf = hcm_amplitude_pmf(4, 2)
        assert pmf.support.tolist() == [0, 1, 2, 3]
        assert_allclose(pmf.probs, np.array([1, 3, 3, 1]) / 8)

    def test_probs_sum_to_one_and_mean(self):
        for n, m in ((8, 2), (32, 4), (16, 16)):
            pmf = hcm_amplitude_pmf(n, m)
            assert pmf.probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert pmf.mean() == pytest.approx((n - 1) / 2, rel=1e-12)

    def test_matches_exhaustive_chip_histogram(self):
        # enumerate all 2^7 binary frames of order 8 and histogram the chips
        import itertools

        frames = np.zeros((128, 8))
        for i, bits in enumerate(itertools.product([0.0, 1.0], repeat=7)):
            frames[i, 1:] = bits
        chips = encode_levels(frames).astype(int).reshape(-1)
        hist = np.bincount(chips, minlength=8) / chips.size
        pmf = hcm_amplitude_pmf(8, 2)
        assert_allclose(hist[: pmf.probs.size], pmf.probs, atol=1e-12)

    def test_monte_carlo_tv_distance_n128(self):
        rng = np.random.default_rng(0)
        pmf = hcm_amplitude_pmf(128, 2)
        levels = np.zeros((8192, 128))
        levels[:, 1:] = rng.integers(0, 2, size=(8192, 127))
        chips = encode_levels(levels).astype(int).reshape(-1)
        hist = np.bincount(chips, minlength=pmf.probs.size) / chips.size
        tv = 0.5 * np.abs(hist[: pmf.probs.size] - pmf.probs).sum()
        assert tv < 0.02  # ~1e6 chips

    def test_dcr_pmf_is_shifted_down(self):
        rng = np.random.default_rng(1)
        plain = hcm_amplitude_pmf(64, 2)
        reduced = dcr_amplitude_pmf(64, 2, 4000, rng)
        assert reduced.probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert reduced.mean() < plain.mean()
        assert reduced.support[0] == 0.0


class TestClippingVarianceDiscrete:
    def test_no_clipping_when_peak_within_limiter(self):
        pmf = hcm_amplitude_pmf(16, 2)
        assert clipping_variance_discrete(pmf, 1.0, 16, 1.0) == 0.0

    def test_hand_evaluated_four_term_sum(self):
        # n=4, m=2, p=1.5, p_max=1: chip amplitudes k*p/4 for k=0..3 with
        # probabilities [1,3,3,1]/8; only k=3 exceeds the limiter:
        # (3*1.5/4 - 1)^2 * 1/8 = 0.125^2 / 8 = 0.001953125
        pmf = hcm_amplitude_pmf(4, 2)
        got = clipping_variance_discrete(pmf, 1.5, 4, 1.0)
        assert got == pytest.approx(0.001953125, rel=1e-12)

    def test_non_increasing_in_p_max_and_vanishes(self):
        pmf = hcm_amplitude_pmf(32, 2)
        p = 2.0
        caps = np.linspace(0.2, 2.1, 12)
        vals = [clipping_variance_discrete(pmf, p, 32, c) for c in caps]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 0.0  # cap above the maximum amplitude

    def test_matches_monte_carlo_distortion(self):
        rng = np.random.default_rng(2)
        n, p, p_max = 128, 2.0, 1.0
        pmf = hcm_amplitude_pmf(n, 2)
        want = clipping_variance_discrete(pmf, p, n, p_max)
        levels = np.zeros((20_000, n))
        levels[:, 1:] = rng.integers(0, 2, size=(20_000, n - 1))
        amps = encode_levels(levels) * (p / n)
        got = np.mean(np.minimum(amps - p_max, 0.0) ** 2 + np.maximum(amps - p_max, 0.0) ** 2) \
            - np.mean(np.minimum(amps - p_max, 0.0) ** 2)
        got = np.mean(np.maximum(amps - p_max, 0.0) ** 2)
        assert got == pytest.approx(want, rel=0.05)


class TestClippingVarianceGaussian:
    def test_half_gaussian_second_moment(self):
        # zero mean, unit variance, no upper cap: the lower clip removes
        # exactly half of the second moment
        assert clipping_variance_gaussian(0.0, 1.0, np.inf) == pytest.approx(0.5, rel=1e-12)

    def test_symmetric_caps_split_evenly(self):
        v = clipping_variance_gaussian(1.0, 0.3, 2.0)
        lower = analysis._lower_tail_var(1.0, math.sqrt(0.3), 0.0)
        upper = analysis._upper_tail_var(1.0, math.sqrt(0.3), 2.0)
        assert lower == pytest.approx(upper, rel=1e-12)
        assert v == pytest.approx(lower + upper, rel=1e-12)

    @pytest.mark.parametrize(
        "mean,var,p_max", [(0.2, 1.3, 1.7), (-0.5, 0.04, 0.5), (2.0, 4.0, 2.5)]
    )
    def test_matches_adaptive_quadrature(self, mean, var, p_max):
        std = math.sqrt(var)

        def pdf(x):
            return norm.pdf(x, mean, std)

        lower, _ = quad(lambda x: x * x * pdf(x), -np.inf, 0.0)
        upper, _ = quad(lambda x: (x - p_max) ** 2 * pdf(x), p_max, np.inf)
        want = lower + upper
        assert clipping_variance_gaussian(mean, var, p_max) == pytest.approx(want, rel=1e-8)


class TestAnalyticalBer:
    def test_qfunc_at_three(self):
        assert qfunc(3.0) == pytest.approx(1.3499e-3, rel=1e-4)

    def test_binary_form_and_q_argument(self):
        # pick (p, sigma) so the decision Q-argument is exactly 3
        n, gamma = 128, 1.21
        sigma2 = 1e-12
        p = 3.0 * 2.0 * math.sqrt(n * gamma * sigma2)
        assert hcm_snr(2, n, p, sigma2, 0.0, gamma) == pytest.approx(9.0, rel=1e-12)
        assert hcm_analytical_ber(2, n, p, sigma2, 0.0, gamma) == pytest.approx(
            float(qfunc(3.0)), rel=1e-12
        )

    def test_peak_snr_is_four_times_decision_snr(self):
        assert hcm_peak_snr(2, 64, 1.0, 1e-10, 0.0) == pytest.approx(
            4 * hcm_snr(2, 64, 1.0, 1e-10, 0.0)
        )

    def test_monotonicity(self):
        powers = np.linspace(1e-5, 1e-4, 20)
        bers = [hcm_analytical_ber(2, 128, p, 4e-12, 0.0) for p in powers]
        assert all(a > b for a, b in zip(bers, bers[1:]))
        clips = np.linspace(0.0, 1e-11, 10)
        bers = [hcm_analytical_ber(2, 128, 5e-5, 4e-12, c) for c in clips]
        assert all(a < b for a, b in zip(bers, bers[1:]))

    def test_ber_approaches_half_at_zero_snr(self):
        ber = hcm_analytical_ber(2, 128, 1e-9, 4e-12, 0.0)
        assert ber <= 0.5
        assert ber == pytest.approx(0.5, rel=1e-3)


class TestEnergyEfficiency:
    def test_exhaustive_n8_exact_value(self):
        assert dcr_energy_efficiency_exact(8, 2) == pytest.approx(1.75, rel=1e-12)

    def test_monte_carlo_agrees_with_exhaustive(self):
        rng = np.random.default_rng(3)
        eta = dcr_energy_efficiency(8, 2, 100_000, rng)
        assert eta == pytest.approx(1.75, rel=0.01)

    def test_degenerate_order_two(self):
        # both binary frames at n=2 contain a zero chip, so eta = 1 exactly
        assert dcr_energy_efficiency_exact(2, 2) == pytest.approx(1.0)
        # with more levels the minimum is usually positive
        assert dcr_energy_efficiency_exact(2, 4) > 1.0

    def test_trials_precondition(self):
        with pytest.raises(DomainError):
            dcr_energy_efficiency(8, 2, 100, np.random.default_rng(0))


class TestAchievableSnr:
    def test_no_clip_regime_peaks_at_grid_boundary(self):
        # cap the scan at half the limiter: clipping never engages and the
        # SNR is monotone in power, so the optimum sits on the boundary
        res = achievable_snr("hcm", 1e-4, 4e-12, n=64, m=2)
        grid_capped = np.geomspace(1e-6, 5e-5, 50)
        pmf = hcm_amplitude_pmf(64, 2)
        snrs = [
            hcm_peak_snr(2, 64, analysis.hcm_drive_peak(a, 64), 4e-12,
                         clipping_variance_discrete(pmf, analysis.hcm_drive_peak(a, 64), 64, 1e-4))
            for a in grid_capped
        ]
        assert int(np.argmax(snrs)) == len(grid_capped) - 1
        assert res.max_snr >= snrs[-1]  # the full scan may clip a little and do better

    def test_dcr_dominates_hcm(self):
        s2 = (0.5e-6) ** 2
        hcm = achievable_snr("hcm", 1e-4, s2, n=64, m=2)
        dcr = achievable_snr("dcr-hcm", 1e-4, s2, n=64, m=2,
                             rng=np.random.default_rng(4))
        assert dcr.max_snr >= hcm.max_snr

    def test_grid_scan_close_to_fine_scan(self):
        s2 = (0.5e-6) ** 2
        coarse = achievable_snr("aco-ofdm", 1e-4, s2, n=128, m=16, grid_points=200)
        fine = achievable_snr("aco-ofdm", 1e-4, s2, n=128, m=16, grid_points=2000)
        assert coarse.max_snr == pytest.approx(fine.max_snr, rel=0.01)
        # optimum within one coarse grid step of the refined optimum
        step = np.log(1e2) / 199  # log spacing of the coarse grid
        assert abs(np.log(coarse.best_avg_power) - np.log(fine.best_avg_power)) <= step

    def test_unknown_scheme(self):
        with pytest.raises(DomainError):
            achievable_snr("qam", 1e-4, 1e-12)
