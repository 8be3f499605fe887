import numpy as np
import pytest

from channelgan.channels import (
    AdditiveChi2Channel,
    AwgnChannel,
    ComplexAwgnChannel,
    NonlinearQamChannel,
    SampleBatch,
)
from channelgan.errors import ConfigError
from channelgan.evaluate import (
    EvalConfig,
    compare_model,
    conditional_moments,
    density_to_csv,
    histogram,
    js_divergence,
    kl_divergence,
    marginal_density,
    wasserstein1_1d,
)
from channelgan.modulation import bpsk_source, qam16_source, qpsk_source


class TestHistogram:
    def test_single_bin_gets_all_mass(self):
        est = histogram(np.full(50, 0.2), bins=1, bounds=(0.0, 1.0))
        np.testing.assert_array_equal(est.mass, [1.0])

    def test_standard_normal_central_mass(self):
        samples = np.random.default_rng(0).standard_normal(100_000)
        est = histogram(samples, bins=100, bounds=(-5.0, 5.0))
        centers = 0.5 * (est.bin_edges[0][:-1] + est.bin_edges[0][1:])
        central = est.mass[(centers > -1.0) & (centers < 1.0)].sum()
        assert abs(central - 0.6827) < 0.01

    def test_uniform_mass_per_bin(self):
        n, bins = 100_000, 20
        samples = np.random.default_rng(1).uniform(0, 1, n)
        est = histogram(samples, bins=bins, bounds=(0.0, 1.0))
        p = 1.0 / bins
        sigma = np.sqrt(p * (1 - p) / n)
        assert np.abs(est.mass - p).max() < 4 * sigma

    def test_out_of_range_clipped_and_counted(self):
        est = histogram(np.array([-10.0, 0.5, 10.0]), bins=4, bounds=(0.0, 1.0))
        assert est.clipped_count == 2
        assert abs(est.mass.sum() - 1.0) < 1e-12
        assert est.mass[0] > 0 and est.mass[-1] > 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            histogram(np.zeros((0, 1)), bins=10, bounds=(0.0, 1.0))

    def test_2d_normalized(self):
        rng = np.random.default_rng(2)
        est = histogram(rng.normal(0, 0.5, (20_000, 2)), bins=50,
                        bounds=((-2.0, 2.0), (-2.0, 2.0)))
        assert est.mass.shape == (50, 50)
        assert abs(est.mass.sum() - 1.0) < 1e-9


class TestKl:
    def test_identical_is_zero(self):
        # the 1e-10 smoothing floor on q leaves a ~1e-9 residue, never below 0
        samples = np.random.default_rng(3).standard_normal(5000)
        p = histogram(samples, 50, (-5.0, 5.0))
        v = kl_divergence(p, p)
        assert 0.0 <= v < 1e-8

    def test_shifted_gaussians_near_analytic(self):
        # KL(N(0,1) || N(1,1)) = 1/2 in nats
        rng = np.random.default_rng(4)
        p = histogram(rng.standard_normal(100_000), 100, (-6.0, 7.0))
        q = histogram(rng.standard_normal(100_000) + 1.0, 100, (-6.0, 7.0))
        assert abs(kl_divergence(p, q) - 0.5) < 0.1

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), 2000)
            b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), 2000)
            p = histogram(a, 40, (-8.0, 8.0))
            q = histogram(b, 40, (-8.0, 8.0))
            assert kl_divergence(p, q) >= 0.0

    def test_binning_mismatch_rejected(self):
        p = histogram(np.zeros(10), 10, (-1.0, 1.0))
        q = histogram(np.zeros(10), 20, (-1.0, 1.0))
        with pytest.raises(ConfigError):
            kl_divergence(p, q)


class TestJs:
    def test_identical_is_zero(self):
        p = histogram(np.random.default_rng(6).standard_normal(5000), 50, (-5.0, 5.0))
        assert js_divergence(p, p) == 0.0

    def test_disjoint_support_is_log2(self):
        p = histogram(np.full(100, -0.5), 2, (-1.0, 1.0))
        q = histogram(np.full(100, 0.5), 2, (-1.0, 1.0))
        assert abs(js_divergence(p, q) - np.log(2.0)) < 1e-12

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(7)
        p = histogram(rng.normal(0, 1, 10_000), 60, (-6.0, 6.0))
        q = histogram(rng.normal(0.7, 1.4, 10_000), 60, (-6.0, 6.0))
        assert js_divergence(p, q) == js_divergence(q, p)

    def test_bounded_by_log2(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            p = histogram(rng.normal(rng.uniform(-2, 2), 0.3, 1000), 30, (-4.0, 4.0))
            q = histogram(rng.normal(rng.uniform(-2, 2), 0.3, 1000), 30, (-4.0, 4.0))
            v = js_divergence(p, q)
            assert 0.0 <= v <= np.log(2.0) + 1e-15


class TestWasserstein:
    def test_identical_sets_zero(self):
        a = np.random.default_rng(9).normal(0, 1, 1000)
        assert wasserstein1_1d(a, a.copy()) == 0.0

    def test_translation_exact(self):
        a = np.random.default_rng(10).uniform(-2, 2, 5000)
        c = 0.75
        assert abs(wasserstein1_1d(a, a + c) - c) < 1e-12

    def test_gaussian_scale_difference(self):
        # W1(N(0,1), N(0,2)) = (2-1) E|Z| = sqrt(2/pi)
        rng = np.random.default_rng(11)
        a = rng.standard_normal(100_000)
        b = 2.0 * rng.standard_normal(100_000)
        assert abs(wasserstein1_1d(a, b) - np.sqrt(2.0 / np.pi)) < 0.05

    def test_different_sizes_resampled(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal(40_000)
        b = rng.standard_normal(60_000) + 1.0
        assert abs(wasserstein1_1d(a, b) - 1.0) < 0.05

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            wasserstein1_1d(np.zeros(0), np.ones(5))


class TestConditionalMoments:
    def test_bpsk_awgn_ground_truth(self):
        n = 100_000
        src = bpsk_source()
        chan = AwgnChannel(1.0)
        rng = np.random.default_rng(13)
        x = src.draw(n, rng)
        batch = SampleBatch(x, chan.sample(x, rng))
        mom = conditional_moments(batch)
        for k in range(mom.conditions.shape[0]):
            target = mom.conditions[k, 0]
            assert abs(mom.means[k, 0] - target) < 0.02
            assert abs(mom.variance(k)[0] - 1.0) < 0.03

    def test_zero_noise_zero_variance(self):
        src = qpsk_source()
        chan = ComplexAwgnChannel(0.0)
        rng = np.random.default_rng(14)
        x = src.draw(1000, rng)
        mom = conditional_moments(SampleBatch(x, chan.sample(x, rng)))
        for k in range(mom.conditions.shape[0]):
            np.testing.assert_allclose(mom.covariances[k], 0.0, atol=1e-15)

    def test_law_of_total_expectation(self):
        rng = np.random.default_rng(15)
        src = qam16_source()
        chan = NonlinearQamChannel()
        x = src.draw(20_000, rng)
        y = chan.sample(x, rng)
        mom = conditional_moments(SampleBatch(x, y))
        weights = mom.counts / mom.counts.sum()
        pooled = (weights[:, None] * mom.means).sum(axis=0)
        np.testing.assert_allclose(pooled, y.mean(axis=0), atol=1e-9)

    def test_missing_condition_counted(self):
        src = bpsk_source()
        x = np.full((100, 1), 1.0)  # only one of the two symbols present
        batch = SampleBatch(x, x.copy())
        mom = conditional_moments(batch, expected_conditions=src.points)
        assert mom.missing == 1
        assert mom.conditions.shape[0] == 1


class TestMarginalDensity:
    def test_single_condition_identity(self):
        p = histogram(np.random.default_rng(16).normal(0, 1, 2000), 40, (-5.0, 5.0))
        m = marginal_density([p])
        np.testing.assert_allclose(m.mass, p.mass, atol=1e-15)

    def test_two_disjoint_unit_bins(self):
        p = histogram(np.full(10, -0.5), 2, (-1.0, 1.0))
        q = histogram(np.full(10, 0.5), 2, (-1.0, 1.0))
        m = marginal_density([p, q])
        np.testing.assert_allclose(m.mass, [0.5, 0.5], atol=1e-15)

    def test_matches_direct_mixture_construction(self):
        # oracle: histogram of the pooled equal-count samples IS the uniform
        # mixture of the per-condition histograms
        rng = np.random.default_rng(17)
        n = 100_000
        chan = AwgnChannel(1.0)
        ests, pooled = [], []
        for value in (-1.0, 1.0):
            y = chan.sample(np.full((n, 1), value), rng)
            pooled.append(y)
            ests.append(histogram(y, 100, (-6.0, 6.0)))
        m = marginal_density(ests)
        direct = histogram(np.vstack(pooled), 100, (-6.0, 6.0))
        np.testing.assert_allclose(m.mass, direct.mass, atol=1e-12)
        assert abs(m.mass.sum() - 1.0) < 1e-9

    def test_well_separated_mixture_is_bimodal(self):
        # N(-1, 0.5^2) + N(+1, 0.5^2) separation is 4 sigma: two clear modes
        rng = np.random.default_rng(17)
        n = 100_000
        chan = AwgnChannel(0.5)
        ests = []
        for value in (-1.0, 1.0):
            y = chan.sample(np.full((n, 1), value), rng)
            ests.append(histogram(y, 100, (-6.0, 6.0)))
        m = marginal_density(ests)
        centers = 0.5 * (m.bin_edges[0][:-1] + m.bin_edges[0][1:])
        neg_mode = centers[centers < 0][np.argmax(m.mass[centers < 0])]
        pos_mode = centers[centers > 0][np.argmax(m.mass[centers > 0])]
        assert abs(neg_mode + 1.0) < 0.2
        assert abs(pos_mode - 1.0) < 0.2
        trough = m.mass[np.abs(centers) < 0.3].max()
        assert trough < 0.6 * m.mass.max()

    def test_binning_mismatch_rejected(self):
        p = histogram(np.zeros(10), 10, (-1.0, 1.0))
        q = histogram(np.zeros(10), 10, (-2.0, 2.0))
        with pytest.raises(ConfigError):
            marginal_density([p, q])


class TestCompareModel:
    @pytest.mark.parametrize("src,chan", [
        (bpsk_source(), AwgnChannel(1.0)),
        (bpsk_source(), AdditiveChi2Channel(2)),
        (qpsk_source(), ComplexAwgnChannel(0.1)),
        (qam16_source(), NonlinearQamChannel()),
    ])
    def test_self_comparison_noise_floor(self, src, chan):
        cfg = EvalConfig(n_samples=100_000, seed=18)
        if isinstance(chan, AdditiveChi2Channel):
            cfg.range_1d = (-8.0, 12.0)
        report = compare_model(chan, chan, src, cfg)
        assert report.summary["marginal"]["js"] < 0.01
        for cond in report.summary["conditions"]:
            assert cond["js"] < 0.01

    def test_report_structure(self):
        src = bpsk_source()
        chan = AwgnChannel(1.0)
        report = compare_model(chan, chan, src, EvalConfig(n_samples=2000, seed=19))
        s = report.summary
        assert s["modulation"] == "bpsk"
        assert len(s["conditions"]) == 2
        cond = s["conditions"][0]
        assert set(cond) >= {"x", "true", "model", "js", "kl", "w1"}
        assert "skewness" in cond["true"]
        assert set(report.true_densities) == {"cond_0", "cond_1", "marginal"}

    def test_2d_report_has_radial_tangential(self):
        src = qam16_source()
        chan = NonlinearQamChannel()
        report = compare_model(chan, chan, src, EvalConfig(n_samples=16_000, seed=20))
        cond = report.summary["conditions"][0]
        assert "radial_std" in cond["true"] and "tangential_std" in cond["true"]
        assert cond["w1"] is None

    def test_density_csv_formats(self, tmp_path):
        src = qpsk_source()
        chan = ComplexAwgnChannel(0.1)
        report = compare_model(chan, chan, src, EvalConfig(n_samples=4000, seed=21))
        p1 = tmp_path / "marg.csv"
        density_to_csv(report.true_densities["marginal"], p1)
        lines = p1.read_text().splitlines()
        assert lines[0] == "bin_x,bin_y,mass"
        assert len(lines) == 1 + 100 * 100
