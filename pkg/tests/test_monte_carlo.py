import math

import numpy as np
import pytest
from scipy import stats

from ordstat.distributions import Exponential, Gamma, Normal, RayleighPaper, Uniform
from ordstat.monte_carlo import (
    GofReport, InvalidReferenceError, McConfig, estimate_latent_mean, export_samples, goodness_of_fit,
    ks_critical, run_blocks, sample_latent,
)
from ordstat.order_engine import DensityCurve, LatentSpec
from ordstat.streams import default_seed, open_uniforms, stream

KS_1E5 = 1.63 / math.sqrt(10 ** 5)
HETERO = (Gamma(2, 1), Uniform(0, 1))


class TestConfig:
    def test_validation(self):
        spec = LatentSpec(2, 2)
        for kw in ({"trials": 0}, {"trials": 10, "bins": 1}, {"trials": 10, "column": 2}):
            with pytest.raises(ValueError):
                McConfig(spec, Normal(0, 1), **kw)
        with pytest.raises(ValueError):
            McConfig(LatentSpec(2, 2, 3, "factor"), HETERO, 10)

    def test_block_size(self):
        assert McConfig(LatentSpec(2, 2), Normal(0, 1), 10).block_size == 2 ** 18
        assert McConfig(LatentSpec(10 ** 6, 1, 4), Normal(0, 1), 10).block_size == 1
        # hetero lists are frozen into tuples
        assert isinstance(McConfig(LatentSpec(2, 2, 2, "factor"), list(HETERO), 10).parent, tuple)


class TestStreams:
    def test_distinct_indices_do_not_overlap(self):
        a = stream(5, 0).integers(0, 2 ** 63, size=5 * 10 ** 6, dtype=np.int64)
        b = stream(5, 1).integers(0, 2 ** 63, size=5 * 10 ** 6, dtype=np.int64)
        assert np.intersect1d(a, b).size == 0

    def test_replay(self):
        np.testing.assert_array_equal(stream(3, 7).random(100), stream(3, 7).random(100))
        assert not np.array_equal(stream(3, 7).random(100), stream(4, 7).random(100))

    def test_open_uniforms(self):
        u = open_uniforms(stream(0), 10 ** 6)
        assert u.min() > 0 and u.max() < 1

    def test_default_seed(self, monkeypatch):
        monkeypatch.setenv("ORDSTAT_SEED", "99")
        assert default_seed() == 99
        monkeypatch.delenv("ORDSTAT_SEED")
        assert default_seed(7) == 7

    def test_negative_index(self):
        with pytest.raises(ValueError):
            stream(0, -1)


class TestSampleLatent:
    @pytest.mark.parametrize("parent", [Uniform(0, 1), Normal(0, 1), Exponential(1.0), RayleighPaper(1.0)],
                             ids=repr)
    def test_single_row_is_parent(self, parent):
        for m in (1, 3):
            s = sample_latent(McConfig(LatentSpec(1, 1, m), parent, 10 ** 5, seed=1))
            assert stats.kstest(s, parent.cdf).statistic < KS_1E5

    def test_normal_factor_identity(self):
        s = sample_latent(McConfig(LatentSpec(2, 2, 2, "factor"), Normal(0, 1), 10 ** 6, seed=2))
        rep = goodness_of_fit(s, Normal(0, 1))
        assert rep.chi2_per_dof < 1.5

    def test_deterministic(self):
        cfg = McConfig(LatentSpec(5, 3, 2, "addend"), Exponential(1.0), 3 * 10 ** 5, seed=42)
        a, b = sample_latent(cfg, workers=1), sample_latent(cfg, workers=8)
        assert a.tobytes() == b.tobytes()
        assert a.tobytes() == sample_latent(cfg).tobytes()
        other = sample_latent(McConfig(cfg.spec, cfg.parent, cfg.trials, seed=43), workers=1)
        assert a.tobytes() != other.tobytes()

    def test_matches_sort_then_index(self):
        # selection reproduces the explicit sort of the appended aggregate column
        cfg = McConfig(LatentSpec(6, 4, 3, "factor"), Normal(0, 1), 500, seed=8)
        s = sample_latent(cfg, workers=1)
        mat = Normal(0, 1).draw(stream(8, 0), (500, 6, 3))
        agg = mat.prod(axis=2)
        rows = np.argsort(agg, axis=1, kind="stable")[:, 3]
        np.testing.assert_array_equal(s, mat[np.arange(500), rows, 0])

    def test_ties_break_by_row(self):
        # a two-point parent makes ties certain
        class Coin(Uniform):
            def draw(self, rng, size=None):
                return rng.integers(0, 2, size=size).astype(float)

        cfg = McConfig(LatentSpec(4, 2, 1), Coin(0, 1), 1000, seed=4)
        s = sample_latent(cfg, workers=1)
        mat = cfg.parent.draw(stream(4, 0), (1000, 4, 1))
        rows = np.argsort(mat[:, :, 0], axis=1, kind="stable")[:, 1]
        np.testing.assert_array_equal(s, mat[np.arange(1000), rows, 0])

    def test_exchangeable_columns(self):
        spec = LatentSpec(3, 2, 2, "addend")
        a = sample_latent(McConfig(spec, RayleighPaper(1.0), 10 ** 5, seed=5, column=0))
        b = sample_latent(McConfig(spec, RayleighPaper(1.0), 10 ** 5, seed=6, column=1))
        assert stats.ks_2samp(a, b).statistic < 0.00729

    def test_rank_sweep(self):
        n = 4
        pooled = np.concatenate([
            sample_latent(McConfig(LatentSpec(n, k, 2, "factor"), Exponential(1.0), 25000, seed=10 + k))
            for k in range(1, n + 1)
        ])
        assert stats.kstest(pooled, Exponential(1.0).cdf).statistic < KS_1E5

    def test_hetero_columns(self):
        spec = LatentSpec(1, 1, 2, "factor")
        pops = sample_latent(McConfig(spec, HETERO, 10 ** 5, seed=12, column=1))
        assert stats.kstest(pops, "uniform").statistic < KS_1E5


class TestGoodnessOfFit:
    def test_correct_reference(self):
        s = Exponential(1.0).draw(stream(20), 10 ** 5)
        rep = goodness_of_fit(s, Exponential(1.0))
        assert isinstance(rep, GofReport)
        assert rep.ks_distance < KS_1E5
        # the reference cdf is interpolated between quadrature cells, good to about 1e-7
        np.testing.assert_allclose(rep.ks_distance, stats.kstest(s, "expon").statistic, atol=1e-6)
        assert rep.sample_count == 10 ** 5
        np.testing.assert_allclose(rep.sample_mean, s.mean(), rtol=1e-14)

    def test_wrong_reference(self):
        s = Exponential(1.0).draw(stream(21), 10 ** 5)
        assert goodness_of_fit(s, Normal(0, 1)).ks_distance > 0.3

    def test_equal_probability_bins(self):
        s = Normal(0, 1).draw(stream(22), 10 ** 5)
        rep = goodness_of_fit(s, Normal(0, 1), bins=50)
        counts = np.histogram(stats.norm.cdf(s), bins=np.linspace(0, 1, 51))[0]
        e = len(s) / 50
        # a sample within ~1e-7 of a bin edge may land on either side
        np.testing.assert_allclose(rep.chi2_per_dof, np.sum((counts - e) ** 2 / e) / 49, rtol=5e-3)
        np.testing.assert_allclose(rep.l1_distance, np.sum(np.abs(counts / len(s) - 1 / 50)), atol=1e-4)

    def test_reference_kinds(self):
        s = Uniform(0, 1).draw(stream(23), 10 ** 4)
        x = np.linspace(0, 1, 101)
        curve = DensityCurve(x, np.ones_like(x), "analytic", 0.0)
        a = goodness_of_fit(s, Uniform(0, 1)).ks_distance
        b = goodness_of_fit(s, curve).ks_distance
        c = goodness_of_fit(s, lambda v: ((v >= 0) & (v <= 1)).astype(float), support=(0, 1)).ks_distance
        np.testing.assert_allclose([b, c], [a, a], atol=1e-9)

    def test_invalid_reference(self):
        s = Normal(0, 1).draw(stream(24), 2000)
        with pytest.raises(InvalidReferenceError):
            goodness_of_fit(s, lambda v: 2 * stats.norm.pdf(v))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            goodness_of_fit(np.zeros(999), Normal(0, 1))

    def test_critical_value(self):
        np.testing.assert_allclose(ks_critical(10 ** 6), 0.00163, rtol=1e-12)


class TestLatentMean:
    def test_hetero_max(self):
        cfg = McConfig(LatentSpec(1000, 1000, 2, "factor"), HETERO, 10 ** 4, seed=30)
        mean, se = estimate_latent_mean(cfg)
        assert abs(mean - 8.48547) < 3 * se

    def test_normal_factor(self):
        mean, se = estimate_latent_mean(McConfig(LatentSpec(2, 2, 2, "factor"), Normal(0, 1), 10 ** 5, seed=31))
        assert abs(mean) < 3 * se

    def test_uniform_factor(self):
        mean, se = estimate_latent_mean(McConfig(LatentSpec(2, 2, 2, "factor"), Uniform(0, 1), 10 ** 5, seed=32))
        assert abs(mean - 11 / 18) < 3 * se

    def test_minimum_trials(self):
        with pytest.raises(ValueError):
            estimate_latent_mean(McConfig(LatentSpec(2, 2), Normal(0, 1), 99))


class TestBlocks:
    def test_order_and_sizes(self):
        out = run_blocks(lambda b, s: (b, s), 10, 3, workers=4)
        assert out == [(0, 3), (1, 3), (2, 3), (3, 1)]


class TestExport:
    def test_round_trip(self, tmp_path):
        s = Normal(0, 1).draw(stream(40), 1000)
        export_samples(s, tmp_path / "s.txt")
        export_samples(s, tmp_path / "s.bin", "binary")
        np.testing.assert_array_equal(np.loadtxt(tmp_path / "s.txt"), s)
        np.testing.assert_array_equal(np.fromfile(tmp_path / "s.bin", dtype="<f8"), s)
        assert (tmp_path / "s.bin").stat().st_size == 8000
        with pytest.raises(ValueError):
            export_samples(s, tmp_path / "s.x", "hex")
