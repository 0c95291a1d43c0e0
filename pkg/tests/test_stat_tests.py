"""统计检验的测试"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from sievelab.core import stat_tests
from sievelab.core.errors import DegenerateBins, TooFewSamples
from sievelab.models.statistics import AcceptanceCheck, DiscretePMF


def geometric_samples(c, size, seed):
    """{0, 1, ...} 上参数为 c/(c+1) 的几何样本"""
    return np.random.default_rng(seed).geometric(c / (c + 1.0), size) - 1


class TestDiscreteDistributions:
    """离散分布与全变差距离"""

    def test_geometric_pmf(self):
        pmf = stat_tests.geometric_pmf(3.0)
        assert math.fsum(pmf.probs) == pytest.approx(1.0, abs=1e-12)
        assert pmf.probs[0] == pytest.approx(0.75)
        assert pmf.probs[1] == pytest.approx(0.75 * 0.25)
        assert pmf.support[-1] == 200

    def test_geometric_pmf_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="c 必须为正"):
            stat_tests.geometric_pmf(0.0)

    def test_pmf_validation(self):
        with pytest.raises(ValidationError, match="之和"):
            DiscretePMF(support=[0, 1], probs=[0.5, 0.6])
        with pytest.raises(ValidationError, match="升序"):
            DiscretePMF(support=[1, 0], probs=[0.5, 0.5])

    def test_empirical_pmf(self):
        pmf = stat_tests.empirical_pmf([0, 0, 1, 3])
        assert pmf.as_dict() == {0: 0.5, 1: 0.25, 3: 0.25}

    def test_tv_distance(self):
        pmf = stat_tests.geometric_pmf(1.0)
        assert stat_tests.tv_distance(pmf, pmf) == 0.0
        assert stat_tests.tv_distance([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx(0.25)
        assert stat_tests.tv_distance(geometric_samples(1.0, 50000, 1), pmf) < 0.02

    def test_tv_distance_joint(self):
        a = np.array([[0, 0], [0, 1], [1, 1], [1, 1]])
        b = np.array([[0, 0], [0, 0], [1, 1], [1, 1]])
        assert stat_tests.tv_distance_joint(a, a) == 0.0
        assert stat_tests.tv_distance_joint(a, b) == pytest.approx(0.25)

    def test_tv_noise_matches_sampled_distances(self):
        """自助法的噪声水平与真实样本的全变差距离同量级"""
        pmf = stat_tests.geometric_pmf(1.0)
        mean, sd = stat_tests.tv_noise(pmf, 2000, np.random.default_rng(12))
        observed = [stat_tests.tv_distance(geometric_samples(1.0, 2000, seed), pmf) for seed in range(100, 150)]
        assert mean == pytest.approx(np.mean(observed), rel=0.2)
        assert 0 < sd < mean

    def test_tv_noise_is_seeded(self):
        pmf = stat_tests.geometric_pmf(1.0)
        first = stat_tests.tv_noise(pmf, 500, np.random.default_rng(13))
        assert first == stat_tests.tv_noise(pmf, 500, np.random.default_rng(13))

    def test_tv_noise_shrinks_with_n(self):
        pmf = stat_tests.geometric_pmf(1.0)
        small, _ = stat_tests.tv_noise(pmf, 100, np.random.default_rng(14))
        large, _ = stat_tests.tv_noise(pmf, 10000, np.random.default_rng(14))
        assert large < small / 5

    def test_tv_noise_arguments(self):
        with pytest.raises(ValueError, match="reps >= 2"):
            stat_tests.tv_noise(stat_tests.geometric_pmf(1.0), 100, np.random.default_rng(15), reps=1)


class TestChiSquare:
    """卡方检验与分箱合并"""

    def test_merge_bins(self):
        assert stat_tests.merge_bins(np.array([10.0, 2.0, 2.0, 2.0, 10.0])) == [(0, 1), (1, 4), (4, 5)]
        assert stat_tests.merge_bins(np.array([10.0, 2.0, 1.0])) == [(0, 3)]

    def test_gof_accepts_true_law(self):
        result = stat_tests.chi2_gof(geometric_samples(1.0, 5000, 2), stat_tests.geometric_pmf(1.0))
        assert result.p_value > 1e-4
        assert result.dof >= 2

    def test_gof_rejects_wrong_law(self):
        result = stat_tests.chi2_gof(geometric_samples(1.0, 5000, 3), stat_tests.geometric_pmf(3.0))
        assert result.p_value < 1e-6

    def test_gof_degenerate(self):
        with pytest.raises(DegenerateBins):
            stat_tests.chi2_gof(np.zeros(20, dtype=int), stat_tests.geometric_pmf(1e6))

    def test_two_sample_same_law(self):
        result = stat_tests.chi2_two_sample(geometric_samples(1.0, 5000, 4), geometric_samples(1.0, 5000, 5))
        assert result.p_value > 1e-4

    def test_two_sample_different_laws(self):
        result = stat_tests.chi2_two_sample(geometric_samples(1.0, 5000, 6), geometric_samples(3.0, 5000, 7))
        assert result.p_value < 1e-6

    def test_two_sample_joint(self):
        rng = np.random.default_rng(8)
        a = rng.integers(0, 3, size=(4000, 2))
        b = rng.integers(0, 3, size=(4000, 2))
        assert stat_tests.chi2_two_sample(a, b).p_value > 1e-4

    def test_two_sample_dimension_mismatch(self):
        with pytest.raises(ValueError, match="维数"):
            stat_tests.chi2_two_sample(np.zeros((20, 2), dtype=int), np.zeros(20, dtype=int))


class TestKolmogorovSmirnov:
    """KS 检验"""

    def test_one_sample(self):
        samples = np.random.default_rng(9).standard_normal(2000)
        result = stat_tests.ks_one_sample(samples, "norm")
        assert result.statistic < 0.05
        assert result.p_value > 1e-4
        assert stat_tests.ks_distance(samples, stats.norm.cdf) == pytest.approx(result.statistic)

    def test_one_sample_detects_shift(self):
        samples = np.random.default_rng(10).standard_normal(2000) + 0.5
        assert stat_tests.ks_one_sample(samples, "norm").p_value < 1e-6

    def test_two_sample(self):
        rng = np.random.default_rng(11)
        result = stat_tests.ks_two_sample(rng.exponential(size=3000), rng.exponential(size=2000))
        assert result.p_value > 1e-4
        assert result.n_effective == 1200

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples, match="至少 10"):
            stat_tests.ks_one_sample([0.1, 0.2, 0.3, 0.4, 0.5], "norm")


class TestCalibration:
    """零假设下的拒绝率不超过名义水平的 1.5 倍"""

    LEVEL = 0.2
    REPETITIONS = 200

    def rejection_rate(self, p_values):
        return float(np.mean(np.asarray(p_values) < self.LEVEL))

    def test_chi2_gof(self):
        rng = np.random.default_rng(20)
        ref = stat_tests.geometric_pmf(1.0)
        p_values = [stat_tests.chi2_gof(rng.geometric(0.5, 2000) - 1, ref).p_value
                    for _ in range(self.REPETITIONS)]
        assert self.rejection_rate(p_values) <= 1.5 * self.LEVEL

    def test_ks_two_sample(self):
        rng = np.random.default_rng(21)
        p_values = [stat_tests.ks_two_sample(rng.exponential(size=500), rng.exponential(size=500)).p_value
                    for _ in range(self.REPETITIONS)]
        assert self.rejection_rate(p_values) <= 1.5 * self.LEVEL


class TestMoments:
    """经验协方差与经验特征函数"""

    def test_covariance_of_independent_normals(self):
        samples = np.random.default_rng(12).standard_normal((20000, 2))
        cov, se = stat_tests.empirical_cov(samples)
        assert np.all(se > 0)
        assert np.all(np.abs(cov - np.eye(2)) < 5 * se)

    def test_covariance_on_grid(self):
        samples = np.random.default_rng(14).standard_normal((2000, 1))
        cov, se = stat_tests.empirical_cov(samples, grid=[1.0])
        assert cov.shape == se.shape == (1, 1)
        assert cov[0, 0] == pytest.approx(samples.var(ddof=1))

    def test_covariance_grid_must_match_columns(self):
        samples = np.zeros((2000, 2))
        with pytest.raises(ValueError, match="3 个点"):
            stat_tests.empirical_cov(samples, grid=[1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="升序"):
            stat_tests.empirical_cov(samples, grid=[2.0, 1.0])

    def test_covariance_requires_samples(self):
        with pytest.raises(TooFewSamples):
            stat_tests.empirical_cov(np.zeros((999, 2)))

    def test_char_fn_of_normal(self):
        z = [-1.0, 0.5, 2.0]
        samples = np.random.default_rng(13).standard_normal(50000)
        values, se = stat_tests.empirical_char_fn(samples, z)
        target = np.exp(-0.5 * np.square(z))
        assert np.all(np.abs(values.real - target) < 5 * se[:, 0])
        assert np.all(np.abs(values.imag) < 5 * se[:, 1])

    def test_char_fn_requires_samples(self):
        with pytest.raises(TooFewSamples):
            stat_tests.empirical_char_fn(np.zeros(100), [1.0])


class TestAcceptanceCheck:
    """验收检查模型"""

    def test_p_value_range(self):
        with pytest.raises(ValidationError):
            AcceptanceCheck(name="x", statistic=1.0, threshold=0.5, passed=True, p_value=1.5)

    def test_defaults_to_gating(self):
        assert AcceptanceCheck(name="x", statistic=0.1, threshold=0.5, passed=True).gating
