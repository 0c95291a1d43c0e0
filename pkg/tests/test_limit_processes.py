"""极限过程采样器的测试"""

import math

import numpy as np
import pytest

from sievelab.core import limit_processes as lp
from sievelab.core.errors import GridTooFine, NotCovered, NotPSD
from sievelab.core.stat_tests import empirical_cov, ks_two_sample


class TestSubordinator:
    """α-稳定从属过程及其逆"""

    def test_positive_stable_laplace(self):
        """E e^{-s} = e^{-1}"""
        s = lp.sample_positive_stable(0.5, np.random.default_rng(1), 100000)
        assert np.all(s > 0)
        assert abs(np.exp(-s).mean() - math.exp(-1.0)) < 0.01

    def test_positive_stable_scalar(self):
        assert isinstance(lp.sample_positive_stable(0.3, np.random.default_rng(0)), float)

    def test_alpha_range(self):
        with pytest.raises(ValueError, match="alpha"):
            lp.sample_positive_stable(1.2, np.random.default_rng(0), 10)

    def test_path_not_covering(self):
        path = lp.sample_subordinator_path(0.5, 1e-6, 1e-7, np.random.default_rng(2))
        with pytest.raises(NotCovered):
            lp.inverse_subordinator_eval(path, 1.0)

    def test_grid_too_fine(self):
        with pytest.raises(GridTooFine):
            lp.sample_subordinator_path(0.5, 10.0, 1e-7, np.random.default_rng(0))

    def test_inverse_equals_zero_kernel_integral(self):
        rng = np.random.default_rng(3)
        path = lp.sample_subordinator_path(0.5, 20.0, 1e-3, rng)
        value, bias = lp.inverse_subordinator_eval(path, 1.0)
        assert bias == 1e-3
        assert lp.frac_integral_on_path(path, 0.0, 1.0) == pytest.approx(value)

    def test_mean_crossing_time(self):
        """γ = 0 时积分就是 X^←(u)，均值为 u^α/(Γ(1+α)Γ(1-α))"""
        samples = lp.sample_frac_integral_inverse(0.5, 0.0, 1.0, np.random.default_rng(4), size=2000)
        assert samples.mean() == pytest.approx(lp.expected_crossing_time(0.5, 1.0), rel=0.08)

    def test_self_similarity(self):
        """X(2t) 与 2^{1/α}X(t) 同分布"""
        rng = np.random.default_rng(17)
        alpha = 0.5
        at_one = np.array([lp.sample_subordinator_path(alpha, 1.0, 0.5, rng).values[-1] for _ in range(10000)])
        at_two = np.array([lp.sample_subordinator_path(alpha, 2.0, 0.5, rng).values[-1] for _ in range(10000)])
        assert ks_two_sample(at_two, 2 ** (1 / alpha) * at_one).p_value > 1e-4

    def test_coarse_step_is_refined_near_level(self):
        """初始步长很粗时靠近水平处逐级加密，γ = 0 的均值仍是 E X^←(u)"""
        samples = lp.sample_frac_integral_inverse(0.5, 0.0, 1.0, np.random.default_rng(18), step=0.05, size=2000)
        assert samples.mean() == pytest.approx(lp.expected_crossing_time(0.5, 1.0), rel=0.08)

    def test_integral_parameter_checks(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="gamma"):
            lp.sample_frac_integral_inverse(0.5, 1.0, 1.0, rng)
        with pytest.raises(ValueError, match="u"):
            lp.sample_frac_integral_inverse(0.5, 0.5, 0.0, rng)


class TestPoissonRandomMeasure:
    """Poisson 随机测度与 R_{α,c}"""

    def test_point_count(self):
        rng = np.random.default_rng(5)
        counts = [len(lp.sample_prm(0.5, 1.0, 0.01, 1.0, rng)) for _ in range(2000)]
        assert np.mean(counts) == pytest.approx(10.0, abs=0.3)

    def test_marks_above_delta(self):
        points = lp.sample_prm(0.5, 1.0, 0.01, 5.0, np.random.default_rng(6))
        assert np.all(points.marks > 0.01)
        assert np.all(np.diff(points.times) >= 0)
        assert np.all((points.times >= 0) & (points.times <= 5.0))

    def test_thinning(self):
        points = lp.sample_prm(0.5, 1.0, 0.01, 5.0, np.random.default_rng(7))
        thinned = points.thin(0.05)
        assert len(thinned) == int(np.count_nonzero(points.marks > 0.05))
        assert thinned.delta == 0.05
        with pytest.raises(ValueError, match="只能提高"):
            thinned.thin(0.01)

    def test_straddle_counts_decrease_with_delta(self):
        configuration = lp.sample_straddle_configuration(0.5, 1.0, 1e-3, 2.0, np.random.default_rng(8))
        assert configuration.count(1.0, 1e-2) <= configuration.count(1.0, 1e-3)
        with pytest.raises(ValueError, match="超出"):
            configuration.count(3.0)

    def test_R_geometric_mean(self):
        """R_{α,c}(1) ~ Geometric(c/(c+1))，均值 1/c"""
        rng = np.random.default_rng(9)
        samples = np.array([lp.sample_R(0.5, 1.0, 1.0, rng) for _ in range(3000)])
        assert samples.mean() == pytest.approx(1.0, abs=0.12)
        assert np.mean(samples == 0) == pytest.approx(0.5, abs=0.05)

    def test_R_process_from_one_configuration(self):
        counts = lp.sample_R_process(0.5, 1.0, [1.0, 2.0, 3.0], np.random.default_rng(21))
        assert len(counts) == 3
        assert all(isinstance(k, int) and k >= 0 for k in counts)
        assert counts == lp.sample_R_process(0.5, 1.0, [1.0, 2.0, 3.0], np.random.default_rng(21))

    def test_R_batch_shape(self):
        batch = lp.sample_R_batch(0.5, 3.0, [1.0, 2.0], 20, np.random.default_rng(10))
        assert batch.shape == (20, 2)
        assert batch.dtype == np.int64

    def test_R_mixed_poisson_mean(self):
        samples = lp.sample_R_mixed_poisson(0.5, 1.0, 1.0, np.random.default_rng(11), size=500)
        assert samples.mean() == pytest.approx(1.0, abs=0.25)


class TestGaussian:
    """高斯过程 V 与尺度化分数布朗运动"""

    def test_covariance_formula(self):
        cov = lp.gaussian_covariance(0.4, [1.0, 2.0])
        expected = np.array([[1.0, 2 ** 0.6 - 1.0], [2 ** 0.6 - 1.0, 2 ** 0.6]])
        np.testing.assert_allclose(cov, expected)

    def test_V_covariance(self):
        sample = lp.sample_V(0.4, [1.0, 2.0], np.random.default_rng(12), size=20000)
        cov, _ = empirical_cov(sample.values)
        np.testing.assert_allclose(cov, lp.gaussian_covariance(0.4, [1.0, 2.0]), atol=0.08)

    def test_fbm_covariance(self):
        grid = np.array([1.0, 2.0])
        sample = lp.sample_scaled_fbm(0.4, grid, np.random.default_rng(13), size=20000)
        clock = grid ** 0.6
        target = np.add.outer(clock, clock) - np.abs(np.subtract.outer(grid, grid)) ** 0.6
        cov, _ = empirical_cov(sample.values)
        np.testing.assert_allclose(cov, target, atol=0.15)

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            lp._cholesky_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_grid_checks(self):
        with pytest.raises(ValueError, match="升序"):
            lp.sample_V(0.4, [2.0, 1.0], np.random.default_rng(0))


class TestStable:
    """稳定 Lévy 过程与 Lévy 驱动积分"""

    def test_char_fn_at_zero(self):
        assert lp.stable_char_fn(1.5, 0.0) == pytest.approx(1.0)

    def test_increments_char_fn(self):
        z = np.array([-2.0, -1.0, 0.5, 1.0, 2.0])
        increments = lp.sample_stable_increments(1.5, 1.0, np.random.default_rng(14), size=100000)
        empirical = np.exp(1j * np.outer(z, increments)).mean(axis=1)
        np.testing.assert_allclose(np.abs(empirical - lp.stable_char_fn(1.5, z)), 0.0, atol=0.02)

    def test_path_increments(self):
        path = lp.sample_stable_levy_path(1.5, 1.0, 0.01, np.random.default_rng(15))
        assert path.values[0] == 0.0
        assert len(path.increments) == 100

    def test_refined_grid_covers_interval(self):
        lefts, lengths = lp.refined_grid(2.0, 0.1)
        assert lengths.sum() == pytest.approx(2.0)
        np.testing.assert_allclose(lefts[1:], lefts[:-1] + lengths[:-1])
        assert lefts[0] == 0.0

    def test_brownian_integral_without_kernel(self):
        """β = 0 时积分就是 B(u)，方差为 u"""
        samples = lp.sample_frac_integral_levy("brownian", 0.0, 2.0, np.random.default_rng(16), size=20000)
        assert samples.var() == pytest.approx(2.0, rel=0.05)

    def test_increment_additivity(self):
        """Z(2Δ) 与两个独立 Z(Δ) 之和同分布"""
        rng = np.random.default_rng(19)
        doubled = lp.sample_stable_increments(1.5, 2.0, rng, size=10000)
        summed = lp.sample_stable_increments(1.5, 1.0, rng, size=(10000, 2)).sum(axis=1)
        assert ks_two_sample(doubled, summed).p_value > 1e-4

    def test_levy_integral_stable_under_refinement(self):
        """步长减半不改变 α = 1.5、β = 0.2 的积分分布"""
        coarse = lp.sample_frac_integral_levy("stable", 0.2, 1.0, np.random.default_rng(20), step=1e-3,
                                              size=20000, alpha=1.5)
        fine = lp.sample_frac_integral_levy("stable", 0.2, 1.0, np.random.default_rng(21), step=5e-4,
                                            size=20000, alpha=1.5)
        assert ks_two_sample(coarse, fine).p_value > 1e-4

    def test_stable_beta_bound(self):
        with pytest.raises(ValueError, match="2/alpha - 1"):
            lp.sample_frac_integral_levy("stable", 0.5, 1.0, np.random.default_rng(0), alpha=1.5)

    def test_unknown_driver(self):
        with pytest.raises(ValueError, match="未知"):
            lp.sample_frac_integral_levy("poisson", 0.1, 1.0, np.random.default_rng(0))
