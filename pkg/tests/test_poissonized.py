"""泊松化 sieve 与更新函数估计的测试"""

import math

import numpy as np
import pytest

from sievelab.config.settings import THEOREM1_FAMILY, THEOREM3A_FAMILY
from sievelab.core import poissonized, sieve_engine
from sievelab.core.errors import CapacityExceeded
from sievelab.core.factor_models import mean_log_factor
from sievelab.core.seeding import ball_stream
from sievelab.core.sieve_engine import Environment
from sievelab.models.factor_family import FactorFamily


@pytest.fixture
def heavy_family():
    return FactorFamily.model_validate(THEOREM1_FAMILY)


@pytest.fixture
def light_family():
    return FactorFamily.model_validate(THEOREM3A_FAMILY)


class TestPoissonizedOccupancy:
    """Poisson 球数与固定球数的耦合"""

    def test_coupled_counts(self, heavy_family):
        run = poissonized.poissonized_occupancy(Environment(heavy_family, seed=8), 50.0, ball_stream(8))
        assert run.snapshot.n == run.N
        assert run.coupled_snapshot.n == 50
        assert run.gap == run.snapshot.L - run.coupled_snapshot.L

    def test_same_seed_same_run(self, heavy_family):
        first = poissonized.poissonized_occupancy(Environment(heavy_family, seed=8), 80.5, ball_stream(8))
        second = poissonized.poissonized_occupancy(Environment(heavy_family, seed=8), 80.5, ball_stream(8))
        assert first == second

    def test_intensity_must_be_positive(self, heavy_family):
        with pytest.raises(ValueError, match="必须为正"):
            poissonized.poissonized_occupancy(Environment(heavy_family, seed=1), 0.0, ball_stream(1))

    def test_record(self, heavy_family):
        record = poissonized.poissonized_record(Environment(heavy_family, seed=3), 5.0, ball_stream(3), seed=3)
        assert record.poissonization_gap == record.L_poisson - record.rho
        assert record.depoisson_gap == record.L_poisson - record.L_fixed
        assert record.seed == 3

    def test_record_capacity(self, heavy_family):
        with pytest.raises(CapacityExceeded):
            poissonized.poissonized_record(Environment(heavy_family, seed=1), 20.0, ball_stream(1), capacity=1000)

    def test_conditional_mean_K(self, light_family):
        """给定环境时 K(e^t) 的经验均值与条件期望一致"""
        t = 4.0
        env = Environment(light_family, seed=11)
        rng = ball_stream(11)
        values = []
        for _ in range(4000):
            n = int(rng.poisson(math.exp(t)))
            values.append(sieve_engine.simulate_occupancy(env, [n], rng)[0].K)
        values = np.asarray(values, dtype=float)
        se = values.std(ddof=1) / math.sqrt(len(values))
        assert abs(values.mean() - poissonized.conditional_mean_K(env, t)) < 5 * se


class TestRenewalEstimates:
    """更新函数 U 与更新卷积"""

    def test_U_at_zero(self, light_family):
        estimate = poissonized.renewal_U_estimate(light_family, 0.0, 50, np.random.default_rng(0))
        assert estimate.mean == 1.0
        assert estimate.std_error == 0.0
        assert estimate.within(1.0)
        assert not estimate.within(1.1)

    def test_elementary_renewal(self, light_family):
        """U(t) ≈ t/μ"""
        t = 50.0
        estimate = poissonized.renewal_U_estimate(light_family, t, 500, np.random.default_rng(5))
        assert abs(estimate.mean * mean_log_factor(light_family) / t - 1.0) < 0.1

    def test_convolution_with_unit_function_is_U(self, light_family):
        """f ≡ 1、[0, t] 上的卷积就是 U(t)"""
        t = 20.0
        U = poissonized.renewal_U_estimate(light_family, t, 200, np.random.default_rng(3))
        conv = poissonized.renewal_convolution_estimate(light_family, np.ones_like, 0.0, 1.0, t, 200,
                                                        np.random.default_rng(3))
        assert conv.mean == pytest.approx(U.mean)

    def test_convolution_window(self, light_family):
        with pytest.raises(ValueError, match="0 <= a < b <= 1"):
            poissonized.renewal_convolution_estimate(light_family, np.ones_like, 0.5, 0.5, 10.0, 10,
                                                     np.random.default_rng(0))

    def test_reps(self, light_family):
        with pytest.raises(ValueError, match="reps"):
            poissonized.renewal_U_estimate(light_family, 1.0, 1, np.random.default_rng(0))
