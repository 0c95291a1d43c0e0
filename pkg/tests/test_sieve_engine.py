"""Bernoulli sieve 引擎的测试"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from sievelab.config.settings import THEOREM1_FAMILY, THEOREM3A_FAMILY
from sievelab.core import factor_models, sieve_engine
from sievelab.core.errors import CapacityExceeded, InfiniteMean, InsufficientEnvironment
from sievelab.core.seeding import ball_stream
from sievelab.core.sieve_engine import Environment
from sievelab.models.factor_family import FactorFamily
from sievelab.models.occupancy import OccupancySnapshot


@pytest.fixture
def heavy_family():
    return FactorFamily.model_validate(THEOREM1_FAMILY)


@pytest.fixture
def light_family():
    return FactorFamily.model_validate(THEOREM3A_FAMILY)


def random_instance(family, rng):
    """随机球数与足够长的显式因子列表"""
    n = int(rng.integers(1, 51))
    u = 1.0 - rng.random(n)
    w = factor_models.sample_factors(family, rng, 64)
    while np.prod(w) >= u.min():
        w = np.concatenate((w, factor_models.sample_factors(family, rng, 64)))
    cut = int(np.argmax(np.cumprod(w) < u.min())) + 1
    return w[:cut], u


class TestEnvironment:
    """环境的构造与扩展"""

    def test_growth_is_deterministic(self, heavy_family):
        stepwise = Environment(heavy_family, seed=5)
        sieve_engine.extend_environment(stepwise, count=10)
        sieve_engine.extend_environment(stepwise, count=5000)
        direct = sieve_engine.extend_environment(Environment(heavy_family, seed=5), count=5000)
        np.testing.assert_array_equal(stepwise.S, direct.S)
        np.testing.assert_array_equal(stepwise.eta[1:], direct.eta[1:])

    def test_walk_is_increasing(self, heavy_family):
        env = sieve_engine.extend_environment(Environment(heavy_family, seed=3), level=50.0)
        assert env.S[0] == 0.0
        assert np.all(np.diff(env.S) > 0)
        assert env.S[-1] > 50.0

    def test_from_factors(self):
        env = Environment.from_factors([0.5, 0.25])
        np.testing.assert_allclose(env.S, [0.0, math.log(2), math.log(8)])
        np.testing.assert_allclose(env.eta[1:], [math.log(2), -math.log(0.75)])
        assert math.isnan(env.eta[0])
        assert env.frozen

    def test_from_factors_rejects_invalid(self):
        with pytest.raises(ValueError, match="\\(0, 1\\)"):
            Environment.from_factors([0.5, 1.0])

    def test_frozen_environment_cannot_grow(self):
        env = Environment.from_factors([0.5, 0.5])
        with pytest.raises(InsufficientEnvironment):
            sieve_engine.box_index(env, 10.0)


class TestAllocation:
    """球的分配与 (K, M, L)"""

    def test_box_index(self):
        env = Environment.from_factors([0.5, 0.5, 0.5])
        assert sieve_engine.box_index(env, 0.0) == 1
        assert sieve_engine.box_index(env, 0.7) == 2
        assert sieve_engine.box_index(env, 2.0) == 3

    def test_box_index_agrees_with_allocation(self, heavy_family):
        """逐球的 box_index 与批量分配给出相同的箱子与 (K, M)"""
        env = Environment(heavy_family, seed=23)
        energies = np.random.default_rng(23).standard_exponential(10000)
        boxes = [sieve_engine.box_index(env, e) for e in energies]
        np.testing.assert_array_equal(sieve_engine.box_indices(env, energies), boxes)
        snapshot = sieve_engine.allocate_energies(env, energies, [len(energies)])[0]
        assert snapshot.K == len(set(boxes))
        assert snapshot.M == max(boxes)

    def test_oracle_hand_example(self):
        w = [0.5, 0.5, 0.5]
        assert sieve_engine.occupancy_oracle(w, [0.9, 0.3, 0.2]) == OccupancySnapshot(n=3, K=3, M=3, L=0)
        assert sieve_engine.occupancy_oracle(w, [0.9, 0.2]) == OccupancySnapshot(n=2, K=2, M=3, L=1)

    def test_allocation_hand_example(self):
        env = Environment.from_factors([0.5, 0.5, 0.5])
        snapshot = sieve_engine.allocate_energies(env, -np.log([0.9, 0.2]), [2])[0]
        assert (snapshot.K, snapshot.M, snapshot.L) == (2, 3, 1)

    def test_oracle_requires_covering_factors(self):
        with pytest.raises(InsufficientEnvironment):
            sieve_engine.occupancy_oracle([0.9], [0.5])

    @pytest.mark.parametrize("data", [THEOREM1_FAMILY, THEOREM3A_FAMILY])
    def test_matches_oracle(self, data):
        """向量化分配与朴素线性扫描逐个一致"""
        family = FactorFamily.model_validate(data)
        rng = np.random.default_rng(99)
        for _ in range(200):
            w, u = random_instance(family, rng)
            oracle = sieve_engine.occupancy_oracle(w.tolist(), u.tolist())
            engine = sieve_engine.allocate_energies(Environment.from_factors(w), -np.log(u), [len(u)])[0]
            assert engine == oracle

    def test_coupled_snapshots(self, heavy_family):
        grid = [0, 1, 10, 100, 1000, 10000]
        env = Environment(heavy_family, seed=17)
        snapshots = sieve_engine.simulate_occupancy(env, grid, ball_stream(17))
        assert [s.n for s in snapshots] == grid
        assert snapshots[0] == OccupancySnapshot.empty()
        assert snapshots[1].K == 1 and snapshots[1].L == snapshots[1].M - 1
        for before, after in zip(snapshots, snapshots[1:]):
            assert after.K >= before.K
            assert after.M >= before.M
        for snapshot in snapshots:
            assert snapshot.L == snapshot.M - snapshot.K
            assert snapshot.K <= snapshot.n

    def test_coupling_matches_single_runs(self, heavy_family):
        """耦合网格上的快照与单独运行相同前缀的结果一致"""
        coupled = sieve_engine.simulate_occupancy(Environment(heavy_family, seed=4), [50, 500],
                                                  ball_stream(4))
        single = sieve_engine.simulate_occupancy(Environment(heavy_family, seed=4), [50],
                                                 ball_stream(4))
        assert coupled[0] == single[0]

    def test_capacity(self, heavy_family):
        with pytest.raises(CapacityExceeded):
            sieve_engine.simulate_occupancy(Environment(heavy_family, seed=1), [10], ball_stream(1),
                                            capacity=5)

    def test_grid_must_ascend(self, heavy_family):
        with pytest.raises(ValueError, match="升序"):
            sieve_engine.simulate_occupancy(Environment(heavy_family, seed=1), [10, 5], ball_stream(1))

    def test_snapshot_validation(self):
        with pytest.raises(ValidationError, match="M - K"):
            OccupancySnapshot(n=3, K=2, M=3, L=0)

    def test_ball_count(self):
        assert sieve_engine.ball_count(6.0) == 403
        assert sieve_engine.ball_count(6.0, 0.5) == 20


class TestRenewalFunctional:
    """更新泛函 ρ(t) 与鞅部分"""

    def test_hand_example(self):
        env = Environment.from_arrays(jumps=[1.0, 1.0, 1.0, 1.0], eta=[0.5, 3.0, 0.2, 0.1])
        assert sieve_engine.renewal_functional(env, 1.5) == 1
        assert sieve_engine.renewal_functional(env, 2.1) == 2

    def test_conditional_mean_sums_tails_below_level(self, light_family):
        env = Environment.from_arrays(jumps=[1.0, 1.0, 1.0, 1.0], eta=[0.5, 3.0, 0.2, 0.1])
        expected = sum(factor_models.tail_G(light_family, y) for y in (2.5, 1.5, 0.5))
        assert sieve_engine.conditional_mean_rho(env, light_family, 2.5) == pytest.approx(expected)
        assert sieve_engine.martingale_part(env, light_family, 2.5) == pytest.approx(1 - expected)

    def test_martingale_part_is_centered(self, light_family):
        values = np.array([sieve_engine.martingale_part(Environment(light_family, seed=s), light_family, 6.0)
                           for s in range(3000)])
        se = values.std(ddof=1) / math.sqrt(len(values))
        assert abs(values.mean()) < 5 * se

    def test_predictable_covariation_hand_example(self, light_family):
        env = Environment.from_arrays(jumps=[1.0, 1.0, 1.0, 1.0], eta=[0.5, 3.0, 0.2, 0.1])
        far = factor_models.tail_G(light_family, np.array([2.5, 1.5]))
        near = factor_models.tail_G(light_family, np.array([1.5, 0.5]))
        expected = np.sum(far * (1 - near))
        assert sieve_engine.predictable_covariation(env, light_family, 1.5, 2.5) == pytest.approx(expected)
        assert sieve_engine.predictable_covariation(env, light_family, 2.5, 1.5) == pytest.approx(expected)
        tails = factor_models.tail_G(light_family, np.array([2.5, 1.5, 0.5]))
        same = np.sum(tails * (1 - tails))
        assert sieve_engine.predictable_covariation(env, light_family, 2.5, 2.5) == pytest.approx(same)

    def test_predictable_covariation_matches_products(self, light_family):
        """M(a)M(b) 减去可料协变差的均值为 0"""
        diffs = []
        for seed in range(3000):
            env = Environment(light_family, seed=seed)
            product = (sieve_engine.martingale_part(env, light_family, 3.0)
                       * sieve_engine.martingale_part(env, light_family, 6.0))
            diffs.append(product - sieve_engine.predictable_covariation(env, light_family, 3.0, 6.0))
        diffs = np.array(diffs)
        se = diffs.std(ddof=1) / math.sqrt(len(diffs))
        assert abs(diffs.mean()) < 5 * se


class TestNormalization:
    """各定理情形的中心化与尺度"""

    def test_theorem1_is_raw(self, heavy_family):
        constants = sieve_engine.normalization(heavy_family, "theorem1", 9.0)
        assert constants.center == 0.0 and constants.scale == 1.0

    def test_theorem3a_constants(self, light_family):
        constants = sieve_engine.normalization(light_family, "theorem3a", 12.0, 0.5)
        mu = factor_models.mean_log_factor(light_family)
        assert constants.center == pytest.approx(factor_models.integrated_tail_G(light_family, 6.0) / mu)
        assert constants.scale == pytest.approx(factor_models.norming_q(light_family, 12.0))

    def test_centered_statistic(self, light_family):
        constants = sieve_engine.normalization(light_family, "theorem3a", 12.0)
        snapshot = OccupancySnapshot(n=10, K=5, M=12, L=7)
        value = sieve_engine.centered_L_statistic(snapshot, light_family, "theorem3a", 12.0)
        assert value == pytest.approx((7 - constants.center) / constants.scale)

    def test_infinite_mean(self, heavy_family):
        with pytest.raises(InfiniteMean):
            sieve_engine.normalization(heavy_family, "theorem3a", 12.0)

    def test_unknown_case(self, heavy_family):
        with pytest.raises(ValueError, match="未知"):
            sieve_engine.normalization(heavy_family, "theorem9", 12.0)
