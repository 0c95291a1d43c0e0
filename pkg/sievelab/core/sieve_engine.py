# -*- coding: utf-8 -*-
"""
Bernoulli sieve 引擎
在同一环境上对一组球数耦合地模拟 (K_n, M_n, L_n)，并提供朴素的对照实现与更新泛函
"""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from sievelab.core import factor_models
from sievelab.core.errors import CapacityExceeded, InfiniteMean, InsufficientEnvironment
from sievelab.models.factor_family import FactorFamily
from sievelab.models.occupancy import NormingConstants, OccupancySnapshot


logger = logging.getLogger("sievelab.sieve_engine")

# 环境按固定大小的块扩展，保证扩展结果只依赖 (family, seed)
BLOCK_SIZE = 1024
MAX_EXTENT = 10 ** 8
DEFAULT_CAPACITY = 10 ** 8
BALL_CHUNK = 1 << 20

THEOREM_CASES = (
    "theorem1", "theorem2",
    "theorem3a", "theorem3b1", "theorem3b2", "theorem3c1", "theorem3c2",
)


class Environment:
    """
    惰性扩展的环境：随机游走 S_k = Σ|log W_i|（S_0 = 0）与标记 η_k = |log(1-W_k)|

    eta[k] 与 S[k] 来自同一个 W_k，eta[0] 没有意义（NaN）
    """

    def __init__(self, family: Optional[FactorFamily], seed: Optional[int] = None,
                 block_size: int = BLOCK_SIZE):
        """
        初始化环境

        :param family: 因子分布；固定环境可以为 None
        :param seed: 环境种子
        :param block_size: 每次扩展的步数
        """
        self.family = family
        self.seed = seed
        self.block_size = block_size
        self._rng = np.random.default_rng([seed, 0]) if seed is not None else None
        self._S = np.zeros(block_size + 1)
        self._eta = np.full(block_size + 1, np.nan)
        self._size = 1
        self._frozen = family is None or seed is None

    @classmethod
    def from_arrays(cls, jumps: Sequence[float], eta: Sequence[float]) -> "Environment":
        """
        由给定的步长与标记构造不可扩展的固定环境

        :param jumps: |log W_k|，k = 1..m
        :param eta: |log(1-W_k)|，k = 1..m
        :return: 固定环境
        """
        jumps = np.asarray(jumps, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if jumps.shape != eta.shape:
            raise ValueError("jumps 与 eta 的长度必须一致")
        env = cls(family=None, seed=None, block_size=max(len(jumps), 1))
        env._append(jumps, eta)
        return env

    @classmethod
    def from_factors(cls, w_list: Sequence[float]) -> "Environment":
        """
        由显式因子 W_1..W_m 构造固定环境

        :param w_list: 因子列表，每个 w ∈ (0, 1)
        :return: 固定环境
        """
        w = np.asarray(w_list, dtype=float)
        if np.any((w <= 0.0) | (w >= 1.0)):
            raise ValueError("所有因子必须位于 (0, 1)")
        return cls.from_arrays(-np.log(w), -np.log1p(-w))

    @property
    def S(self) -> np.ndarray:
        """S_0..S_m"""
        return self._S[:self._size]

    @property
    def eta(self) -> np.ndarray:
        """eta_0..eta_m（eta_0 为 NaN）"""
        return self._eta[:self._size]

    @property
    def extent(self) -> int:
        """已生成的步数 m"""
        return self._size - 1

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _append(self, jumps: np.ndarray, eta: np.ndarray) -> None:
        needed = self._size + len(jumps)
        if needed > len(self._S):
            capacity = max(needed, 2 * len(self._S))
            self._S = np.resize(self._S, capacity)
            self._eta = np.resize(self._eta, capacity)
        self._S[self._size:needed] = self._S[self._size - 1] + np.cumsum(jumps)
        self._eta[self._size:needed] = eta
        self._size = needed

    def _grow(self) -> None:
        if self._frozen:
            raise InsufficientEnvironment(
                f"固定环境只有 {self.extent} 步，S_m = {self.S[-1]:.6g}，无法继续扩展")
        if self.extent + self.block_size > MAX_EXTENT:
            raise CapacityExceeded(f"环境长度超过上限 {MAX_EXTENT}")
        jumps, eta = factor_models.sample_log_factors(self.family, self._rng, self.block_size)
        self._append(jumps, eta)


def extend_environment(env: Environment, count: Optional[int] = None,
                       level: Optional[float] = None) -> Environment:
    """
    扩展环境，直到步数 >= count 且 S_m > level

    :param env: 环境
    :param count: 目标步数
    :param level: 目标水平
    :return: 同一个环境（已扩展）
    """
    if count is not None:
        while env.extent < count:
            env._grow()
    if level is not None:
        while env.extent < 1 or env.S[-1] <= level:
            env._grow()
    return env


def box_index(env: Environment, e: float) -> int:
    """
    能量为 e 的球所在的箱子编号 min{k: S_k > e}

    :param env: 环境
    :param e: 指数能量 -log U，e >= 0
    :return: 箱子编号 k >= 1
    """
    extend_environment(env, level=e)
    return int(np.searchsorted(env.S, e, side="right"))


def box_indices(env: Environment, energies: np.ndarray) -> np.ndarray:
    """
    box_index 的向量化版本

    :param env: 环境
    :param energies: 能量数组
    :return: 箱子编号数组
    """
    if len(energies) == 0:
        return np.empty(0, dtype=np.int64)
    extend_environment(env, level=float(np.max(energies)))
    return np.searchsorted(env.S, energies, side="right").astype(np.int64)


class _OccupancyTracker:
    """按到达顺序处理球，稀疏地记录已占用箱子，累计 K 与 M"""

    def __init__(self, env: Environment):
        self.env = env
        self.occupied = np.empty(0, dtype=np.int64)
        self.n = 0
        self.K = 0
        self.M = 0

    def consume(self, energies: np.ndarray, checkpoints: Iterable[int]) -> List[OccupancySnapshot]:
        """
        处理一批球，并在落在本批内的检查点处输出快照

        :param energies: 本批能量
        :param checkpoints: 升序球数，满足 n < checkpoint <= n + len(energies)
        :return: 快照列表
        """
        boxes = box_indices(self.env, energies)
        uniq, first = np.unique(boxes, return_index=True)
        new = ~np.isin(uniq, self.occupied, assume_unique=True)
        new_first = np.sort(first[new])
        running_max = np.maximum.accumulate(boxes)

        snapshots = []
        for target in checkpoints:
            local = target - self.n
            K = self.K + int(np.searchsorted(new_first, local, side="left"))
            M = max(self.M, int(running_max[local - 1]))
            snapshots.append(OccupancySnapshot(n=target, K=K, M=M, L=M - K))

        self.K += len(new_first)
        self.M = max(self.M, int(running_max[-1]))
        self.occupied = np.union1d(self.occupied, uniq[new])
        self.n += len(energies)
        return snapshots


def _check_grid(n_grid: Sequence[int], capacity: int) -> List[int]:
    grid = [int(n) for n in n_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"球数网格必须升序: {grid}")
    if grid and grid[0] < 0:
        raise ValueError("球数必须非负")
    if grid and grid[-1] > capacity:
        raise CapacityExceeded(f"球数 {grid[-1]} 超过容量上限 {capacity}")
    return grid


def _run_tracker(env: Environment, grid: List[int], draw_chunk) -> List[OccupancySnapshot]:
    tracker = _OccupancyTracker(env)
    results: List[OccupancySnapshot] = []
    pending = [n for n in grid if n > 0]
    results.extend(OccupancySnapshot.empty() for n in grid if n == 0)
    n_max = pending[-1] if pending else 0
    while tracker.n < n_max:
        energies = draw_chunk(tracker.n, min(BALL_CHUNK, n_max - tracker.n))
        upper = tracker.n + len(energies)
        here = [n for n in pending if tracker.n < n <= upper]
        results.extend(tracker.consume(energies, here))
    return results


def allocate_energies(env: Environment, energies: Sequence[float],
                      n_grid: Sequence[int]) -> List[OccupancySnapshot]:
    """
    把给定的能量序列依次放入箱子，在 n_grid 的每个球数处输出快照

    :param env: 环境
    :param energies: 能量序列，长度 >= max(n_grid)
    :param n_grid: 升序球数
    :return: 快照列表
    """
    energies = np.asarray(energies, dtype=float)
    grid = _check_grid(n_grid, max(len(energies), 0))
    return _run_tracker(env, grid, lambda start, size: energies[start:start + size])


def simulate_occupancy(env: Environment, n_grid: Sequence[int], rng: np.random.Generator,
                       capacity: int = DEFAULT_CAPACITY) -> List[OccupancySnapshot]:
    """
    在同一环境与同一球流上耦合地模拟各球数下的 (K, M, L)

    球用 Exp(1) 能量 E_i = -log U_i 表示，按块抽取

    :param env: 环境
    :param n_grid: 升序球数
    :param rng: 球流
    :param capacity: 球数上限
    :return: 快照列表，与 n_grid 一一对应
    """
    grid = _check_grid(n_grid, capacity)
    return _run_tracker(env, grid, lambda start, size: rng.standard_exponential(size))


def occupancy_oracle(w_list: Sequence[float], u_list: Sequence[float]) -> OccupancySnapshot:
    """
    朴素对照：显式构造 T_k 并逐个线性扫描区间 (T_k, T_{k-1}]

    :param w_list: 因子 W_1..W_m
    :param u_list: 均匀点 U_1..U_n
    :return: 快照
    """
    if not u_list:
        return OccupancySnapshot.empty()
    T = [1.0]
    for w in w_list:
        if not 0.0 < w < 1.0:
            raise ValueError(f"因子必须位于 (0, 1)，当前 w={w}")
        T.append(T[-1] * w)
    if T[-1] >= min(u_list):
        raise InsufficientEnvironment(f"T_m = {T[-1]:.6g} 没有低于 min(U) = {min(u_list):.6g}")

    boxes = []
    for u in u_list:
        for k in range(1, len(T)):
            if T[k] < u <= T[k - 1]:
                boxes.append(k)
                break
    K = len(set(boxes))
    M = max(boxes)
    return OccupancySnapshot(n=len(u_list), K=K, M=M, L=M - K)


def renewal_functional(env: Environment, t: float) -> int:
    """
    ρ(t) = Σ_{k>=0} 1{S_k <= t < S_k + η_{k+1}}

    :param env: 环境
    :param t: 水平，t >= 0
    :return: ρ(t)
    """
    extend_environment(env, level=t)
    S = env.S
    nu = int(np.searchsorted(S, t, side="right"))
    return int(np.count_nonzero(S[:nu] + env.eta[1:nu + 1] > t))


def conditional_mean_rho(env: Environment, family: FactorFamily, t: float) -> float:
    """
    给定随机游走时 ρ(t) 的条件期望 Σ_{S_k <= t} P{|log(1-W)| > t - S_k}

    :param env: 环境
    :param family: 因子分布
    :param t: 水平
    :return: 条件期望
    """
    extend_environment(env, level=t)
    S = env.S
    nu = int(np.searchsorted(S, t, side="right"))
    return float(np.sum(factor_models.tail_G(family, t - S[:nu])))


def martingale_part(env: Environment, family: FactorFamily, t: float) -> float:
    """
    ρ(t) 减去其条件期望

    :param env: 环境
    :param family: 因子分布
    :param t: 水平
    :return: 鞅部分
    """
    return renewal_functional(env, t) - conditional_mean_rho(env, family, t)


def predictable_covariation(env: Environment, family: FactorFamily, a: float, b: float) -> float:
    """
    鞅部分在水平 a、b 上的可料协变差
    Σ_{S_k <= min(a,b)} P{|log(1-W)| > max - S_k} · P{|log(1-W)| <= min - S_k}
    其期望等于 E[M(a)M(b)]

    :param env: 环境
    :param family: 因子分布
    :param a: 水平一
    :param b: 水平二
    :return: 协变差
    """
    low, high = sorted((a, b))
    extend_environment(env, level=high)
    S = env.S
    nu = int(np.searchsorted(S, low, side="right"))
    far = factor_models.tail_G(family, high - S[:nu])
    near = factor_models.tail_G(family, low - S[:nu])
    return float(np.sum(far * (1.0 - near)))


def ball_count(t: float, u: float = 1.0) -> int:
    """n = [e^{ut}]"""
    return int(math.floor(math.exp(u * t)))


def normalization(family: FactorFamily, case: str, t: float, u: float = 1.0) -> NormingConstants:
    """
    计算某一定理情形下 L_[e^{ut}] 的中心化与尺度常数

    :param family: 因子分布
    :param case: 定理情形
    :param t: 对数尺度参数
    :param u: 时间参数
    :return: 常数
    """
    if case == "theorem1":
        return NormingConstants(case=case, t=t, u=u)
    if case == "theorem2":
        return NormingConstants(case=case, t=t, u=u, scale=1.0 / factor_models.theorem2_ratio(family, t))
    if case not in THEOREM_CASES:
        raise ValueError(f"未知的定理情形: {case}")

    mu = factor_models.mean_log_factor(family)
    if math.isinf(mu):
        raise InfiniteMean(f"{case} 需要 E|log W| < ∞")
    center = factor_models.integrated_tail_G(family, u * t) / mu
    if case in ("theorem3b2", "theorem3c2"):
        scale = factor_models.norming_g(family, t, case[-2:])
    else:
        scale = factor_models.norming_q(family, t)
    return NormingConstants(case=case, t=t, u=u, center=center, scale=scale)


def standardize(value: Union[float, np.ndarray], constants: NormingConstants) -> Union[float, np.ndarray]:
    """(value - center) / scale"""
    return (value - constants.center) / constants.scale


def centered_L_statistic(value: Union[OccupancySnapshot, float, np.ndarray], family: FactorFamily,
                         case: str, t: float, u: float = 1.0) -> Union[float, np.ndarray]:
    """
    按定理情形标准化 L 或 ρ

    :param value: 快照、L 或 ρ 的值（可以是数组）
    :param family: 因子分布
    :param case: 定理情形
    :param t: 对数尺度参数
    :param u: 时间参数
    :return: 标准化后的统计量
    """
    if isinstance(value, OccupancySnapshot):
        value = value.L
    return standardize(value, normalization(family, case, t, u))
