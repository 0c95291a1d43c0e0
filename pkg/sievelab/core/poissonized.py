# -*- coding: utf-8 -*-
"""
泊松化 Bernoulli sieve
球数取 Poisson(t)，用于检查泊松化与反泊松化引理，并估计更新函数
"""

import logging
import math
from typing import Callable

import numpy as np

from sievelab.core import sieve_engine
from sievelab.core.errors import CapacityExceeded
from sievelab.core.sieve_engine import Environment
from sievelab.models.factor_family import FactorFamily
from sievelab.models.occupancy import PoissonizationRecord, PoissonizedRun
from sievelab.models.statistics import MonteCarloEstimate


logger = logging.getLogger("sievelab.poissonized")

# conditional_mean_K 截断：S_k > t + 40 之后的项小于 e^{-40}
_K_TAIL_MARGIN = 40.0


def poissonized_occupancy(env: Environment, t: float, rng: np.random.Generator,
                          capacity: int = sieve_engine.DEFAULT_CAPACITY) -> PoissonizedRun:
    """
    以 Poisson(t) 个球运行 sieve，并在同一球流上给出 [t] 个球时的快照

    numpy 的 Poisson 抽样是精确分布（小均值用逆变换，大均值用 PTRS 拒绝采样）

    :param env: 环境
    :param t: 强度，t > 0
    :param rng: 球流
    :param capacity: 球数上限
    :return: 泊松化运行结果
    """
    if t <= 0:
        raise ValueError(f"强度 t 必须为正，当前 t={t}")
    fixed = int(math.floor(t))
    N = int(rng.poisson(t))
    if max(N, fixed) > capacity:
        raise CapacityExceeded(f"球数 {max(N, fixed)} 超过容量上限 {capacity}")
    low, high = sorted((N, fixed))
    first, second = sieve_engine.simulate_occupancy(env, [low, high], rng, capacity=capacity)
    snapshot, coupled = (first, second) if N <= fixed else (second, first)
    return PoissonizedRun(t=t, N=N, snapshot=snapshot, coupled_snapshot=coupled)


def depoisson_gap(env: Environment, t: float, rng: np.random.Generator) -> int:
    """
    L(t) - L_[t]，两者共享环境与球流

    :param env: 环境
    :param t: 强度
    :param rng: 球流
    :return: 差值
    """
    return poissonized_occupancy(env, t, rng).gap


def poissonized_record(env: Environment, t: float, rng: np.random.Generator, seed: int = 0,
                       capacity: int = sieve_engine.DEFAULT_CAPACITY) -> PoissonizationRecord:
    """
    在对数尺度 t 上比较 L(e^t)、L_[e^t] 与 ρ(t)，三者共享一个环境

    :param env: 环境
    :param t: 对数尺度，泊松均值为 e^t
    :param rng: 球流
    :param seed: 记录到结果中的重复实验种子
    :param capacity: 球数上限
    :return: 记录
    """
    intensity = math.exp(t)
    if intensity > capacity:
        raise CapacityExceeded(f"e^t = {intensity:.3g} 超过容量上限 {capacity}")
    run = poissonized_occupancy(env, intensity, rng, capacity=capacity)
    rho = sieve_engine.renewal_functional(env, t)
    logger.debug(f"t={t:g} N={run.N} L_poisson={run.snapshot.L} L_fixed={run.coupled_snapshot.L} rho={rho}")
    return PoissonizationRecord(t=t, N=run.N, L_poisson=run.snapshot.L,
                                L_fixed=run.coupled_snapshot.L, rho=rho, seed=seed)


def poissonization_gap(env: Environment, t: float, rng: np.random.Generator,
                       capacity: int = sieve_engine.DEFAULT_CAPACITY) -> int:
    """
    L(e^t) - ρ(t)，分配与更新泛函使用同一个环境

    :param env: 环境
    :param t: 对数尺度
    :param rng: 球流
    :param capacity: 球数上限
    :return: 差值
    """
    return poissonized_record(env, t, rng, capacity=capacity).poissonization_gap


def first_passage_index(env: Environment, t: float) -> int:
    """ν(t) = inf{k: S_k > t}"""
    sieve_engine.extend_environment(env, level=t)
    return int(np.searchsorted(env.S, t, side="right"))


def renewal_U_estimate(family: FactorFamily, t: float, reps: int,
                       rng: np.random.Generator) -> MonteCarloEstimate:
    """
    U(t) = E ν(t) 的蒙特卡罗估计，每次使用新的环境

    :param family: 因子分布
    :param t: 水平，t >= 0
    :param reps: 重复次数
    :param rng: 随机流，用于派生环境种子
    :return: 估计值与标准误
    """
    if reps < 2:
        raise ValueError("reps 必须 >= 2")
    seeds = rng.integers(0, 2 ** 63 - 1, size=reps)
    values = np.array([first_passage_index(Environment(family, int(s)), t) for s in seeds], dtype=float)
    return MonteCarloEstimate(mean=float(values.mean()),
                              std_error=float(values.std(ddof=1) / math.sqrt(reps)),
                              samples=reps)


def renewal_convolution_estimate(family: FactorFamily, f: Callable[[np.ndarray], np.ndarray],
                                 a: float, b: float, t: float, reps: int,
                                 rng: np.random.Generator) -> MonteCarloEstimate:
    """
    ∫_{[at, bt]} f(t - y) dU(y) = E Σ_{k>=0} f(t - S_k) 1{at <= S_k <= bt} 的蒙特卡罗估计

    :param family: 因子分布
    :param f: 非负函数（向量化）
    :param a: 左端比例
    :param b: 右端比例
    :param t: 尺度
    :param reps: 重复次数
    :param rng: 随机流
    :return: 估计值与标准误
    """
    if not 0.0 <= a < b <= 1.0:
        raise ValueError(f"要求 0 <= a < b <= 1，当前 a={a}, b={b}")
    if reps < 2:
        raise ValueError("reps 必须 >= 2")
    seeds = rng.integers(0, 2 ** 63 - 1, size=reps)
    values = np.empty(reps)
    for i, seed in enumerate(seeds):
        env = sieve_engine.extend_environment(Environment(family, int(seed)), level=b * t)
        S = env.S
        window = S[(S >= a * t) & (S <= b * t)]
        values[i] = float(np.sum(f(t - window)))
    return MonteCarloEstimate(mean=float(values.mean()),
                              std_error=float(values.std(ddof=1) / math.sqrt(reps)),
                              samples=reps)


def conditional_mean_K(env: Environment, t: float) -> float:
    """
    给定环境时 K(e^t) 的条件期望 Σ_{k>=0} (1 - exp(-e^t P_{k+1}))

    第 k+1 个箱子的概率 P_{k+1} = e^{-S_k}(1 - W_{k+1}) = e^{-S_k - η_{k+1}}

    :param env: 环境
    :param t: 对数尺度
    :return: 条件期望
    """
    sieve_engine.extend_environment(env, level=t + _K_TAIL_MARGIN)
    S = env.S
    k_max = int(np.searchsorted(S, t + _K_TAIL_MARGIN, side="right"))
    exponent = t - S[:k_max] - env.eta[1:k_max + 1]
    return float(np.sum(-np.expm1(-np.exp(exponent))))
