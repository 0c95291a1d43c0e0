# -*- coding: utf-8 -*-
"""
极限过程采样器
α-稳定从属过程及其逆、Poisson 随机测度、R_{α,c}(u)、分数阶积分、高斯过程 V 与稳定 Lévy 过程
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from sievelab.core.errors import GridTooCoarse, GridTooFine, NotCovered, NotPSD
from sievelab.models.limits import (
    GaussianGridSample,
    MarkedPointSet,
    StablePath,
    StraddleConfiguration,
    SubordinatorPath,
)


logger = logging.getLogger("sievelab.limit_processes")

MAX_GRID = 10 ** 7
MAX_GAUSSIAN_GRID = 2000

# 逆从属过程网格：默认步长为期望越过时间的 1e-4
DEFAULT_STEP_FRACTION = 1e-4
# 距离水平小于 NEAR_FACTOR 个增量尺度时加密 10 倍
NEAR_FACTOR = 10.0
MAX_REFINEMENTS = 6
_LEVEL0_CHUNK = 4096
_REFINED_CHUNK = 64

# sample_R 的默认截断 δ = 1e-3·u
DEFAULT_DELTA_FRACTION = 1e-3

JITTERS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

# Lévy 驱动积分：最后一个格子逐级细分 10 倍的层数
LEVY_REFINE_LEVELS = 6
LEVY_BATCH = 1000


def _weron_stable(alpha: float, beta: float, size: Union[int, Tuple[int, ...]],
                  rng: np.random.Generator) -> np.ndarray:
    """
    S1 参数化下的标准稳定变量 (alpha != 1, 尺度 1, 位置 0)

    特征函数 exp(-|z|^α (1 - iβ sign(z) tan(πα/2)))
    """
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    tan_term = beta * math.tan(math.pi * alpha / 2)
    shift = math.atan(tan_term) / alpha
    scale = (1.0 + tan_term ** 2) ** (1.0 / (2.0 * alpha))
    return (scale * np.sin(alpha * (v + shift)) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * (v + shift)) / w) ** ((1.0 - alpha) / alpha))


def sample_positive_stable(alpha: float, rng: np.random.Generator,
                           size: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    正稳定变量 s，E e^{-zs} = e^{-z^α}（Kanter 表示）

    :param alpha: 稳定指数 ∈ (0,1)
    :param rng: 随机流
    :param size: 样本数；None 时返回单个浮点数
    :return: 样本
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha 必须位于 (0,1)，当前 alpha={alpha}")
    n = 1 if size is None else size
    angle = rng.uniform(0.0, math.pi, n)
    w = rng.standard_exponential(n)
    s = (np.sin(alpha * angle) / np.sin(angle) ** (1.0 / alpha)
         * (np.sin((1.0 - alpha) * angle) / w) ** ((1.0 - alpha) / alpha))
    return float(s[0]) if size is None else s


def subordinator_scale(alpha: float, dt: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """时长 dt 的增量 X(r + dt) - X(r) ≐ (Γ(1-α)dt)^{1/α}·s"""
    return (special.gamma(1.0 - alpha) * dt) ** (1.0 / alpha)


def expected_crossing_time(alpha: float, u: float) -> float:
    """E X^←(u) = u^α / (Γ(1+α)Γ(1-α))"""
    return u ** alpha / (special.gamma(1.0 + alpha) * special.gamma(1.0 - alpha))


def sample_subordinator_path(alpha: float, horizon: float, step: float,
                             rng: np.random.Generator) -> SubordinatorPath:
    """
    在网格 r_i = i·step 上采样 X_α，Laplace 指数为 Γ(1-α)z^α

    :param alpha: 稳定指数 ∈ (0,1)
    :param horizon: 时间上限 T
    :param step: 步长 Δ
    :param rng: 随机流
    :return: 路径
    """
    if step <= 0:
        raise ValueError(f"步长必须为正，当前 step={step}")
    if horizon < 0:
        raise ValueError(f"horizon 必须非负，当前 horizon={horizon}")
    m = int(math.ceil(horizon / step - 1e-12)) if horizon > 0 else 0
    if m > MAX_GRID:
        raise GridTooFine(f"网格点数 {m} 超过上限 {MAX_GRID}，请增大步长")
    increments = subordinator_scale(alpha, step) * sample_positive_stable(alpha, rng, m) if m else np.empty(0)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return SubordinatorPath(alpha=alpha, step=step, values=values)


def inverse_subordinator_eval(path: SubordinatorPath, s: float) -> Tuple[float, float]:
    """
    X^←(s) = inf{r: X(r) > s}，取第一个满足 X(r_i) > s 的网格时间

    :param path: 路径
    :param s: 水平，s >= 0
    :return: (取值, 偏差上界 Δ)，真实值位于 [取值 - Δ, 取值]
    """
    if path.values[-1] <= s:
        raise NotCovered(f"路径在 T={path.horizon:g} 时 X={path.values[-1]:.6g}，没有越过水平 {s}")
    index = int(np.searchsorted(path.values, s, side="right"))
    return index * path.step, path.step


def frac_integral_on_path(path: SubordinatorPath, gamma: float, u: float) -> float:
    """
    在给定路径上计算 Σ_{X(r_i) <= u} (u - X(r_i))^{-γ}·Δ

    γ = 0 时等于 inverse_subordinator_eval(path, u) 的取值

    :param path: 覆盖水平 u 的路径
    :param gamma: 核指数 ∈ [0,1)
    :param u: 水平
    :return: 网格和
    """
    if path.values[-1] <= u:
        raise NotCovered(f"路径没有越过水平 {u}")
    below = path.values[path.values <= u]
    return float(np.sum((u - below) ** -gamma) * path.step)


def _frac_integral_single(alpha: float, gamma: float, u: float, step: float,
                          rng: np.random.Generator) -> float:
    """
    自适应网格上的单条路径积分

    位置离水平 u 不足 NEAR_FACTOR 个增量尺度时，不丢弃路径重新采样，而是从当前位置起把步长缩小 10 倍继续生成；
    加密只依赖已生成的前缀（当前位置到水平的距离），因此路径的分布不受影响。
    加密 MAX_REFINEMENTS 次仍离水平太近时抛出 GridTooCoarse
    """
    x = 0.0
    total = 0.0
    dt = step
    level = 0
    chunk = _LEVEL0_CHUNK
    while True:
        scale = subordinator_scale(alpha, dt)
        near_gap = NEAR_FACTOR * scale
        positions = x + np.concatenate(([0.0], np.cumsum(scale * sample_positive_stable(alpha, rng, chunk))))
        stop_mask = (positions > u) | (u - positions < near_gap)
        if not stop_mask.any():
            total += float(np.sum((u - positions[:-1]) ** -gamma)) * dt
            x = float(positions[-1])
            continue
        stop = int(np.argmax(stop_mask))
        total += float(np.sum((u - positions[:stop]) ** -gamma)) * dt
        if positions[stop] > u:
            return total
        if level == MAX_REFINEMENTS:
            raise GridTooCoarse(f"加密 {MAX_REFINEMENTS} 次后距离 u 仍小于 {near_gap:.3g}")
        x = float(positions[stop])
        level += 1
        dt /= 10.0
        chunk = _REFINED_CHUNK


def sample_frac_integral_inverse(alpha: float, gamma: float, u: float, rng: np.random.Generator,
                                 step: Optional[float] = None,
                                 size: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    ∫_{[0,u]} (u-s)^{-γ} dX^←(s) = ∫_0^{X^←(u)} (u - X(r))^{-γ} dr 的网格和

    在水平附近自动加密网格：位置与 u 的距离小于 10 倍增量尺度时步长缩小 10 倍，
    代替拒绝该路径后用更细的网格重新采样

    :param alpha: 稳定指数 ∈ (0,1)
    :param gamma: 核指数 ∈ [0,1)
    :param u: 上限
    :param rng: 随机流
    :param step: 初始步长，默认 1e-4·E X^←(u)
    :param size: 样本数；None 时返回单个浮点数
    :return: 样本
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha 必须位于 (0,1)，当前 alpha={alpha}")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma 必须位于 [0,1)，当前 gamma={gamma}")
    if u <= 0:
        raise ValueError(f"u 必须为正，当前 u={u}")
    dt = step if step is not None else DEFAULT_STEP_FRACTION * expected_crossing_time(alpha, u)
    n = 1 if size is None else size
    values = np.array([_frac_integral_single(alpha, gamma, u, dt, rng) for _ in range(n)])
    return float(values[0]) if size is None else values


def sample_prm(alpha: float, c: float, delta: float, horizon: float,
               rng: np.random.Generator) -> MarkedPointSet:
    """
    [0, horizon] × (delta, ∞) 上的 Poisson 随机测度，强度 dt × ν，ν((x, ∞]) = x^{-α}/c

    :param alpha: 标记尾指数
    :param c: 强度常数
    :param delta: 截断水平
    :param horizon: 时间上限
    :param rng: 随机流
    :return: 点集（时间升序）
    """
    if delta <= 0 or c <= 0:
        raise ValueError("delta 与 c 必须为正")
    count = int(rng.poisson(horizon * delta ** -alpha / c))
    times = np.sort(rng.uniform(0.0, horizon, count))
    marks = delta * (1.0 - rng.random(count)) ** (-1.0 / alpha)
    return MarkedPointSet(alpha=alpha, c=c, delta=delta, horizon=horizon, times=times, marks=marks)


def sample_straddle_configuration(alpha: float, c: float, delta: float, level: float,
                                  rng: np.random.Generator,
                                  window: Optional[float] = None) -> StraddleConfiguration:
    """
    生成 Poisson 随机测度的点，并在点的时间上精确采样从属过程，直到 X 越过 level

    相邻点之间的增量为独立的稳定变量，按窗口逐段生成

    :param alpha: 稳定指数 ∈ (0,1)
    :param c: 强度常数
    :param delta: 截断水平
    :param level: 需要覆盖的水平
    :param rng: 随机流
    :param window: 窗口长度，默认 2·E X^←(level)
    :return: 跨越构型
    """
    if level < 0:
        raise ValueError(f"level 必须非负，当前 level={level}")
    width = window if window is not None else 2.0 * expected_crossing_time(alpha, max(level, 1e-12))
    x = 0.0
    positions: List[np.ndarray] = []
    marks: List[np.ndarray] = []
    while x <= level:
        points = sample_prm(alpha, c, delta, width, rng)
        gaps = np.diff(np.concatenate(([0.0], points.times, [width])))
        cumulative = x + np.cumsum(subordinator_scale(alpha, gaps) * sample_positive_stable(alpha, rng, len(gaps)))
        positions.append(cumulative[:-1])
        marks.append(points.marks)
        x = float(cumulative[-1])
    return StraddleConfiguration(alpha=alpha, c=c, delta=delta, positions=np.concatenate(positions),
                                 marks=np.concatenate(marks), level=level)


def sample_R(alpha: float, c: float, u: float, rng: np.random.Generator,
             delta: Optional[float] = None) -> int:
    """
    R^{(δ)}_{α,c}(u) = Σ_k 1{X(t_k) <= u < X(t_k) + j_k}

    :param alpha: 稳定指数 ∈ (0,1)
    :param c: 强度常数
    :param u: 时间参数
    :param rng: 随机流
    :param delta: 截断水平，默认 1e-3·u
    :return: 计数
    """
    delta = delta if delta is not None else DEFAULT_DELTA_FRACTION * u
    return sample_straddle_configuration(alpha, c, delta, u, rng).count(u)


def sample_R_process(alpha: float, c: float, u_grid: Sequence[float], rng: np.random.Generator,
                     delta: Optional[float] = None) -> List[int]:
    """
    同一构型上的 (R(u_1), ..., R(u_m))

    :param alpha: 稳定指数
    :param c: 强度常数
    :param u_grid: 时间参数
    :param rng: 随机流
    :param delta: 截断水平，默认 1e-3·min(u)
    :return: 计数列表
    """
    delta = delta if delta is not None else DEFAULT_DELTA_FRACTION * min(u_grid)
    config = sample_straddle_configuration(alpha, c, delta, max(u_grid), rng)
    return config.counts(list(u_grid))


def sample_R_batch(alpha: float, c: float, u_grid: Sequence[float], size: int,
                   rng: np.random.Generator, delta: Optional[float] = None) -> np.ndarray:
    """形状 (size, len(u_grid)) 的 R 过程样本"""
    return np.array([sample_R_process(alpha, c, u_grid, rng, delta) for _ in range(size)], dtype=np.int64)


def sample_R_mixed_poisson(alpha: float, c: float, u: float, rng: np.random.Generator,
                           size: int = 1, step: Optional[float] = None) -> np.ndarray:
    """
    以随机参数 c^{-1}∫(u-s)^{-α}dX^←(s) 的 Poisson 变量构造 R(u)

    :param alpha: 稳定指数
    :param c: 强度常数
    :param u: 时间参数
    :param rng: 随机流
    :param size: 样本数
    :param step: 逆从属过程网格步长
    :return: 整数样本
    """
    intensity = np.asarray(sample_frac_integral_inverse(alpha, alpha, u, rng, step=step, size=size))
    return rng.poisson(intensity / c)


def gaussian_covariance(beta: float, u_grid: Sequence[float]) -> np.ndarray:
    """E V(t)V(s) = t^{1-β} - (t-s)^{1-β}，s <= t"""
    grid = np.asarray(u_grid, dtype=float)
    upper = np.maximum.outer(grid, grid)
    lower = np.minimum.outer(grid, grid)
    return upper ** (1.0 - beta) - (upper - lower) ** (1.0 - beta)


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.diag(cov))), 1.0)
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(cov + jitter * scale * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            logger.debug(f"Cholesky 失败，抖动 {jitter:g} 不足")
    raise NotPSD(f"协方差矩阵在抖动 {JITTERS[-1]:g} 下仍不是正定的")


def _check_grid(u_grid: Sequence[float]) -> List[float]:
    grid = [float(u) for u in u_grid]
    if not grid or len(grid) > MAX_GAUSSIAN_GRID:
        raise ValueError(f"网格大小必须位于 [1, {MAX_GAUSSIAN_GRID}]")
    if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"网格必须是严格升序的正数: {grid}")
    return grid


def sample_V(beta: float, u_grid: Sequence[float], rng: np.random.Generator,
             size: int = 1) -> GaussianGridSample:
    """
    中心化高斯过程 V 在网格上的样本

    :param beta: 协方差参数 ∈ [0,1)
    :param u_grid: 严格升序的正网格
    :param rng: 随机流
    :param size: 样本数
    :return: 样本，形状 (size, len(u_grid))
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta 必须位于 [0,1)，当前 beta={beta}")
    grid = _check_grid(u_grid)
    factor = _cholesky_with_jitter(gaussian_covariance(beta, grid))
    values = rng.standard_normal((size, len(grid))) @ factor.T
    return GaussianGridSample(beta=beta, grid=grid, values=values)


def sample_scaled_fbm(beta: float, u_grid: Sequence[float], rng: np.random.Generator,
                      size: int = 1) -> GaussianGridSample:
    """
    V(s) + B(s^{1-β})，B 为独立的布朗运动

    协方差为 t^{1-β} + s^{1-β} - |t-s|^{1-β}，即尺度化的分数布朗运动

    :param beta: 协方差参数
    :param u_grid: 严格升序的正网格
    :param rng: 随机流
    :param size: 样本数
    :return: 样本
    """
    v = sample_V(beta, u_grid, rng, size)
    clock = np.asarray(v.grid) ** (1.0 - beta)
    variances = np.diff(np.concatenate(([0.0], clock)))
    brownian = np.cumsum(rng.standard_normal((size, len(clock))) * np.sqrt(variances), axis=1)
    return GaussianGridSample(beta=beta, grid=v.grid, values=v.values + brownian)


def stable_char_fn(alpha: float, z: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
    """
    E exp(izZ_α(1)) = exp(-|z|^α Γ(1-α)(cos(πα/2) + i sin(πα/2) sign(z)))

    :param alpha: 稳定指数 ∈ (1,2)
    :param z: 自变量
    :return: 特征函数值
    """
    z_arr = np.asarray(z, dtype=float)
    phase = np.cos(math.pi * alpha / 2) + 1j * np.sin(math.pi * alpha / 2) * np.sign(z_arr)
    out = np.exp(-np.abs(z_arr) ** alpha * special.gamma(1.0 - alpha) * phase)
    return complex(out) if np.isscalar(z) else out


def stable_scale(alpha: float, dt: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    时长 dt 的增量在 S1(α, β=-1, σ, 0) 下的尺度 σ = (Γ(1-α)cos(πα/2)·dt)^{1/α}

    α ∈ (1,2) 时 Γ(1-α) 与 cos(πα/2) 都为负，乘积为正
    """
    return (special.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2) * dt) ** (1.0 / alpha)


def sample_stable_increments(alpha: float, dt: Union[float, np.ndarray], rng: np.random.Generator,
                             size: Optional[Union[int, Tuple[int, ...]]] = None) -> np.ndarray:
    """
    稳定 Lévy 过程在时长 dt 上的独立增量

    :param alpha: 稳定指数 ∈ (1,2)
    :param dt: 时长（可以是数组，与 size 广播）
    :param rng: 随机流
    :param size: 样本形状，默认为 dt 的形状
    :return: 增量
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha 必须位于 (1,2)，当前 alpha={alpha}")
    shape = size if size is not None else np.shape(dt)
    return stable_scale(alpha, dt) * _weron_stable(alpha, -1.0, shape, rng)


def sample_stable_levy_path(alpha: float, horizon: float, step: float,
                            rng: np.random.Generator) -> StablePath:
    """
    特征函数为 stable_char_fn 的 α-稳定 Lévy 过程路径

    :param alpha: 稳定指数 ∈ (1,2)
    :param horizon: 时间上限
    :param step: 步长
    :param rng: 随机流
    :return: 路径
    """
    if step <= 0:
        raise ValueError(f"步长必须为正，当前 step={step}")
    m = int(math.ceil(horizon / step - 1e-12)) if horizon > 0 else 0
    if m > MAX_GRID:
        raise GridTooFine(f"网格点数 {m} 超过上限 {MAX_GRID}")
    increments = sample_stable_increments(alpha, step, rng, size=m)
    return StablePath(alpha=alpha, step=step, values=np.concatenate(([0.0], np.cumsum(increments))))


def refined_grid(u: float, step: float, levels: int = LEVY_REFINE_LEVELS) -> Tuple[np.ndarray, np.ndarray]:
    """
    [0, u] 上的网格：等距步长 step，最后一个格子逐级细分 10 倍

    :param u: 上限
    :param step: 基础步长
    :param levels: 细分层数
    :return: (左端点, 格子长度)
    """
    m = max(int(round(u / step)), 1)
    base = u / m
    lefts = [base * np.arange(m - 1)]
    lengths = [np.full(m - 1, base)]
    start, width = u - base, base
    for _ in range(levels):
        width /= 10.0
        lefts.append(start + width * np.arange(9))
        lengths.append(np.full(9, width))
        start += 9 * width
    lefts.append(np.array([start]))
    lengths.append(np.array([u - start]))
    return np.concatenate(lefts), np.concatenate(lengths)


def sample_frac_integral_levy(driver: str, beta: float, u: float, rng: np.random.Generator,
                              step: Optional[float] = None, size: Optional[int] = None,
                              alpha: Optional[float] = None) -> Union[float, np.ndarray]:
    """
    ∫_{[0,u]} (u-s)^{-β} dZ(s) 的 Riemann-Stieltjes 和，核取左端点

    :param driver: "brownian" 或 "stable"
    :param beta: 核指数
    :param u: 上限
    :param rng: 随机流
    :param step: 基础步长，默认 1e-3·u
    :param size: 样本数；None 时返回单个浮点数
    :param alpha: stable 驱动的稳定指数 ∈ (1,2)
    :return: 样本
    """
    if driver == "stable":
        if alpha is None or not 1.0 < alpha < 2.0:
            raise ValueError(f"stable 驱动需要 alpha ∈ (1,2)，当前 alpha={alpha}")
        if beta > 2.0 / alpha - 1.0:
            raise ValueError(f"要求 beta <= 2/alpha - 1 = {2.0 / alpha - 1.0:g}")
    elif driver != "brownian":
        raise ValueError(f"未知的驱动: {driver}")
    if beta < 0:
        raise ValueError(f"beta 必须非负，当前 beta={beta}")

    lefts, lengths = refined_grid(u, step if step is not None else 1e-3 * u)
    kernel = (u - lefts) ** -beta
    n = 1 if size is None else size
    out = np.empty(n)
    for begin in range(0, n, LEVY_BATCH):
        rows = min(LEVY_BATCH, n - begin)
        if driver == "brownian":
            increments = rng.standard_normal((rows, len(lengths))) * np.sqrt(lengths)
        else:
            increments = sample_stable_increments(alpha, lengths, rng, size=(rows, len(lengths)))
        out[begin:begin + rows] = increments @ kernel
    return float(out[0]) if size is None else out
