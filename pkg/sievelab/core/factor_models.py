# -*- coding: utf-8 -*-
"""
因子分布计算
三分支混合因子 W 的抽样、|log W| 与 |log(1-W)| 的精确尾概率、矩以及各定理需要的归一化函数
"""

import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import integrate, optimize, special

from sievelab.core.errors import InfiniteMean, NoRoot
from sievelab.models.factor_family import FactorFamily, TailProfile, TailSpec


logger = logging.getLogger("sievelab.factor_models")

ArrayLike = Union[float, np.ndarray]

# 尾分位数的上限，避免 exp(exp(.)) 溢出
V_CAP = 1e300
# pareto_logcorrected 反演的搜索区间 [1, 1e18]
_BISECTION_LOG_HI = math.log(1e18)
_BISECTION_STEPS = 64

# 二分求根区间 [1, 1e12]
_NORMING_LOG_HI = math.log(1e12)

QUAD_EPSABS = 1e-10

# beta 与 2/alpha - 1 比较时的浮点容差
BOUND_TOLERANCE = 1e-12

_NEXT_BELOW_ONE = float(np.nextafter(1.0, 0.0))


def _as_output(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


def cross_threshold(x: ArrayLike) -> ArrayLike:
    """
    h(x) = -log(1 - e^{-x})，h(0) = +inf

    h 是 (0, ∞) 上的对合：h(h(x)) = x。
    -log(1 - e^{-V}) > x 当且仅当 V < h(x)

    :param x: 非负实数或数组
    :return: h(x)
    """
    scalar = np.isscalar(x)
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = -np.log(-np.expm1(-arr))
    return _as_output(out, scalar)


def tail_survival(spec: TailSpec, x: ArrayLike) -> ArrayLike:
    """
    分支尾概率 P{V > x}

    :param spec: 分支分布
    :param x: 实数或数组
    :return: P{V > x}
    """
    scalar = np.isscalar(x)
    arr = np.asarray(x, dtype=float)
    if spec.kind == "point_mass":
        return _as_output((spec.value > arr).astype(float), scalar)

    y = np.maximum(arr, 1.0)
    log_y = np.log(y)
    with np.errstate(over="ignore", divide="ignore"):
        if spec.kind == "pareto":
            out = y ** (-spec.alpha)
        elif spec.kind == "pareto2_logvariance":
            out = y ** (-2.0)
        elif spec.kind == "slow_logtail":
            out = 1.0 / (1.0 + log_y)
        elif spec.kind == "slow_loglogtail":
            out = 1.0 / (1.0 + np.log1p(log_y))
        else:
            out = y ** (-spec.alpha) / (1.0 + log_y)
    out = np.where(arr < 1.0, 1.0, out)
    return _as_output(out, scalar)


def _survival_below(spec: TailSpec, y: ArrayLike) -> ArrayLike:
    """P{V < y}"""
    scalar = np.isscalar(y)
    arr = np.asarray(y, dtype=float)
    if spec.kind == "point_mass":
        return _as_output((spec.value < arr).astype(float), scalar)
    out = 1.0 - np.asarray(tail_survival(spec, arr))
    out = np.where(np.isinf(arr), 1.0, out)
    return _as_output(out, scalar)


def _logcorrected_quantile(alpha: float, u: np.ndarray) -> np.ndarray:
    """x^{-alpha}/(1+ln x) = u 的向量化单调二分，在 y = ln x 上进行"""
    lo = np.zeros_like(u)
    hi = np.full_like(u, _BISECTION_LOG_HI)
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = np.exp(-alpha * mid) / (1.0 + mid) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(0.5 * (lo + hi))


def tail_quantile(spec: TailSpec, u: ArrayLike) -> ArrayLike:
    """
    尾分位数：满足 P{V > x} = u 的 x，u ∈ (0, 1]

    :param spec: 分支分布
    :param u: 概率或数组
    :return: 分位数，截断在 V_CAP
    """
    scalar = np.isscalar(u)
    arr = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        if spec.kind == "point_mass":
            out = np.full_like(arr, spec.value)
        elif spec.kind == "pareto":
            out = arr ** (-1.0 / spec.alpha)
        elif spec.kind == "pareto2_logvariance":
            out = arr ** -0.5
        elif spec.kind == "slow_logtail":
            out = np.exp(1.0 / arr - 1.0)
        elif spec.kind == "slow_loglogtail":
            out = np.exp(np.expm1(1.0 / arr - 1.0))
        else:
            out = _logcorrected_quantile(spec.alpha, arr)
    out = np.minimum(out, V_CAP)
    return _as_output(out, scalar)


def _cross_log(v: np.ndarray) -> np.ndarray:
    """-log(1 - e^{-v})，另一分支对应的对数"""
    with np.errstate(divide="ignore"):
        return -np.log1p(-np.exp(-v))


def sample_log_factors(family: FactorFamily, rng: np.random.Generator,
                       size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    抽取 size 个因子，直接返回 (|log W|, |log(1-W)|)

    每个因子消耗一行两个均匀数：第一个选分支，第二个做逆变换

    :param family: 因子分布
    :param rng: 随机流
    :param size: 样本数
    :return: (xi, eta) 两个数组
    """
    uniforms = rng.random((size, 2))
    branch = uniforms[:, 0]
    tail_u = 1.0 - uniforms[:, 1]

    left = branch < family.p
    right = (~left) & (branch < family.p + family.q)
    rest = ~(left | right)

    xi = np.empty(size)
    eta = np.empty(size)
    if left.any():
        v = np.asarray(tail_quantile(family.left_tail, tail_u[left]))
        xi[left] = v
        eta[left] = _cross_log(v)
    if right.any():
        v = np.asarray(tail_quantile(family.right_tail, tail_u[right]))
        eta[right] = v
        xi[right] = _cross_log(v)
    if rest.any():
        xi[rest] = -math.log(family.filler)
        eta[rest] = -math.log1p(-family.filler)
    return xi, eta


def sample_factors(family: FactorFamily, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    抽取 size 个因子 W，数值上截断在 (0, 1) 内

    :param family: 因子分布
    :param rng: 随机流
    :param size: 样本数
    :return: W 数组
    """
    uniforms = rng.random((size, 2))
    branch = uniforms[:, 0]
    tail_u = 1.0 - uniforms[:, 1]
    w = np.full(size, family.filler)

    left = branch < family.p
    right = (~left) & (branch < family.p + family.q)
    if left.any():
        w[left] = np.exp(-np.asarray(tail_quantile(family.left_tail, tail_u[left])))
    if right.any():
        w[right] = -np.expm1(-np.asarray(tail_quantile(family.right_tail, tail_u[right])))
    return np.clip(w, np.finfo(float).tiny, _NEXT_BELOW_ONE)


def sample_factor(family: FactorFamily, rng: np.random.Generator) -> float:
    """
    抽取单个因子 W ∈ (0, 1)

    :param family: 因子分布
    :param rng: 随机流
    :return: w
    """
    return float(sample_factors(family, rng, 1)[0])


def tail_F(family: FactorFamily, x: ArrayLike) -> ArrayLike:
    """
    P{|log W| > x}

    :param family: 因子分布
    :param x: 非负实数或数组
    :return: 尾概率
    """
    scalar = np.isscalar(x)
    arr = np.asarray(x, dtype=float)
    out = (family.p * np.asarray(tail_survival(family.left_tail, arr))
           + family.q * np.asarray(_survival_below(family.right_tail, cross_threshold(arr)))
           + family.filler_weight * (-math.log(family.filler) > arr))
    return _as_output(out, scalar)


def tail_G(family: FactorFamily, x: ArrayLike) -> ArrayLike:
    """
    P{|log(1-W)| > x}

    :param family: 因子分布
    :param x: 非负实数或数组
    :return: 尾概率
    """
    scalar = np.isscalar(x)
    arr = np.asarray(x, dtype=float)
    out = (family.q * np.asarray(tail_survival(family.right_tail, arr))
           + family.p * np.asarray(_survival_below(family.left_tail, cross_threshold(arr)))
           + family.filler_weight * (-math.log1p(-family.filler) > arr))
    return _as_output(out, scalar)


@lru_cache(maxsize=256)
def _branch_moment(spec: TailSpec, power: int) -> float:
    """E V^power，发散时返回 inf"""
    if spec.kind == "point_mass":
        return spec.value ** power
    if spec.kind == "pareto":
        a = spec.alpha
        return a / (a - power) if a > power else math.inf
    if spec.kind == "pareto2_logvariance":
        return 2.0 if power == 1 else math.inf
    if spec.kind == "pareto_logcorrected" and spec.alpha > power:
        # E V^k = 1 + ∫_1^∞ k y^{k-1} P{V > y} dy
        value, _ = integrate.quad(lambda y: power * y ** (power - 1) * tail_survival(spec, y),
                                  1.0, math.inf, epsabs=QUAD_EPSABS, limit=200)
        return 1.0 + value
    return math.inf


@lru_cache(maxsize=256)
def _cross_moment(spec: TailSpec, power: int) -> float:
    """E[(-log(1 - e^{-V}))^power]，有界项，自适应积分"""
    if spec.kind == "point_mass":
        return float(_cross_log(np.asarray(spec.value))) ** power
    upper = float(cross_threshold(1.0))
    value, _ = integrate.quad(
        lambda y: power * y ** (power - 1) * _survival_below(spec, cross_threshold(y)),
        0.0, upper, epsabs=QUAD_EPSABS, limit=200)
    return value


def mean_log_factor(family: FactorFamily) -> float:
    """
    μ = E|log W|

    :param family: 因子分布
    :return: μ，发散时为 +inf
    """
    left = _branch_moment(family.left_tail, 1) if family.p > 0 else 0.0
    if math.isinf(left):
        return math.inf
    right = _cross_moment(family.right_tail, 1) if family.q > 0 else 0.0
    return family.p * left + family.q * right + family.filler_weight * -math.log(family.filler)


def variance_log_factor(family: FactorFamily) -> float:
    """
    σ² = Var(log W)

    :param family: 因子分布
    :return: σ²，发散时为 +inf
    """
    mu = mean_log_factor(family)
    if math.isinf(mu):
        return math.inf
    left = _branch_moment(family.left_tail, 2) if family.p > 0 else 0.0
    if math.isinf(left):
        return math.inf
    right = _cross_moment(family.right_tail, 2) if family.q > 0 else 0.0
    second = (family.p * left + family.q * right
              + family.filler_weight * math.log(family.filler) ** 2)
    return max(second - mu * mu, 0.0)


def _branch_trunc_second(spec: TailSpec, x: float) -> float:
    """E[V^2 1{V <= x}]"""
    if spec.kind == "point_mass":
        return spec.value ** 2 if spec.value <= x else 0.0
    if spec.kind == "pareto2_logvariance" or (spec.kind == "pareto" and spec.alpha == 2.0):
        return 2.0 * math.log(x)
    if spec.kind == "pareto":
        a = spec.alpha
        return a * (x ** (2.0 - a) - 1.0) / (2.0 - a)
    # 分部积分：1 - x^2 P{V > x} + ∫_1^x 2y P{V > y} dy，在 ln y 上积分
    value, _ = integrate.quad(lambda z: 2.0 * math.exp(2.0 * z) * tail_survival(spec, math.exp(z)),
                              0.0, math.log(x), epsabs=QUAD_EPSABS, limit=200)
    return 1.0 - x * x * tail_survival(spec, x) + value


def trunc_second_moment(family: FactorFamily, x: float) -> float:
    """
    截断二阶矩 E[(log W)^2 1{|log W| <= x}]

    :param family: 因子分布
    :param x: 截断点，x >= 1
    :return: 截断二阶矩
    """
    if x < 1.0:
        raise ValueError(f"截断点必须 >= 1，当前为 {x:g}")
    total = family.p * _branch_trunc_second(family.left_tail, x) if family.p > 0 else 0.0
    if family.q > 0:
        spec = family.right_tail
        if spec.kind == "point_mass":
            c = float(_cross_log(np.asarray(spec.value)))
            total += family.q * (c * c if c <= x else 0.0)
        else:
            # 另一分支的 |log W| <= h(1) < 1 <= x
            total += family.q * _cross_moment(spec, 2)
    a = -math.log(family.filler)
    if a <= x:
        total += family.filler_weight * a * a
    return total


def _uses_second_moment(family: FactorFamily) -> bool:
    return family.left_tail.kind == "pareto2_logvariance"


def _norming_exponent(family: FactorFamily) -> float:
    if _uses_second_moment(family):
        return 2.0
    alpha = family.left_tail.tail_index
    if family.p <= 0 or not 0.0 < alpha < 2.0:
        raise NoRoot(f"左分支 {family.left_tail.describe()} 没有 (0,2) 内的尾指数，无法定义 c(t)")
    return alpha


def norming_residual(family: FactorFamily, t: float, c: float) -> float:
    """
    t·ℓ(c)/c^α - 1，用于检查 norming_c 的结果

    :param family: 因子分布
    :param t: 自变量
    :param c: 候选值
    :return: 残差
    """
    if _uses_second_moment(family):
        return t * trunc_second_moment(family, c) / (c * c) - 1.0
    return t * float(tail_F(family, c)) - 1.0


def norming_c(family: FactorFamily, t: float) -> float:
    """
    归一化函数 c(t)：t·ℓ(c)/c^α = 1 的解

    尾指数情形 ℓ(c)/c^α = P{|log W| > c}，t_min = 1/P{|log W| > 1}；
    pareto2_logvariance 情形 α = 2 且 ℓ 为截断二阶矩，搜索区间从 c = e^{1/2} 开始

    :param family: 因子分布
    :param t: 自变量
    :return: c(t)
    """
    alpha = _norming_exponent(family)
    log_t = math.log(t)

    if (family.left_tail.kind == "pareto" and family.p > 0):
        closed = (family.p * t) ** (1.0 / alpha)
        if closed >= max(1.0, -math.log(family.filler)) and abs(norming_residual(family, t, closed)) < 1e-12:
            return closed

    if _uses_second_moment(family):
        lo = 0.5

        def f(y: float) -> float:
            return log_t + math.log(trunc_second_moment(family, math.exp(y))) - 2.0 * y
    else:
        lo = 0.0

        def f(y: float) -> float:
            tail = float(tail_F(family, math.exp(y)))
            return log_t + (math.log(tail) if tail > 0 else -math.inf)

    f_lo, f_hi = f(lo), f(_NORMING_LOG_HI)
    if not (f_lo >= 0.0 >= f_hi):
        raise NoRoot(f"c(t) 在 [e^{lo:g}, 1e12] 上没有根：t={t:g}, f(lo)={f_lo:.3g}, f(hi)={f_hi:.3g}")
    if f_lo == 0.0:
        return math.exp(lo)
    y = optimize.brentq(f, lo, _NORMING_LOG_HI, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(y)


def _integrated_branch_tail(spec: TailSpec, t: float) -> float:
    """∫_0^t P{V > y} dy"""
    if spec.kind == "point_mass":
        return min(t, spec.value)
    if t <= 1.0:
        return t
    if spec.kind == "pareto":
        b = spec.alpha
        extra = math.log(t) if b == 1.0 else (t ** (1.0 - b) - 1.0) / (1.0 - b)
    elif spec.kind == "pareto2_logvariance":
        extra = 1.0 - 1.0 / t
    elif spec.kind == "slow_logtail":
        # y = e^{z-1}：∫_1^t dy/(1+ln y) = e^{-1}(Ei(1 + ln t) - Ei(1))
        extra = math.exp(-1.0) * (special.expi(1.0 + math.log(t)) - special.expi(1.0))
    else:
        extra, _ = integrate.quad(lambda z: math.exp(z) * tail_survival(spec, math.exp(z)),
                                  0.0, math.log(t), epsabs=QUAD_EPSABS, limit=400)
    return 1.0 + extra


@lru_cache(maxsize=1024)
def _integrated_cross_tail(spec: TailSpec, upper: float) -> float:
    """∫_0^upper P{V < h(y)} dy，被积函数只在 y < h(min V) 上非零"""
    if spec.kind == "point_mass":
        return min(upper, float(cross_threshold(spec.value)))
    end = min(upper, float(cross_threshold(1.0)))
    if end <= 0.0:
        return 0.0
    value, _ = integrate.quad(lambda y: _survival_below(spec, cross_threshold(y)),
                              0.0, end, epsabs=QUAD_EPSABS, limit=200)
    return value


def integrated_tail_G(family: FactorFamily, t: float) -> float:
    """
    ∫_0^t P{|log(1-W)| > y} dy

    :param family: 因子分布
    :param t: 上限，t >= 0
    :return: 积分值
    """
    if t <= 0.0:
        return 0.0
    total = 0.0
    if family.q > 0:
        total += family.q * _integrated_branch_tail(family.right_tail, t)
    if family.p > 0:
        # 交叉项在 y >= h(1) 后为常数，截断上限以便缓存
        upper = min(t, float(cross_threshold(1.0))) if family.left_tail.kind != "point_mass" else t
        total += family.p * _integrated_cross_tail(family.left_tail, upper)
    total += family.filler_weight * min(t, -math.log1p(-family.filler))
    return total


def norming_q(family: FactorFamily, t: float) -> float:
    """
    q(t) = sqrt(μ^{-1} ∫_0^t P{|log(1-W)| > y} dy)

    :param family: 因子分布
    :param t: 自变量，t >= 0
    :return: q(t)
    """
    mu = mean_log_factor(family)
    if math.isinf(mu):
        raise InfiniteMean(f"E|log W| = ∞，q(t) 无定义（{family.describe()}）")
    return math.sqrt(integrated_tail_G(family, t) / mu)


def norming_g(family: FactorFamily, t: float, case: str) -> float:
    """
    g(t)：定理3 情形 a、b2、c2 的尺度函数

    :param family: 因子分布
    :param t: 自变量
    :param case: "a"、"b2" 或 "c2"
    :return: g(t)
    """
    mu = mean_log_factor(family)
    if math.isinf(mu):
        raise InfiniteMean(f"E|log W| = ∞，g(t) 无定义（{family.describe()}）")
    tail = float(tail_G(family, t))
    if case == "a":
        sigma2 = variance_log_factor(family)
        if math.isinf(sigma2):
            raise InfiniteMean("Var(log W) = ∞，情形 a 的 g(t) 无定义")
        return math.sqrt(sigma2 * mu ** -3 * t) * tail
    if case == "b2":
        return mu ** -1.5 * norming_c(family, t) * tail
    if case == "c2":
        alpha = family.left_tail.tail_index
        return mu ** (-1.0 - 1.0 / alpha) * norming_c(family, t) * tail
    raise ValueError(f"未知的 g(t) 情形: {case}")


def theorem2_ratio(family: FactorFamily, t: float) -> float:
    """
    (1 - F(t)) / (1 - G(t))

    :param family: 因子分布
    :param t: 自变量，t >= 1
    :return: 尾比
    """
    return float(tail_F(family, t)) / float(tail_G(family, t))


def tail_profile(family: FactorFamily) -> TailProfile:
    """
    汇总因子分布的尾指数、尾比极限与矩

    :param family: 因子分布
    :return: 尾部概况
    """
    alpha = family.left_tail.tail_index if family.p > 0 else math.inf
    beta = family.right_tail.tail_index if family.q > 0 else math.inf
    c_ratio = None
    left, right = family.left_tail, family.right_tail
    if family.p > 0 and family.q > 0 and left.kind == right.kind and left.alpha == right.alpha:
        c_ratio = family.p / family.q
    return TailProfile(alpha=alpha, beta=beta, c_ratio=c_ratio,
                       mu=mean_log_factor(family), sigma2=variance_log_factor(family))


def _regularly_varying_right(family: FactorFamily) -> float:
    """右分支的正则变化指数 β ∈ [0, 1)，不满足时抛出 ValueError"""
    spec = family.right_tail
    if family.q <= 0 or spec.kind in ("point_mass", "pareto2_logvariance"):
        raise ValueError(f"|log(1-W)| 的尾部必须正则变化且指数 < 1，当前为 {spec.describe()}")
    beta = spec.tail_index
    if beta >= 1.0:
        raise ValueError(f"beta 必须位于 [0,1)，当前 beta={beta:g}")
    return beta


def validate_hypotheses(family: FactorFamily, case: str) -> None:
    """
    检查因子分布是否满足某个定理的条件

    :param family: 因子分布
    :param case: theorem1、theorem2、theorem3a、theorem3b1、theorem3b2、theorem3c1、theorem3c2
    """
    left, right = family.left_tail, family.right_tail
    if family.p <= 0 or family.q <= 0:
        raise ValueError("定理场景要求 p > 0 且 q > 0")

    if case == "theorem1":
        if left.kind != "pareto" or right.kind != "pareto":
            raise ValueError("theorem1 要求左右分支都是 pareto")
        if not 0.0 < left.alpha < 1.0:
            raise ValueError(f"alpha 必须位于 (0,1)，当前 alpha={left.alpha:g}")
        if left.alpha != right.alpha:
            raise ValueError(f"theorem1 要求 alpha_left = alpha_right，当前 {left.alpha:g} != {right.alpha:g}")
        return

    if case == "theorem2":
        alpha = left.tail_index
        if left.kind not in ("pareto", "pareto_logcorrected") or not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha 必须位于 (0,1)，当前为 {left.describe()}")
        beta = _regularly_varying_right(family)
        if beta > alpha:
            raise ValueError(f"theorem2 要求 beta <= alpha，当前 beta={beta:g} > alpha={alpha:g}")
        if beta == alpha and not (left.kind == "pareto_logcorrected" and right.kind == "pareto"):
            raise ValueError("alpha = beta 时要求尾比趋于 0（左分支使用 pareto_logcorrected）")
        return

    if case == "theorem3a":
        if math.isinf(variance_log_factor(family)):
            raise ValueError("theorem3a 要求 Var(log W) < ∞")
        _regularly_varying_right(family)
        return

    if case in ("theorem3b1", "theorem3b2"):
        if left.kind != "pareto2_logvariance":
            raise ValueError(f"{case} 要求左分支为 pareto2_logvariance")
        if case == "theorem3b1":
            if right.kind != "pareto" or not 0.0 < right.alpha < 1.0:
                raise ValueError("theorem3b1 要求右分支 pareto(beta)，beta ∈ (0,1)")
        elif right.kind != "slow_loglogtail":
            raise ValueError("theorem3b2 要求右分支为 slow_loglogtail（beta = 0）")
        return

    if case in ("theorem3c1", "theorem3c2"):
        if left.kind != "pareto" or not 1.0 < left.alpha < 2.0:
            raise ValueError(f"alpha 必须位于 (1,2)，当前为 {left.describe()}")
        beta = _regularly_varying_right(family)
        bound = 2.0 / left.alpha - 1.0
        # 边界 beta = 2/alpha - 1 归入 c2
        on_c2_side = beta <= bound + BOUND_TOLERANCE
        if case == "theorem3c1" and not (right.kind == "pareto" and not on_c2_side):
            raise ValueError(f"theorem3c1 要求右分支 pareto 且 beta > 2/alpha - 1 = {bound:g}")
        if case == "theorem3c2" and not on_c2_side:
            raise ValueError(f"theorem3c2 要求 beta <= 2/alpha - 1 = {bound:g}，当前 beta={beta:g}")
        return

    raise ValueError(f"未知的定理情形: {case}")
