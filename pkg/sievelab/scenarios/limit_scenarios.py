# -*- coding: utf-8 -*-
"""
极限过程校准场景
只采样极限侧：R 的几何边缘与平稳性、指数积分、V 的协方差、稳定特征函数以及归一化函数残差
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from sievelab.config.settings import THEOREM3B2_FAMILY
from sievelab.core import factor_models
from sievelab.core.errors import SieveLabError
from sievelab.core.limit_processes import (
    gaussian_covariance,
    sample_frac_integral_inverse,
    sample_scaled_fbm,
    sample_straddle_configuration,
    sample_V,
    sample_stable_increments,
    stable_char_fn,
)
from sievelab.core.stat_tests import (
    chi2_gof,
    chi2_two_sample,
    empirical_char_fn,
    empirical_cov,
    geometric_pmf,
    ks_one_sample,
    tv_distance,
)
from sievelab.models.factor_family import FactorFamily
from sievelab.models.scenario import ScenarioConfig, ScenarioReport
from sievelab.models.statistics import AcceptanceCheck
from sievelab.scenarios.base_scenario import BaseScenario, record_limit_rows, upper_check, value_counts


NORMING_T_GRID = [10.0 ** k for k in range(1, 9)]


def norming_residual_check(family: FactorFamily, t_grid: Sequence[float], threshold: float,
                           name: str = "norming_residual") -> AcceptanceCheck:
    """
    c(t) 代回方程后的最大残差 |t·ℓ(c)/c^α - 1|

    没有根的 t 记为失败

    :param family: 因子分布
    :param t_grid: 自变量
    :param threshold: 阈值
    :param name: 检查名称
    :return: 检查
    """
    residuals: List[float] = []
    solved = True
    for t in t_grid:
        try:
            c = factor_models.norming_c(family, t)
            residuals.append(abs(factor_models.norming_residual(family, t, c)))
        except SieveLabError:
            solved = False
            residuals.append(1.0)
    worst = max(residuals) if residuals else 0.0
    return AcceptanceCheck(name=name, statistic=worst, threshold=threshold, passed=solved and worst < threshold,
                           counts={"t": [float(t) for t in t_grid], "residual": residuals})


def stable_cf_check(alpha: float, increments: np.ndarray, z_points: Sequence[float],
                    threshold: float) -> AcceptanceCheck:
    """
    单位时长稳定增量的经验特征函数与 E exp(izZ_α(1)) 的最大绝对误差

    :param alpha: 稳定指数 ∈ (1,2)
    :param increments: 增量样本
    :param z_points: 检查点
    :param threshold: 阈值
    :return: 检查
    """
    values, se = empirical_char_fn(increments, z_points)
    target = stable_char_fn(alpha, np.asarray(z_points, dtype=float))
    errors = np.abs(values - target)
    return upper_check(f"stable_cf[alpha={alpha:g}]", float(errors.max()), threshold,
                       counts={"z": [float(z) for z in z_points], "abs_error": errors.tolist(),
                               "se_real": se[:, 0].tolist(), "se_imag": se[:, 1].tolist()})


class LimitCalibrationScenario(BaseScenario):
    """
    limit_calibration: 极限过程采样器的校准
    R 与几何分布、R(1) 与 R(e) 的平稳性、∫(u-s)^{-α}dX^← 与 Exp(1)、V 与 fBm 的协方差、
    稳定增量的特征函数以及 c(t) 的残差
    """

    name = "limit_calibration"

    def __init__(self, config: ScenarioConfig, workers: int = 1):
        super().__init__(config, workers)
        self.limit = config.limit
        self.deltas = sorted(self.limit.delta_fractions, reverse=True)

    @property
    def replicate_count(self) -> int:
        return 0

    def replicate(self, index: int, seed: int) -> Any:
        raise NotImplementedError("limit_calibration 没有 sieve 侧重复实验")

    def _r_key(self, c: float) -> str:
        return f"R[c={c:g}]"

    def _stationarity_key(self, u: float) -> str:
        return f"R_stationarity[u={u:g}]"

    def limit_jobs(self) -> List[Tuple[str, int]]:
        n = self.config.limit_samples
        if n == 0:
            return []
        jobs = [(self._r_key(c), n) for c in self.limit.c_values]
        jobs += [(self._stationarity_key(u), n) for u in self.limit.stationarity_u]
        jobs += [("exp_integral", n), ("V", n), ("fbm", n), ("stable_increments", n)]
        return jobs

    def limit_batch(self, key: str, size: int, rng: np.random.Generator) -> np.ndarray:
        alpha = self.limit.alpha
        if key.startswith("R["):
            c = next(c for c in self.limit.c_values if self._r_key(c) == key)
            finest = self.deltas[-1]
            # 同一构型按标记过滤得到各截断水平下的计数
            rows = []
            for _ in range(size):
                configuration = sample_straddle_configuration(alpha, c, finest, 1.0, rng)
                rows.append([configuration.count(1.0, delta) for delta in self.deltas])
            return np.array(rows, dtype=np.int64)
        if key.startswith("R_stationarity"):
            u = next(u for u in self.limit.stationarity_u if self._stationarity_key(u) == key)
            c = self.limit.c_values[0]
            return np.array([sample_straddle_configuration(alpha, c, 1e-3 * u, u, rng).count(u)
                             for _ in range(size)], dtype=np.int64)
        if key == "exp_integral":
            return sample_frac_integral_inverse(alpha, alpha, 1.0, rng, step=self.limit.step, size=size)
        if key == "V":
            return sample_V(self.limit.beta, self.limit.gaussian_grid, rng, size).values
        if key == "fbm":
            return sample_scaled_fbm(self.limit.beta, self.limit.gaussian_grid, rng, size).values
        if key == "stable_increments":
            return sample_stable_increments(self.limit.stable_alpha, 1.0, rng, size=size)
        raise ValueError(f"未知的极限侧任务: {key}")

    def summarize(self, results: Dict[int, Any], limits: Dict[str, np.ndarray],
                  report: ScenarioReport) -> None:
        self._check_geometric(limits, report)
        self._check_stationarity(limits, report)
        self._check_exponential(limits, report)
        self._check_covariance(limits, report)
        if "stable_increments" in limits:
            increments = limits["stable_increments"]
            record_limit_rows(report, self.name, 1.0, increments)
            report.checks.append(stable_cf_check(self.limit.stable_alpha, increments, self.limit.cf_points,
                                                 self.config.threshold("cf_abs", 0.02)))
        family = self.family or FactorFamily.model_validate(THEOREM3B2_FAMILY)
        report.checks.append(norming_residual_check(family, NORMING_T_GRID,
                                                    self.config.threshold("norming_residual", 1e-9)))

    def _check_geometric(self, limits: Dict[str, np.ndarray], report: ScenarioReport) -> None:
        p_threshold = self.config.threshold("geom_p", 0.001)
        tv_threshold = self.config.threshold("geom_tv", 0.01)
        for c in self.limit.c_values:
            samples = limits.get(self._r_key(c))
            if samples is None:
                continue
            reference = geometric_pmf(c)
            distances = [tv_distance(samples[:, j], reference) for j in range(len(self.deltas))]
            finest = samples[:, -1]
            record_limit_rows(report, self.name, 1.0, finest)
            for delta, distance, column in zip(self.deltas, distances, samples.T):
                report.summaries[f"R[c={c:g},delta={delta:g}]"] = {"mean": float(column.mean()),
                                                                    "target_mean": 1.0 / c, "tv": distance}
            gof = chi2_gof(finest, reference)
            report.checks.append(AcceptanceCheck(
                name=f"geom_chi2[c={c:g},delta={self.deltas[-1]:g}]", statistic=gof.statistic,
                p_value=gof.p_value, threshold=p_threshold, passed=gof.p_value > p_threshold,
                counts=value_counts(finest)))
            report.checks.append(upper_check(f"geom_tv[c={c:g},delta={self.deltas[-1]:g}]",
                                             distances[-1], tv_threshold))
            if len(distances) > 1:
                report.checks.append(upper_check(f"geom_tv_improving[c={c:g}]", distances[-1], distances[0],
                                                 counts={"delta": list(self.deltas), "tv": distances}))

    def _check_stationarity(self, limits: Dict[str, np.ndarray], report: ScenarioReport) -> None:
        grid = self.limit.stationarity_u
        samples = [limits.get(self._stationarity_key(u)) for u in grid]
        if len(grid) < 2 or any(s is None for s in samples):
            return
        threshold = self.config.threshold("stat_p", 0.001)
        test = chi2_two_sample(samples[0], samples[-1])
        first, last = value_counts(samples[0]), value_counts(samples[-1])
        report.checks.append(AcceptanceCheck(
            name=f"stationarity[u={grid[0]:g},{grid[-1]:g}]", statistic=test.statistic, p_value=test.p_value,
            threshold=threshold, passed=test.p_value > threshold,
            counts={"first_value": first["value"], "first_count": first["count"],
                    "last_value": last["value"], "last_count": last["count"]}))

    def _check_exponential(self, limits: Dict[str, np.ndarray], report: ScenarioReport) -> None:
        samples = limits.get("exp_integral")
        if samples is None:
            return
        record_limit_rows(report, self.name, 1.0, samples)
        test = ks_one_sample(samples, stats.expon.cdf)
        report.summaries["exp_integral"] = {"mean": float(samples.mean()), "var": float(samples.var(ddof=1)),
                                            "ks": test.statistic}
        report.checks.append(upper_check(f"exp_integral_ks[alpha={self.limit.alpha:g}]", test.statistic,
                                         self.config.threshold("exp_ks", 0.02), p_value=test.p_value))

    def _check_covariance(self, limits: Dict[str, np.ndarray], report: ScenarioReport) -> None:
        beta = self.limit.beta
        grid = np.asarray(self.limit.gaussian_grid, dtype=float)
        clock = grid ** (1.0 - beta)
        targets = {
            "V": gaussian_covariance(beta, grid),
            "fbm": np.add.outer(clock, clock) - np.abs(np.subtract.outer(grid, grid)) ** (1.0 - beta),
        }
        n_se = self.config.threshold("cov_se", 4.0)
        for key, target in targets.items():
            samples = limits.get(key)
            if samples is None:
                continue
            if key == "V":
                for column, u in enumerate(grid):
                    record_limit_rows(report, self.name, float(u), samples[:, column])
            report.checks.append(covariance_check(f"{key}_covariance[beta={beta:g}]", samples, target, n_se,
                                                  grid=grid))


def covariance_check(name: str, samples: np.ndarray, target: np.ndarray, n_se: float,
                     gating: bool = True, grid: Optional[Sequence[float]] = None) -> AcceptanceCheck:
    """
    所有协方差元素都落在 n_se 个刀切法标准误之内

    统计量为 max |cov - target| / SE

    :param name: 检查名称
    :param samples: 形状 (n, m) 的样本
    :param target: 理论协方差
    :param n_se: 允许的标准误倍数
    :param gating: 是否参与退出码判定
    :param grid: 各列对应的网格
    :return: 检查
    """
    cov, se = empirical_cov(samples, grid)
    z = np.abs(cov - target) / np.maximum(se, np.finfo(float).tiny)
    return AcceptanceCheck(name=name, statistic=float(z.max()), threshold=n_se, passed=bool(z.max() <= n_se),
                           gating=gating, counts={"cov": cov.ravel().tolist(), "target": target.ravel().tolist(),
                                                  "se": se.ravel().tolist()})
