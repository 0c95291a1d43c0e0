# -*- coding: utf-8 -*-
"""
引理与辅助场景
泊松化差值、去泊松化差值、朴素对照以及更新泛函的鞅中心极限
"""

import math
from typing import Any, Dict, List, Tuple

import numpy as np

from sievelab.core import factor_models
from sievelab.core.limit_processes import gaussian_covariance
from sievelab.core.poissonized import poissonized_record
from sievelab.core.seeding import ball_stream
from sievelab.core.sieve_engine import (
    Environment,
    allocate_energies,
    martingale_part,
    occupancy_oracle,
    predictable_covariation,
)
from sievelab.models.occupancy import NormingConstants, PoissonizationRecord
from sievelab.models.scenario import ScenarioConfig, ScenarioReport
from sievelab.models.statistics import AcceptanceCheck
from sievelab.scenarios.base_scenario import BaseScenario, decrease_check, finite_or_none, ordered_values, upper_check


# 朴素对照每次补充的因子个数
ORACLE_BLOCK = 16


class LemmaRedScenario(BaseScenario):
    """
    lemma_red: 泊松化差值 L(e^t) - ρ(t)
    E|log W| = ∞ 时平均 |差值| 随 t 严格下降，否则检查差值的紧性
    """

    name = "lemma_red"

    def replicate(self, index: int, seed: int) -> List[PoissonizationRecord]:
        env = Environment(self.family, seed)
        rng = ball_stream(seed)
        return [poissonized_record(env, t, rng, seed=seed, capacity=self.config.capacity)
                for t in self.config.t_grid]

    def validate_config(self) -> bool:
        if not self.config.t_grid:
            self.logger.error("t_grid 不能为空")
            return False
        if math.exp(self.config.t_grid[-1]) > self.config.capacity:
            self.logger.error(f"e^t = {math.exp(self.config.t_grid[-1]):.3g} 超过容量 {self.config.capacity}")
            return False
        return True

    def collect(self, results: Dict[int, List[PoissonizationRecord]],
                report: ScenarioReport) -> Dict[float, Tuple[np.ndarray, np.ndarray]]:
        """写入泊松化记录，返回各 t 上的 (泊松化差值, 去泊松化差值)"""
        rows = ordered_values(results)
        for records in rows:
            report.poisson.extend(records)
        gaps = {}
        for column, t in enumerate(self.config.t_grid):
            red = np.array([records[column].poissonization_gap for records in rows])
            depois = np.array([records[column].depoisson_gap for records in rows])
            report.summaries[f"t={t:g}"] = {
                "mean_abs_poissonization_gap": float(np.abs(red).mean()),
                "mean_poissonization_gap": float(red.mean()),
                "prob_depoisson_gap_nonzero": float(np.mean(depois != 0)),
                "mean_N": float(np.mean([records[column].N for records in rows])),
            }
            gaps[t] = (red, depois)
        return gaps

    def summarize(self, results: Dict[int, Any], limits: Dict[str, np.ndarray],
                  report: ScenarioReport) -> None:
        mu = factor_models.mean_log_factor(self.family)
        report.constants["mu"] = finite_or_none(mu)
        if not results:
            self.logger.error("没有成功的重复实验")
            return
        gaps = self.collect(results, report)
        self.check(gaps, math.isinf(mu), report)

    def check(self, gaps: Dict[float, Tuple[np.ndarray, np.ndarray]], infinite_mean: bool,
              report: ScenarioReport) -> None:
        grid = self.config.t_grid
        mean_abs = [float(np.abs(gaps[t][0]).mean()) for t in grid]
        report.checks.append(decrease_check("poissonization_gap_decreasing", grid, mean_abs, gating=infinite_mean))

        level = self.config.threshold("tight_level", 25.0)
        exceed = [float(np.mean(np.abs(gaps[t][0]) > level)) for t in grid]
        report.checks.append(upper_check(f"poissonization_gap_tight[level={level:g}]", max(exceed),
                                         self.config.threshold("tight_prob", 0.05), gating=not infinite_mean,
                                         counts={"t": list(grid), "exceed": exceed}))


class DepoissonScenario(LemmaRedScenario):
    """
    depoisson: 去泊松化差值 L(e^t) - L_[e^t]
    P{差值 != 0} 随 t 严格下降
    """

    name = "depoisson"

    def check(self, gaps, infinite_mean, report) -> None:
        grid = self.config.t_grid
        nonzero = [float(np.mean(gaps[t][1] != 0)) for t in grid]
        report.checks.append(decrease_check("depoisson_gap_decreasing", grid, nonzero))


class OracleEquivalenceScenario(BaseScenario):
    """
    oracle_equiv: 向量化的分配与朴素线性扫描逐个比较 (K, M, L)
    随机球数 n ∈ [1, max_balls]，不允许任何不一致
    """

    name = "oracle_equiv"

    def replicate(self, index: int, seed: int) -> Tuple[int, Tuple[int, int, int], Tuple[int, int, int]]:
        factor_rng = np.random.default_rng([seed, 0])
        rng = ball_stream(seed)
        n = int(rng.integers(1, int(self.config.threshold("max_balls", 50)) + 1))
        u = 1.0 - rng.random(n)
        lowest = float(u.min())

        w: List[float] = []
        product = 1.0
        while product >= lowest:
            block = factor_models.sample_factors(self.family, factor_rng, ORACLE_BLOCK).tolist()
            for value in block:
                w.append(value)
                product *= value
                if product < lowest:
                    break

        oracle = occupancy_oracle(w, u.tolist())
        engine = allocate_energies(Environment.from_factors(w), -np.log(u), [n])[0]
        return n, (oracle.K, oracle.M, oracle.L), (engine.K, engine.M, engine.L)

    def summarize(self, results: Dict[int, Any], limits: Dict[str, np.ndarray],
                  report: ScenarioReport) -> None:
        mismatched = [i for i in sorted(results) if results[i][1] != results[i][2]]
        for i in mismatched:
            self.logger.error(f"重复实验 {i}: 朴素结果 {results[i][1]} != 分配结果 {results[i][2]}")
        report.summaries["oracle"] = {
            "instances": float(len(results)),
            "mismatches": float(len(mismatched)),
            "mean_n": float(np.mean([results[i][0] for i in results])) if results else 0.0,
        }
        report.checks.append(AcceptanceCheck(name="oracle_mismatches", statistic=float(len(mismatched)),
                                             threshold=0.0, passed=not mismatched and bool(results),
                                             counts={"mismatched": [float(i) for i in mismatched]}))


def covariation_check(name: str, parts: np.ndarray, covariation: np.ndarray, n_se: float,
                      gating: bool = True) -> AcceptanceCheck:
    """
    M(a)M(b) 减去可料协变差的样本均值应为 0，统计量为各项 |均值| / 标准误的最大值

    :param name: 检查名称
    :param parts: 鞅部分，形状 (重复次数, 网格点数)
    :param covariation: 可料协变差，形状 (重复次数, 网格点数, 网格点数)
    :param n_se: 允许的标准误倍数
    :param gating: 是否参与退出码判定
    :return: 检查
    """
    diff = parts[:, :, None] * parts[:, None, :] - covariation
    mean = diff.mean(axis=0)
    se = diff.std(axis=0, ddof=1) / math.sqrt(len(diff))
    z = np.divide(np.abs(mean), se, out=np.zeros_like(mean), where=se > 0)
    return upper_check(name, float(z.max()), n_se, gating=gating,
                       counts={"mean": mean.ravel().tolist(), "se": se.ravel().tolist()})


class MartingaleCLTScenario(BaseScenario):
    """
    martingale_clt: (ρ(ut) - 条件期望) / q(t) 的协方差趋于 u_j^{1-β} - (u_j - u_i)^{1-β}

    每个 t 上 M(a)M(b) 与可料协变差的均值差以标准误计，全部 t 参与判定；
    与极限协方差的最大相对误差只在最大 t 上参与判定
    """

    name = "martingale_clt"

    def __init__(self, config: ScenarioConfig, workers: int = 1):
        super().__init__(config, workers)
        self.beta = self.family.right_tail.tail_index

    def validate_config(self) -> bool:
        if math.isinf(factor_models.mean_log_factor(self.family)):
            self.logger.error("martingale_clt 要求 E|log W| < ∞")
            return False
        return bool(self.config.t_grid)

    def replicate(self, index: int, seed: int) -> List[Tuple[List[float], List[List[float]]]]:
        env = Environment(self.family, seed)
        blocks = []
        for t in self.config.t_grid:
            levels = [u * t for u in self.config.u_grid]
            parts = [martingale_part(env, self.family, level) for level in levels]
            covariation = [[predictable_covariation(env, self.family, a, b) for b in levels] for a in levels]
            blocks.append((parts, covariation))
        return blocks

    def summarize(self, results: Dict[int, Any], limits: Dict[str, np.ndarray],
                  report: ScenarioReport) -> None:
        if not results:
            self.logger.error("没有成功的重复实验")
            return
        rows = ordered_values(results)
        target = gaussian_covariance(self.beta, self.config.u_grid)
        report.constants["mu"] = finite_or_none(factor_models.mean_log_factor(self.family))

        for block, t in enumerate(self.config.t_grid):
            q = factor_models.norming_q(self.family, t)
            report.constants[f"q(t={t:g})"] = q
            report.norming.extend(NormingConstants(case=self.name, t=t, u=u, scale=q) for u in self.config.u_grid)
            parts = np.array([row[block][0] for row in rows], dtype=float)
            covariation = np.array([row[block][1] for row in rows], dtype=float)
            samples = parts / q
            cov = np.cov(samples, rowvar=False).reshape(len(self.config.u_grid), -1)
            finite = covariation.mean(axis=0) / q ** 2
            relative = np.abs(cov - target) / np.abs(target)
            report.summaries[f"t={t:g}"] = {"max_relative_error": float(relative.max()),
                                            "finite_relative_error": float((np.abs(finite - target)
                                                                            / np.abs(target)).max()),
                                            "replicates": float(len(samples))}
            gating = t == self.config.t_grid[-1]
            report.checks.append(upper_check(f"covariance_relative[t={t:g}]", float(relative.max()),
                                             self.config.threshold("cov_rel", 0.3), gating=gating,
                                             counts={"cov": cov.ravel().tolist(), "target": target.ravel().tolist(),
                                                     "finite_target": finite.ravel().tolist()}))
            if len(samples) > 1:
                report.checks.append(covariation_check(f"covariance_se[t={t:g}]", parts, covariation,
                                                       self.config.threshold("cov_se", 4.0)))
