# -*- coding: utf-8 -*-
"""
场景基类
定义场景的通用接口：重复实验、极限侧批次、汇总，以及并行运行
"""

import logging
import math
import platform
import time
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Type

import numpy as np
import pydantic
import scipy

from sievelab import __version__
from sievelab.config.settings import settings
from sievelab.core.errors import ReplicateError, SieveLabError
from sievelab.core.seeding import derive_seed, limit_stream
from sievelab.models.scenario import LimitRow, RuntimeInfo, ScenarioConfig, ScenarioReport
from sievelab.models.statistics import AcceptanceCheck


# 工作进程内的场景实例，由 _init_worker 设置
_WORKER_SCENARIO: Optional["BaseScenario"] = None


def _init_worker(scenario_class: Type["BaseScenario"], config: ScenarioConfig) -> None:
    global _WORKER_SCENARIO
    _WORKER_SCENARIO = scenario_class(config)


def _run_replicate(index: int) -> Tuple[int, Any, Optional[str]]:
    return _WORKER_SCENARIO.safe_replicate(index)


def _run_limit_batch(task: Tuple[str, int, int]) -> Tuple[str, np.ndarray]:
    key, size, batch = task
    return _WORKER_SCENARIO.run_limit_batch(key, size, batch)


class BaseScenario(ABC):
    """
    场景基类
    定义所有场景必须实现的接口
    """

    name: str = "base"

    def __init__(self, config: ScenarioConfig, workers: int = 1):
        """
        初始化场景

        :param config: 实验配置
        :param workers: 工作进程数
        """
        self.config = config
        self.family = config.family
        self.workers = workers
        self.logger = logging.getLogger(f"scenario.{self.name}")
        self._executor: Optional[ProcessPoolExecutor] = None

    def seed(self, index: int) -> int:
        """重复实验 index 的种子"""
        return derive_seed(self.config.master_seed, index)

    @property
    def replicate_count(self) -> int:
        return self.config.replicates

    @abstractmethod
    def replicate(self, index: int, seed: int) -> Any:
        """
        执行一次重复实验

        :param index: 重复实验编号
        :param seed: 派生种子
        :return: 可序列化的结果
        """
        pass

    def limit_jobs(self) -> List[Tuple[str, int]]:
        """
        极限侧采样任务 (名称, 样本数)

        :return: 任务列表，默认没有
        """
        return []

    def limit_batch(self, key: str, size: int, rng: np.random.Generator) -> np.ndarray:
        """
        采样一个极限侧批次

        :param key: 任务名称
        :param size: 本批样本数
        :param rng: 本批随机流
        :return: 样本数组（首维为样本）
        """
        raise NotImplementedError(f"{self.name} 没有极限侧任务 {key}")

    @abstractmethod
    def summarize(self, results: Dict[int, Any], limits: Dict[str, np.ndarray],
                  report: ScenarioReport) -> None:
        """
        汇总重复实验与极限侧样本，填充报告

        :param results: 成功的重复实验结果，按编号
        :param limits: 极限侧样本，按任务名称
        :param report: 待填充的报告
        """
        pass

    def validate_config(self) -> bool:
        """
        验证配置参数

        :return: 配置是否有效
        """
        return True

    def safe_replicate(self, index: int) -> Tuple[int, Any, Optional[str]]:
        """执行重复实验并捕获数值错误"""
        try:
            return index, self.replicate(index, self.seed(index)), None
        except (SieveLabError, ValueError, FloatingPointError) as e:
            return index, None, str(ReplicateError(index, e))

    def run_limit_batch(self, key: str, size: int, batch: int) -> Tuple[str, np.ndarray]:
        return key, np.asarray(self.limit_batch(key, size, limit_stream(self.config.master_seed, batch)))

    def _limit_tasks(self) -> List[Tuple[str, int, int]]:
        tasks = []
        batch = 0
        for key, total in self.limit_jobs():
            for begin in range(0, total, settings.LIMIT_BATCH):
                tasks.append((key, min(settings.LIMIT_BATCH, total - begin), batch))
                batch += 1
        return tasks

    def _map(self, fn, items: List) -> Iterator:
        if self.workers <= 1 or len(items) <= 1:
            global _WORKER_SCENARIO
            _WORKER_SCENARIO = self
            return map(fn, items)
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers, initializer=_init_worker,
                                                 initargs=(type(self), self.config))
        chunksize = max(1, len(items) // (self.workers * 8))
        return self._executor.map(fn, items, chunksize=chunksize)

    def run(self) -> ScenarioReport:
        """
        运行场景：并行执行重复实验与极限侧批次，按编号顺序合并

        :return: 场景报告
        """
        started = datetime.now()
        clock = time.perf_counter()
        self.logger.info(f"开始运行场景 {self.name}: {self.replicate_count} 次重复，{self.workers} 个进程")

        results: Dict[int, Any] = {}
        failures: Dict[int, str] = {}
        progress_step = max(1, self.replicate_count // 10)
        for index, value, error in self._map(_run_replicate, list(range(self.replicate_count))):
            if error is None:
                results[index] = value
            else:
                failures[index] = error
                self.logger.error(error)
            if (index + 1) % progress_step == 0:
                self.logger.info(f"已完成 {index + 1}/{self.replicate_count} 次重复")

        limits: Dict[str, List[np.ndarray]] = {}
        tasks = self._limit_tasks()
        if tasks:
            self.logger.info(f"极限侧采样: {len(tasks)} 个批次")
        for key, samples in self._map(_run_limit_batch, tasks):
            limits.setdefault(key, []).append(samples)
        merged = {key: np.concatenate(parts) for key, parts in limits.items()}

        report = ScenarioReport(scenario=self.name, config=self.config.echo(), failures=failures)
        self.summarize(results, merged, report)
        for check in report.checks:
            level = logging.INFO if check.passed or not check.gating else logging.WARNING
            self.logger.log(level, f"检查 {check.name}: 统计量={check.statistic:.6g} 阈值={check.threshold:g} "
                                   f"{'通过' if check.passed else '未通过'}")

        report.runtime = RuntimeInfo(
            started_at=started,
            wall_clock=time.perf_counter() - clock,
            workers=self.workers,
            versions={"sievelab": __version__, "python": platform.python_version(),
                      "numpy": np.__version__, "scipy": scipy.__version__, "pydantic": pydantic.VERSION},
        )
        self.logger.info(f"场景 {self.name} 完成，用时 {report.runtime.wall_clock:.1f}s，"
                         f"{'全部通过' if report.passed else '存在未通过的检查'}")
        return report

    def cleanup(self) -> None:
        """
        关闭进程池
        """
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        """上下文管理器入口"""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """上下文管理器出口"""
        self.cleanup()


def ordered_values(results: Dict[int, Any]) -> List[Any]:
    """按重复实验编号排列的结果"""
    return [results[i] for i in sorted(results)]


def finite_or_none(value: float) -> Optional[float]:
    """无穷与 NaN 在报告中记为 null"""
    return value if value is not None and math.isfinite(value) else None


def pair_key(t: float, u: float) -> str:
    """summaries 中 (t, u) 的键"""
    return f"t={t:g},u={u:g}"


def value_counts(samples: Sequence[int]) -> Dict[str, List[float]]:
    """整数样本的取值与频数，作为检查的原始计数"""
    values, counts = np.unique(np.asarray(samples, dtype=np.int64), return_counts=True)
    return {"value": values.tolist(), "count": counts.tolist()}


def decrease_check(name: str, grid: Sequence[float], values: Sequence[float],
                   gating: bool = True, tolerances: Optional[Sequence[float]] = None) -> AcceptanceCheck:
    """
    values 沿 grid 下降的检查，统计量为相邻差值减去容差后的最大值，小于 0 即通过

    :param name: 检查名称
    :param grid: 网格（例如 t）
    :param values: 各网格点上的距离或比例
    :param gating: 是否参与退出码判定
    :param tolerances: 每一步允许的上升量（噪声水平）；None 时要求严格下降
    :return: 检查
    """
    steps = [b - a for a, b in zip(values, values[1:])]
    slack = [0.0] * len(steps) if tolerances is None else [float(tol) for tol in tolerances]
    if len(slack) != len(steps):
        raise ValueError(f"容差个数 {len(slack)} 与步数 {len(steps)} 不一致")
    excess = [step - tol for step, tol in zip(steps, slack)]
    counts = {"grid": [float(g) for g in grid], "value": [float(v) for v in values]}
    if tolerances is not None:
        counts["tolerance"] = slack
    return AcceptanceCheck(name=name, statistic=max(excess) if excess else 0.0, threshold=0.0,
                           passed=all(e < 0 for e in excess), gating=gating, counts=counts)


def upper_check(name: str, statistic: float, threshold: float, gating: bool = True,
                p_value: Optional[float] = None,
                counts: Optional[Dict[str, List[float]]] = None) -> AcceptanceCheck:
    """统计量小于阈值即通过的检查"""
    return AcceptanceCheck(name=name, statistic=float(statistic), p_value=p_value, threshold=threshold,
                           passed=bool(statistic < threshold), gating=gating, counts=counts or {})


def record_limit_rows(report: ScenarioReport, scenario: str, u: float, samples: np.ndarray) -> None:
    """把一列极限侧样本写入 limits 表"""
    report.limits.extend(LimitRow.model_construct(scenario=scenario, u=u, sample_index=i, value=float(v))
                         for i, v in enumerate(np.asarray(samples, dtype=float)))
