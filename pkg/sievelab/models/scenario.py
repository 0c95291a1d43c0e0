# -*- coding: utf-8 -*-
"""
场景数据模型
定义实验配置、报告以及写入 CSV 的行
"""

import math
from datetime import datetime
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sievelab.models.factor_family import FactorFamily
from sievelab.models.occupancy import NormingConstants, PoissonizationRecord
from sievelab.models.statistics import AcceptanceCheck


ScenarioName = Literal[
    "theorem1", "theorem2",
    "theorem3a", "theorem3b1", "theorem3b2", "theorem3c1", "theorem3c2",
    "lemma_red", "depoisson", "oracle_equiv", "limit_calibration", "martingale_clt",
]

THEOREM_SCENARIOS = (
    "theorem1", "theorem2",
    "theorem3a", "theorem3b1", "theorem3b2", "theorem3c1", "theorem3c2",
)

# 不投球的场景，t 不受 max_log_balls 限制
BALL_FREE_SCENARIOS = ("limit_calibration", "martingale_clt")


class LimitParameters(BaseModel):
    """
    极限侧采样参数

    :param alpha: 从属过程稳定指数 ∈ (0,1)
    :param c_values: R 的强度常数
    :param delta_fractions: R 的截断水平（相对 u）
    :param stationarity_u: 平稳性检查的两个时间点
    :param beta: 高斯过程 V 的参数
    :param gaussian_grid: V 的网格
    :param stable_alpha: 稳定 Lévy 过程的指数 ∈ (1,2)
    :param cf_points: 特征函数检查点
    :param step: 逆从属过程网格步长（None 时使用默认值）
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(0.5, gt=0.0, lt=1.0)
    c_values: List[float] = Field(default_factory=lambda: [1.0, 3.0])
    delta_fractions: List[float] = Field(default_factory=lambda: [1e-2, 1e-3])
    stationarity_u: List[float] = Field(default_factory=lambda: [1.0, math.e])
    beta: float = Field(0.4, ge=0.0, lt=1.0)
    gaussian_grid: List[float] = Field(default_factory=lambda: [1.0, 2.0])
    stable_alpha: float = Field(1.5, gt=1.0, lt=2.0)
    cf_points: List[float] = Field(default_factory=lambda: [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    step: Optional[float] = Field(None, gt=0.0)

    @field_validator("c_values", "delta_fractions")
    @classmethod
    def _check_positive(cls, values: List[float]) -> List[float]:
        if not values or any(v <= 0 for v in values):
            raise ValueError("取值必须为正且非空")
        return values


class ScenarioConfig(BaseModel):
    """
    一次场景运行的配置

    :param scenario: 场景名称
    :param family: 因子分布（limit_calibration 不需要）
    :param t_grid: 对数尺度网格（升序）
    :param u_grid: 时间参数网格（升序）
    :param replicates: sieve 侧重复次数
    :param limit_samples: 极限侧样本数
    :param master_seed: 主种子
    :param capacity: 单次重复的球数上限
    :param max_log_balls: u·t 的上限（martingale_clt 与 limit_calibration 不受限）
    :param thresholds: 验收阈值，覆盖场景默认值
    :param limit: 极限侧参数
    :param output: 输出目录
    :param workers: 工作进程数
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: ScenarioName
    family: Optional[FactorFamily] = None
    t_grid: List[float] = Field(default_factory=list)
    u_grid: List[float] = Field(default_factory=lambda: [1.0])
    replicates: int = Field(20000, ge=1)
    limit_samples: int = Field(50000, ge=0)
    master_seed: int = Field(0, ge=0)
    capacity: int = Field(10 ** 8, ge=1)
    max_log_balls: float = Field(13.0, gt=0.0)
    thresholds: Dict[str, float] = Field(default_factory=dict)
    limit: LimitParameters = Field(default_factory=LimitParameters)
    output: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("t_grid", "u_grid")
    @classmethod
    def _check_ascending(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("网格取值必须为正")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"网格必须严格升序: {values}")
        return values

    @model_validator(mode="after")
    def _check_scenario(self) -> "ScenarioConfig":
        if self.scenario != "limit_calibration" and self.family is None:
            raise ValueError(f"{self.scenario} 需要提供 family")
        if self.t_grid and self.u_grid and self.scenario not in BALL_FREE_SCENARIOS:
            largest = self.t_grid[-1] * self.u_grid[0]
            if largest > self.max_log_balls:
                raise ValueError(f"u·t = {largest:g} 超过上限 {self.max_log_balls:g}")
        return self

    def pairs(self) -> List[Tuple[float, float]]:
        """满足 u·t <= max_log_balls 的 (t, u) 组合"""
        return [(t, u) for t in self.t_grid for u in self.u_grid if u * t <= self.max_log_balls + 1e-12]

    def threshold(self, name: str, default: float) -> float:
        return self.thresholds.get(name, default)

    def echo(self) -> Dict:
        """写入报告的配置回显，不含与结果无关的 workers 与 output"""
        return self.model_dump(mode="json", exclude={"workers", "output"})


class OccupancyRow(BaseModel):
    """occupancy.csv 的一行"""
    model_config = ConfigDict(frozen=True)

    scenario: str
    t: float
    u: float
    replicate: int
    n: int
    K: int
    M: int
    L: int
    statistic: float


class LimitRow(BaseModel):
    """limits.csv 的一行"""
    model_config = ConfigDict(frozen=True)

    scenario: str
    u: float
    sample_index: int
    value: float


class RuntimeInfo(BaseModel):
    """
    运行信息，不参与确定性比较

    :param started_at: 开始时间
    :param wall_clock: 耗时（秒）
    :param workers: 工作进程数
    :param versions: 依赖版本
    """
    started_at: datetime
    wall_clock: float = Field(..., ge=0.0)
    workers: int = Field(..., ge=1)
    versions: Dict[str, str] = Field(default_factory=dict)


class ScenarioReport(BaseModel):
    """
    场景报告

    除 runtime 外的部分只依赖配置与主种子

    :param scenario: 场景名称
    :param config: 配置回显
    :param norming: 各 (t, u) 使用的中心化与尺度常数
    :param constants: 其他常数（μ、c(t)、q(t)、g(t)、尾比）
    :param summaries: 各 (t, u) 的经验统计量
    :param checks: 验收检查
    :param occupancy: 每次重复的占位结果
    :param limits: 极限侧样本
    :param poisson: 泊松化记录
    :param failures: 失败的重复实验编号与原因
    :param runtime: 运行信息
    """
    scenario: str
    config: Dict
    norming: List[NormingConstants] = Field(default_factory=list)
    constants: Dict[str, Optional[float]] = Field(default_factory=dict)
    summaries: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    checks: List[AcceptanceCheck] = Field(default_factory=list)
    occupancy: List[OccupancyRow] = Field(default_factory=list)
    limits: List[LimitRow] = Field(default_factory=list)
    poisson: List[PoissonizationRecord] = Field(default_factory=list)
    failures: Dict[int, str] = Field(default_factory=dict)
    runtime: Optional[RuntimeInfo] = None

    @property
    def passed(self) -> bool:
        """所有参与判定的检查都通过，且没有失败的重复实验"""
        return not self.failures and all(check.passed for check in self.checks if check.gating)

    def body(self) -> Dict:
        """用于确定性比较的报告主体"""
        return self.model_dump(mode="json", exclude={"runtime"})
