# -*- coding: utf-8 -*-
"""
统计检验数据模型
定义离散分布、检验结果、蒙特卡罗估计与验收检查
"""

import math
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DiscretePMF(BaseModel):
    """
    非负整数上的离散分布

    :param support: 取值（升序非负整数）
    :param probs: 对应概率，和为 1
    """
    model_config = ConfigDict(frozen=True)

    support: List[int] = Field(..., description="取值")
    probs: List[float] = Field(..., description="概率")

    @model_validator(mode="after")
    def _check_normalized(self) -> "DiscretePMF":
        if len(self.support) != len(self.probs) or not self.support:
            raise ValueError("support 与 probs 长度必须一致且非空")
        if any(k < 0 for k in self.support) or any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support 必须是严格升序的非负整数")
        if any(p < 0 for p in self.probs):
            raise ValueError("概率必须非负")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"概率之和必须为 1，当前为 {total!r}")
        return self

    def as_dict(self) -> Dict[int, float]:
        return dict(zip(self.support, self.probs))


class TestResult(BaseModel):
    """
    一次检验的结果

    :param statistic: 检验统计量
    :param p_value: p 值
    :param n_effective: 有效样本量
    :param dof: 自由度（卡方检验）
    :param notes: 备注，例如合并后的分箱
    """
    model_config = ConfigDict(frozen=True)
    __test__ = False

    statistic: float
    p_value: float = Field(..., ge=0.0, le=1.0)
    n_effective: int = Field(..., ge=0)
    dof: Optional[int] = None
    notes: str = ""


class MonteCarloEstimate(BaseModel):
    """
    带标准误的蒙特卡罗估计

    :param mean: 估计值
    :param std_error: 标准误
    :param samples: 样本量
    """
    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(..., ge=0.0)
    samples: int = Field(..., ge=1)

    def within(self, target: float, n_se: float = 4.0) -> bool:
        """目标值是否落在 n_se 个标准误之内"""
        return abs(self.mean - target) <= n_se * self.std_error


class AcceptanceCheck(BaseModel):
    """
    场景中的一项验收检查

    :param name: 检查名称
    :param statistic: 统计量
    :param p_value: p 值（没有时为 None）
    :param threshold: 阈值
    :param passed: 是否通过
    :param gating: 是否参与退出码判定
    :param counts: 计算统计量所用的原始计数
    """
    model_config = ConfigDict(frozen=True)

    name: str
    statistic: float
    p_value: Optional[float] = None
    threshold: float
    passed: bool
    gating: bool = True
    counts: Dict[str, List[float]] = Field(default_factory=dict)

    @field_validator("p_value")
    @classmethod
    def _check_p(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"p 值必须位于 [0,1]，当前为 {value}")
        return value
