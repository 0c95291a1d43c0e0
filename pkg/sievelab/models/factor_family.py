# -*- coding: utf-8 -*-
"""
因子分布数据模型
定义乘法随机游走因子 W 的参数族及其尾部概况
"""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


TailKind = Literal[
    "pareto",
    "pareto2_logvariance",
    "slow_logtail",
    "slow_loglogtail",
    "point_mass",
    "pareto_logcorrected",
]


class TailSpec(BaseModel):
    """
    分支上 V 的分布（V 取值于 [1, ∞)）

    :param kind: 尾部类型
        - pareto: P{V > x} = x^{-alpha}
        - pareto2_logvariance: P{V > x} = x^{-2}，截断二阶矩按对数增长
        - slow_logtail: P{V > x} = 1/(1 + ln x)
        - slow_loglogtail: P{V > x} = 1/(1 + ln(1 + ln x))
        - point_mass: V ≡ value
        - pareto_logcorrected: P{V > x} = x^{-alpha}/(1 + ln x)
    :param alpha: 尾指数（pareto 与 pareto_logcorrected 必填）
    :param value: 点质量的取值（point_mass 必填）
    :param bounded: 允许 value < 1 的有界分支标记
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: TailKind = Field(..., description="尾部类型")
    alpha: Optional[float] = Field(None, gt=0, description="尾指数")
    value: Optional[float] = Field(None, gt=0, description="点质量取值")
    bounded: bool = Field(False, description="有界分支标记")

    @model_validator(mode="after")
    def _check_parameters(self) -> "TailSpec":
        if self.kind in ("pareto", "pareto_logcorrected") and self.alpha is None:
            raise ValueError(f"{self.kind} 需要提供 alpha")
        if self.kind == "point_mass":
            if self.value is None:
                raise ValueError("point_mass 需要提供 value")
            if self.value < 1.0 and not self.bounded:
                raise ValueError("point_mass 的 value 必须 >= 1，或显式设置 bounded=true")
        return self

    @property
    def tail_index(self) -> float:
        """
        P{V > x} 的正则变化指数

        :return: 指数；点质量返回 +inf
        """
        if self.kind in ("pareto", "pareto_logcorrected"):
            return float(self.alpha)
        if self.kind == "pareto2_logvariance":
            return 2.0
        if self.kind in ("slow_logtail", "slow_loglogtail"):
            return 0.0
        return math.inf

    def describe(self) -> str:
        """简短的文字描述"""
        if self.kind in ("pareto", "pareto_logcorrected"):
            return f"{self.kind}({self.alpha:g})"
        if self.kind == "point_mass":
            return f"point_mass({self.value:g})"
        return self.kind


class FactorFamily(BaseModel):
    """
    三分支混合的因子分布

    以概率 p 取 W = e^{-V1}（小 W 分支），以概率 q 取 1 - W = e^{-V2}（大 W 分支），
    其余概率取固定值 filler

    :param p: 小 W 分支权重
    :param q: 大 W 分支权重
    :param left_tail: V1 = |log W| 的分布
    :param right_tail: V2 = |log(1-W)| 的分布
    :param filler: 固定取值 w0
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    p: float = Field(0.0, ge=0.0, le=1.0, description="小 W 分支权重")
    q: float = Field(0.0, ge=0.0, le=1.0, description="大 W 分支权重")
    left_tail: TailSpec = Field(default_factory=lambda: TailSpec(kind="pareto", alpha=0.5))
    right_tail: TailSpec = Field(default_factory=lambda: TailSpec(kind="pareto", alpha=0.5))
    filler: float = Field(0.5, gt=0.0, lt=1.0, description="固定取值 w0")

    @model_validator(mode="after")
    def _check_weights(self) -> "FactorFamily":
        if self.p + self.q > 1.0 + 1e-12:
            raise ValueError(f"p + q 必须 <= 1，当前为 {self.p + self.q:g}")
        return self

    @property
    def filler_weight(self) -> float:
        """固定值分支的权重 1 - p - q"""
        return max(0.0, 1.0 - self.p - self.q)

    def describe(self) -> str:
        """简短的文字描述"""
        return (f"p={self.p:g} {self.left_tail.describe()} / "
                f"q={self.q:g} {self.right_tail.describe()} / w0={self.filler:g}")


class TailProfile(BaseModel):
    """
    因子分布的尾部概况

    :param alpha: |log W| 尾指数
    :param beta: |log(1-W)| 尾指数
    :param c_ratio: alpha = beta 时尾比的极限
    :param mu: E|log W|，可以为 +inf
    :param sigma2: Var(log W)，可以为 +inf
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., ge=0.0)
    beta: float = Field(..., ge=0.0)
    c_ratio: Optional[float] = Field(None, gt=0.0)
    mu: float = Field(..., gt=0.0)
    sigma2: float = Field(..., ge=0.0)

    @property
    def mean_finite(self) -> bool:
        return math.isfinite(self.mu)

    @property
    def variance_finite(self) -> bool:
        return math.isfinite(self.sigma2)
