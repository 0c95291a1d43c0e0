# -*- coding: utf-8 -*-
"""
极限过程数据模型
定义从属过程路径、标记点集、跨越构型、高斯网格样本与稳定 Lévy 路径
"""

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SubordinatorPath(BaseModel):
    """
    等距网格上的 α-稳定从属过程路径，X(r_i) 的网格为 r_i = i·step

    :param alpha: 稳定指数 ∈ (0,1)
    :param step: 网格步长
    :param values: X(r_0), ..., X(r_m)，X(0) = 0
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float = Field(..., gt=0.0, lt=1.0)
    step: float = Field(..., gt=0.0)
    values: np.ndarray

    @model_validator(mode="after")
    def _check_path(self) -> "SubordinatorPath":
        if self.values.ndim != 1 or len(self.values) == 0 or self.values[0] != 0.0:
            raise ValueError("路径必须是以 X(0) = 0 开头的一维数组")
        if np.any(np.diff(self.values) < 0):
            raise ValueError("从属过程路径必须非减")
        return self

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(len(self.values))

    @property
    def horizon(self) -> float:
        return self.step * (len(self.values) - 1)


class MarkedPointSet(BaseModel):
    """
    截断在 j > delta 的 Poisson 随机测度的点 (t_k, j_k)

    :param alpha: 标记的尾指数
    :param c: 强度常数，ν((x, ∞]) = x^{-alpha}/c
    :param delta: 截断水平
    :param horizon: 时间区间 [0, horizon]
    :param times: 点的时间
    :param marks: 点的标记
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float = Field(..., gt=0.0)
    c: float = Field(..., gt=0.0)
    delta: float = Field(..., gt=0.0)
    horizon: float = Field(..., ge=0.0)
    times: np.ndarray
    marks: np.ndarray

    @model_validator(mode="after")
    def _check_points(self) -> "MarkedPointSet":
        if self.times.shape != self.marks.shape:
            raise ValueError("times 与 marks 长度必须一致")
        if np.any(self.marks <= self.delta):
            raise ValueError("所有标记必须大于 delta")
        return self

    def __len__(self) -> int:
        return len(self.times)

    def thin(self, delta: float) -> "MarkedPointSet":
        """
        保留标记大于新截断水平的点

        :param delta: 新的截断水平，>= 当前 delta
        :return: 子点集
        """
        if delta < self.delta:
            raise ValueError(f"只能提高截断水平: {delta} < {self.delta}")
        keep = self.marks > delta
        return self.model_copy(update={"delta": delta, "times": self.times[keep], "marks": self.marks[keep]})


class StraddleConfiguration(BaseModel):
    """
    在 Poisson 随机测度各点的时间上精确取值的从属过程

    :param alpha: 稳定指数
    :param c: 强度常数
    :param delta: 截断水平
    :param positions: X_α(t_k)，按 t_k 升序
    :param marks: j_k
    :param level: 构型覆盖的水平，所有 X_α(t_k) <= level 的点都已包含
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float = Field(..., gt=0.0, lt=1.0)
    c: float = Field(..., gt=0.0)
    delta: float = Field(..., gt=0.0)
    positions: np.ndarray
    marks: np.ndarray
    level: float = Field(..., ge=0.0)

    def count(self, u: float, delta: float = 0.0) -> int:
        """
        R^{(δ)}(u) = Σ_k 1{X(t_k) <= u < X(t_k) + j_k, j_k > δ}

        :param u: 时间参数，u <= level
        :param delta: 截断水平，不低于构型的 delta
        :return: 跨越 u 的点数
        """
        if u > self.level:
            raise ValueError(f"u={u} 超出构型覆盖的水平 {self.level}")
        threshold = max(delta, self.delta)
        hit = (self.positions <= u) & (self.positions + self.marks > u) & (self.marks > threshold)
        return int(np.count_nonzero(hit))

    def counts(self, u_list: List[float], delta: float = 0.0) -> List[int]:
        return [self.count(u, delta) for u in u_list]


class GaussianGridSample(BaseModel):
    """
    网格上的高斯过程样本

    :param beta: 协方差参数 ∈ [0,1)
    :param grid: 升序网格
    :param values: 形状 (size, len(grid)) 的样本
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    beta: float = Field(..., ge=0.0, lt=1.0)
    grid: List[float]
    values: np.ndarray


class StablePath(BaseModel):
    """
    等距网格上的 α-稳定 Lévy 过程路径

    :param alpha: 稳定指数 ∈ (1,2)
    :param step: 网格步长
    :param values: Z(0) = 0, Z(step), ...
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float = Field(..., gt=1.0, lt=2.0)
    step: float = Field(..., gt=0.0)
    values: np.ndarray

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)
