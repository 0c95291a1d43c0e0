# -*- coding: utf-8 -*-
"""
占位统计数据模型
定义 (K, M, L) 快照与泊松化运行结果
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class OccupancySnapshot(BaseModel):
    """
    某一球数下的占位快照

    :param n: 球数
    :param K: 被占用的箱子数
    :param M: 最后一个被占用箱子的编号
    :param L: 占位范围内的空箱数 M - K
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0, description="球数")
    K: int = Field(..., ge=0, description="被占用箱子数")
    M: int = Field(..., ge=0, description="最后被占用箱子编号")
    L: int = Field(..., ge=0, description="空箱数")

    @model_validator(mode="after")
    def _check_counts(self) -> "OccupancySnapshot":
        if self.L != self.M - self.K:
            raise ValueError(f"L 必须等于 M - K，当前 L={self.L}, M={self.M}, K={self.K}")
        if self.n == 0:
            if self.K or self.M:
                raise ValueError("零个球时 K = M = L = 0")
        elif not 1 <= self.K <= min(self.n, self.M):
            raise ValueError(f"要求 1 <= K <= min(n, M)，当前 n={self.n}, K={self.K}, M={self.M}")
        return self

    @classmethod
    def empty(cls) -> "OccupancySnapshot":
        """零个球的约定快照"""
        return cls(n=0, K=0, M=0, L=0)


class PoissonizedRun(BaseModel):
    """
    泊松化运行结果

    :param t: 强度
    :param N: 实现的 Poisson(t) 球数
    :param snapshot: N 个球时的快照
    :param coupled_snapshot: 同一球流前 [t] 个球时的快照
    """
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., gt=0)
    N: int = Field(..., ge=0)
    snapshot: OccupancySnapshot
    coupled_snapshot: OccupancySnapshot

    @property
    def gap(self) -> int:
        """L(t) - L_[t]"""
        return self.snapshot.L - self.coupled_snapshot.L


class PoissonizationRecord(BaseModel):
    """
    泊松化引理检查的一行记录（对应 CSV 列 t, N, L_poisson, L_fixed, gap, rho, seed）

    :param t: 对数尺度的水平，球数均值为 e^t
    :param N: 泊松球数
    :param L_poisson: L(e^t)
    :param L_fixed: L_[e^t]
    :param rho: 更新泛函 ρ(t)
    :param seed: 重复实验种子
    """
    model_config = ConfigDict(frozen=True)

    t: float
    N: int = Field(..., ge=0)
    L_poisson: int = Field(..., ge=0)
    L_fixed: int = Field(..., ge=0)
    rho: int = Field(..., ge=0)
    seed: int

    @property
    def poissonization_gap(self) -> int:
        """L(e^t) - ρ(t)"""
        return self.L_poisson - self.rho

    @property
    def depoisson_gap(self) -> int:
        """L(e^t) - L_[e^t]"""
        return self.L_poisson - self.L_fixed


class NormingConstants(BaseModel):
    """
    某一 (定理情形, t, u) 下使用的中心化与尺度常数

    统计量为 (L - center) / scale

    :param case: 定理情形
    :param t: 对数尺度参数
    :param u: 时间参数
    :param center: 中心化常数
    :param scale: 尺度常数
    """
    model_config = ConfigDict(frozen=True)

    case: str
    t: float
    u: float
    center: float = 0.0
    scale: float = Field(1.0, gt=0)
