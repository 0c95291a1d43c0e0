# -*- coding: utf-8 -*-
"""
异常定义
所有数值模块与场景运行器抛出的异常都继承自 SieveLabError
"""

from typing import Optional


class SieveLabError(Exception):
    """系统异常基类"""


class NoRoot(SieveLabError):
    """归一化函数的单调区间求根失败"""


class InfiniteMean(SieveLabError):
    """需要有限的 E|log W|，但因子分布的均值为无穷"""


class CapacityExceeded(SieveLabError):
    """球数超过配置的容量上限"""


class InsufficientEnvironment(SieveLabError):
    """给定的固定环境不足以覆盖全部球"""


class NotCovered(SieveLabError):
    """从属过程路径没有越过所求水平"""


class GridTooFine(SieveLabError):
    """网格点数超过上限"""


class GridTooCoarse(SieveLabError):
    """网格相对于越过水平时的欠冲过粗，需要加密"""


class NotPSD(SieveLabError):
    """协方差矩阵在最大抖动下仍不是正定的"""


class TooFewSamples(SieveLabError):
    """样本量不足以进行检验"""


class DegenerateBins(SieveLabError):
    """合并分箱后剩余的箱数少于 2"""


class ParseError(SieveLabError):
    """实验配置文档格式错误"""


class ConfigValidationError(SieveLabError):
    """
    实验配置校验失败

    :param field_path: 出错字段的路径，例如 family.left_tail.alpha
    :param message: 错误信息
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        self.message = message
        super().__init__(f"{field_path}: {message}" if field_path else message)


class ReplicateError(SieveLabError):
    """
    单个重复实验失败

    :param index: 重复实验编号
    :param cause: 原始异常
    """

    def __init__(self, index: int, cause: Optional[BaseException] = None):
        self.index = index
        self.cause = cause
        super().__init__(f"重复实验 {index} 失败: {cause}")


class ReportIOError(SieveLabError):
    """报告写入或读取失败"""
