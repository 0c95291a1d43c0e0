# -*- coding: utf-8 -*-
"""
种子派生
重复实验 i 的种子只依赖 (master_seed, i)，与工作进程数无关
"""

import numpy as np


# spawn_key 的第一个分量区分种子流
SIEVE_STREAM = 0
LIMIT_STREAM = 1
REFERENCE_STREAM = 2


def derive_seed(master_seed: int, index: int, stream: int = SIEVE_STREAM) -> int:
    """
    由主种子与编号派生一个 63 位非负整数种子

    :param master_seed: 主种子
    :param index: 重复实验或批次编号
    :param stream: 种子流（SIEVE_STREAM、LIMIT_STREAM 或 REFERENCE_STREAM）
    :return: 派生种子
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, index))
    return int(seq.generate_state(1, dtype=np.uint64)[0]) >> 1


def ball_stream(seed: int) -> np.random.Generator:
    """重复实验的球流；环境流为 default_rng([seed, 0])"""
    return np.random.default_rng([seed, 1])


def limit_stream(master_seed: int, batch: int) -> np.random.Generator:
    """极限侧批次 batch 的随机流"""
    return np.random.default_rng(derive_seed(master_seed, batch, LIMIT_STREAM))


def reference_stream(master_seed: int, index: int = 0) -> np.random.Generator:
    """汇总阶段在主进程内使用的随机流（参考分布的自助抽样、混合 Poisson 离散化）"""
    return np.random.default_rng(derive_seed(master_seed, index, REFERENCE_STREAM))
