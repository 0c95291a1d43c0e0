# -*- coding: utf-8 -*-
"""
系统配置管理
负责环境变量配置、场景默认参数以及实验配置文档的解析
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from sievelab.core.errors import ConfigValidationError, ParseError
from sievelab.core.factor_models import validate_hypotheses
from sievelab.models.scenario import THEOREM_SCENARIOS, ScenarioConfig


def _pareto(alpha: float) -> Dict[str, Any]:
    return {"kind": "pareto", "alpha": alpha}


THEOREM1_FAMILY = {"p": 0.3, "q": 0.3, "left_tail": _pareto(0.5), "right_tail": _pareto(0.5)}
THEOREM3A_FAMILY = {"p": 0.5, "q": 0.3, "left_tail": {"kind": "point_mass", "value": 1.0},
                    "right_tail": _pareto(0.4)}
THEOREM3B2_FAMILY = {"p": 0.3, "q": 0.3, "left_tail": {"kind": "pareto2_logvariance"},
                     "right_tail": {"kind": "slow_loglogtail"}}

logger = logging.getLogger("sievelab.settings")

# 报告与 `config` 命令中展示的环境变量及对应属性
ENV_FIELDS = (
    ("DEBUG", "DEBUG"),
    ("LOG_LEVEL", "LOG_LEVEL"),
    ("LOG_DIR", "LOG_DIR"),
    ("OUTPUT_DIR", "OUTPUT_DIR"),
    ("SIEVELAB_WORKERS", "WORKERS"),
    ("SIEVELAB_N_MAX", "N_MAX"),
    ("SIEVELAB_REPLICATES", "REPLICATES"),
    ("SIEVELAB_LIMIT_BATCH", "LIMIT_BATCH"),
)


class Settings:
    """
    系统配置类
    管理所有系统配置参数
    """

    def __init__(self, config_file: Optional[str] = None):
        """
        初始化配置

        :param config_file: .env 文件路径
        """
        if config_file and Path(config_file).exists():
            load_dotenv(config_file)
        else:
            load_dotenv()

        # 基础配置
        self.DEBUG = self._env_flag('DEBUG')
        self.LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
        self.LOG_DIR = os.getenv('LOG_DIR', 'logs')
        self.OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'output')

        # 运行配置，都是正整数
        self.WORKERS = self._env_count('SIEVELAB_WORKERS', 1)
        self.N_MAX = self._env_count('SIEVELAB_N_MAX', 10 ** 8)
        self.REPLICATES = self._env_count('SIEVELAB_REPLICATES', 20000)
        self.LIMIT_BATCH = self._env_count('SIEVELAB_LIMIT_BATCH', 1000)

        # 场景默认配置
        self.SCENARIO_DEFAULTS = self._load_scenario_defaults()

    @staticmethod
    def _env_flag(key: str) -> bool:
        """true/1/yes/on 为真，未设置为假"""
        return os.getenv(key, '').strip().lower() in ('true', '1', 'yes', 'on')

    @staticmethod
    def _env_count(key: str, default: int) -> int:
        """
        读取一个 >= 1 的整数；格式错误或小于 1 时记录警告并使用默认值

        :param key: 环境变量键
        :param default: 默认值
        :return: 正整数
        """
        raw = os.getenv(key)
        if raw is None or not raw.strip():
            return default
        try:
            value = int(raw)
        except ValueError:
            logger.warning(f"{key}={raw!r} 不是整数，使用默认值 {default}")
            return default
        if value < 1:
            logger.warning(f"{key}={value} 必须 >= 1，使用默认值 {default}")
            return default
        return value

    def _load_scenario_defaults(self) -> Dict[str, Dict[str, Any]]:
        """
        加载各场景的默认配置

        :return: 场景默认配置字典
        """
        sieve_grid = {"t_grid": [6.0, 9.0, 12.0], "u_grid": [1.0],
                      "replicates": self.REPLICATES, "capacity": self.N_MAX}
        return {
            'theorem1': {**sieve_grid, "family": THEOREM1_FAMILY, "u_grid": [1.0, 2.0],
                         "limit_samples": 50000,
                         "thresholds": {"tv_final": 0.15, "joint_p": 0.001, "joint_tv": 0.2}},
            'theorem2': {**sieve_grid, "t_grid": [12.0], "limit_samples": 100000,
                         "family": {"p": 0.3, "q": 0.3, "left_tail": _pareto(0.6), "right_tail": _pareto(0.3)},
                         "thresholds": {"mean_rel": 0.15, "ks": 0.2}},
            'theorem3a': {**sieve_grid, "family": THEOREM3A_FAMILY, "thresholds": {"ks_final": 0.15}},
            'theorem3b1': {**sieve_grid, "family": {"p": 0.3, "q": 0.3,
                                                    "left_tail": {"kind": "pareto2_logvariance"},
                                                    "right_tail": _pareto(0.5)}},
            'theorem3b2': {**sieve_grid, "limit_samples": 100000, "family": THEOREM3B2_FAMILY,
                           "thresholds": {"norming_residual": 1e-9}},
            'theorem3c1': {**sieve_grid, "family": {"p": 0.3, "q": 0.3, "left_tail": _pareto(1.5),
                                                    "right_tail": _pareto(0.6)}},
            'theorem3c2': {**sieve_grid, "limit_samples": 100000,
                           "family": {"p": 0.3, "q": 0.3, "left_tail": _pareto(1.5),
                                      "right_tail": _pareto(0.2)},
                           "thresholds": {"norming_residual": 1e-9, "cf_abs": 0.02}},
            'lemma_red': {**sieve_grid, "replicates": 10000, "family": THEOREM1_FAMILY,
                          "thresholds": {"tight_prob": 0.05, "tight_level": 25.0}},
            'depoisson': {**sieve_grid, "replicates": 10000, "t_grid": [6.0, 9.0, 12.0],
                          "family": THEOREM1_FAMILY},
            'oracle_equiv': {"replicates": 1000, "family": THEOREM1_FAMILY, "t_grid": [], "u_grid": [],
                             "thresholds": {"max_balls": 50}},
            'limit_calibration': {"limit_samples": 50000, "t_grid": [], "u_grid": [],
                                  "thresholds": {"geom_p": 0.001, "geom_tv": 0.01, "exp_ks": 0.02,
                                                 "stat_p": 0.001, "cf_abs": 0.02, "cov_se": 4.0,
                                                 "norming_residual": 1e-9}},
            'martingale_clt': {**sieve_grid, "t_grid": [12.0, 100.0, 1000.0], "u_grid": [0.5, 1.0],
                               "family": THEOREM3A_FAMILY, "thresholds": {"cov_rel": 0.3, "cov_se": 4.0}},
        }

    def get_scenario_defaults(self, scenario: str) -> Dict[str, Any]:
        """
        获取指定场景的默认配置

        :param scenario: 场景名称
        :return: 配置字典（深拷贝）
        """
        return copy.deepcopy(self.SCENARIO_DEFAULTS.get(scenario, {}))

    def to_dict(self) -> Dict[str, Any]:
        """
        按环境变量名列出当前取值，最后附上各场景默认配置

        :return: 配置字典
        """
        values: Dict[str, Any] = {key: getattr(self, attribute) for key, attribute in ENV_FIELDS}
        values['SCENARIO_DEFAULTS'] = self.SCENARIO_DEFAULTS
        return values


def _reject_duplicates(pairs: List[Tuple[str, Any]]) -> Dict[str, Any]:
    keys = [key for key, _ in pairs]
    duplicates = sorted({key for key in keys if keys.count(key) > 1})
    if duplicates:
        raise ParseError(f"重复的键: {', '.join(duplicates)}")
    return dict(pairs)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "family":
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _field_path(loc: Tuple) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(text: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """
    解析 JSON 实验配置

    文档中没有给出的字段使用场景默认值；family 整体替换而不是逐字段合并

    :param text: JSON 文本
    :param overrides: 命令行覆盖项（例如 master_seed、workers、output）
    :return: 校验后的配置
    """
    try:
        document = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as e:
        raise ParseError(f"JSON 格式错误: {e}") from e
    if not isinstance(document, dict):
        raise ParseError("配置文档必须是 JSON 对象")
    if "scenario" not in document:
        raise ConfigValidationError("scenario", "缺少场景名称")

    merged = _deep_merge(settings.get_scenario_defaults(str(document["scenario"])), document)
    if overrides:
        merged.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = ScenarioConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigValidationError(_field_path(first["loc"]), first["msg"]) from e

    if config.scenario in THEOREM_SCENARIOS:
        try:
            validate_hypotheses(config.family, config.scenario)
        except ValueError as e:
            raise ConfigValidationError("family", str(e)) from e
    return config


def resolve_workers(cli_workers: Optional[int], config: ScenarioConfig) -> int:
    """
    工作进程数：命令行 > 配置文件 > SIEVELAB_WORKERS

    :param cli_workers: 命令行参数
    :param config: 实验配置
    :return: 工作进程数
    """
    for candidate in (cli_workers, config.workers, settings.WORKERS):
        if candidate is not None and candidate >= 1:
            return int(candidate)
    return 1


# 全局配置实例
settings = Settings()
