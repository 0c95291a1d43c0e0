# -*- coding: utf-8 -*-
"""
场景工厂
负责注册和创建不同类型的实验场景
"""

import logging
from typing import Dict, Type

from sievelab.models.scenario import ScenarioConfig
from sievelab.scenarios.base_scenario import BaseScenario


class ScenarioFactory:
    """
    场景工厂类
    使用工厂模式创建和管理场景实例
    """

    _scenarios: Dict[str, Type[BaseScenario]] = {}
    _logger = logging.getLogger("scenario.factory")

    @classmethod
    def register_scenario(cls, name: str, scenario_class: Type[BaseScenario]) -> None:
        """
        注册场景类

        :param name: 场景名称
        :param scenario_class: 场景类
        """
        if not issubclass(scenario_class, BaseScenario):
            raise ValueError(f"场景类 {scenario_class.__name__} 必须继承自 BaseScenario")

        cls._scenarios[name] = scenario_class
        cls._logger.debug(f"注册场景: {name}")

    @classmethod
    def create_scenario(cls, config: ScenarioConfig, workers: int = 1) -> BaseScenario:
        """
        创建场景实例

        :param config: 实验配置
        :param workers: 工作进程数
        :return: 场景实例
        """
        if config.scenario not in cls._scenarios:
            raise ValueError(f"未找到场景: {config.scenario}")

        scenario = cls._scenarios[config.scenario](config, workers=workers)
        cls._logger.info(f"创建场景实例: {config.scenario}")
        return scenario

    @classmethod
    def get_available_scenarios(cls) -> Dict[str, str]:
        """
        获取所有可用的场景

        :return: 场景名称和描述的字典
        """
        result = {}
        for name, scenario_class in cls._scenarios.items():
            doc = (scenario_class.__doc__ or "").strip()
            result[name] = doc.splitlines()[0] if doc else f"{name} 场景"
        return result

    @classmethod
    def is_scenario_available(cls, name: str) -> bool:
        """
        检查场景是否可用

        :param name: 场景名称
        :return: 是否可用
        """
        return name in cls._scenarios
