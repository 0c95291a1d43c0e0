# -*- coding: utf-8 -*-
"""
实验场景模块
每个场景对应一个定理或引理的数值验证
"""

from sievelab.core.errors import ConfigValidationError
from sievelab.models.scenario import ScenarioConfig, ScenarioReport
from sievelab.scenarios.lemma_scenarios import (
    DepoissonScenario,
    LemmaRedScenario,
    MartingaleCLTScenario,
    OracleEquivalenceScenario,
)
from sievelab.scenarios.limit_scenarios import LimitCalibrationScenario
from sievelab.scenarios.scenario_factory import ScenarioFactory
from sievelab.scenarios.sieve_scenarios import (
    Theorem1Scenario,
    Theorem2Scenario,
    Theorem3aScenario,
    Theorem3b1Scenario,
    Theorem3b2Scenario,
    Theorem3c1Scenario,
    Theorem3c2Scenario,
)


SCENARIO_CLASSES = (
    Theorem1Scenario,
    Theorem2Scenario,
    Theorem3aScenario,
    Theorem3b1Scenario,
    Theorem3b2Scenario,
    Theorem3c1Scenario,
    Theorem3c2Scenario,
    LemmaRedScenario,
    DepoissonScenario,
    OracleEquivalenceScenario,
    LimitCalibrationScenario,
    MartingaleCLTScenario,
)


def register_all() -> None:
    """注册全部内置场景"""
    for scenario_class in SCENARIO_CLASSES:
        ScenarioFactory.register_scenario(scenario_class.name, scenario_class)


def run_scenario(config: ScenarioConfig, workers: int = 1) -> ScenarioReport:
    """
    按配置运行一个场景

    :param config: 校验后的实验配置
    :param workers: 工作进程数
    :return: 场景报告
    """
    if not ScenarioFactory.is_scenario_available(config.scenario):
        register_all()
    with ScenarioFactory.create_scenario(config, workers=workers) as scenario:
        if not scenario.validate_config():
            raise ConfigValidationError("scenario", f"场景 {config.scenario} 的配置无效，详见日志")
        return scenario.run()
