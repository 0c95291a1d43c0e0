#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
sievelab 主程序
负责解析实验配置、运行场景并输出报告
"""

import sys
import argparse
from typing import Optional
from pathlib import Path

# 添加项目根目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

from sievelab.config.settings import parse_config, resolve_workers, settings
from sievelab.core.errors import ConfigValidationError, ParseError, SieveLabError
from sievelab.scenarios import register_all, run_scenario
from sievelab.scenarios.scenario_factory import ScenarioFactory
from sievelab.utils.file_manager import FileManager
from sievelab.utils.logger import logger_manager


EXIT_PASSED = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


class SieveLab:
    """
    实验室主类
    负责协调配置解析、场景运行与报告输出
    """

    def __init__(self):
        """
        初始化实验室
        """
        # 初始化日志系统
        logger_manager.setup()
        self.logger = logger_manager.get_logger("main")

        # 注册场景
        self._register_scenarios()

        self.logger.debug("sievelab 初始化完成")

    def _register_scenarios(self) -> None:
        """
        注册所有可用的场景
        """
        try:
            register_all()
        except Exception as e:
            self.logger.error(f"场景注册失败: {str(e)}")
            raise

    def run(self, config_path: str, seed: Optional[int] = None, workers: Optional[int] = None,
            out: Optional[str] = None) -> int:
        """
        运行配置文件指定的场景

        :param config_path: JSON 配置文件路径
        :param seed: 覆盖配置中的 master_seed
        :param workers: 覆盖配置中的工作进程数
        :param out: 覆盖配置中的输出目录
        :return: 退出码
        """
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            self.logger.error(f"无法读取配置文件 {config_path}: {e}")
            print(f"❌ 无法读取配置文件: {e}")
            return EXIT_ERROR

        try:
            config = parse_config(text, {"master_seed": seed})
        except (ParseError, ConfigValidationError) as e:
            self.logger.error(f"配置无效: {e}")
            print(f"❌ 配置无效: {e}")
            return EXIT_ERROR

        worker_count = resolve_workers(workers, config)
        output_dir = out or config.output or str(Path(settings.OUTPUT_DIR) / config.scenario)
        logger_manager.create_scenario_logger(config.scenario, config.master_seed)
        self.logger.info(f"开始运行场景: {config.scenario}（主种子 {config.master_seed}，{worker_count} 个进程）")

        try:
            report = run_scenario(config, workers=worker_count)
            file_manager = FileManager(output_dir)
            report_file = file_manager.write_report(report)
            file_manager.emit_csv(report)
        except SieveLabError as e:
            self.logger.error(f"场景运行失败: {e}")
            print(f"❌ 场景运行失败: {e}")
            return EXIT_ERROR

        print(f"📄 报告已保存到: {report_file}")
        for check in report.checks:
            mark = "✅" if check.passed else ("❌" if check.gating else "⚠️ ")
            p_text = "" if check.p_value is None else f" p={check.p_value:.4g}"
            print(f"  {mark} {check.name}: {check.statistic:.6g}{p_text}（阈值 {check.threshold:g}）")

        if report.failures:
            print(f"❌ {len(report.failures)} 次重复实验失败")
            return EXIT_ERROR
        if not report.passed:
            print("❌ 存在未通过的统计检查")
            return EXIT_CHECK_FAILED
        print("✅ 所有检查通过")
        return EXIT_PASSED

    def list_scenarios(self) -> None:
        """
        列出所有可用的场景
        """
        scenarios = ScenarioFactory.get_available_scenarios()

        print("📋 可用的场景:")
        print("-" * 50)

        for name, description in scenarios.items():
            print(f"  • {name}: {description}")

        print("-" * 50)
        print(f"总计: {len(scenarios)} 个场景")

    def show_config(self) -> None:
        """
        显示当前配置
        """
        config = settings.to_dict()

        print("⚙️  当前系统配置:")
        print("-" * 50)

        for key, value in config.items():
            if key == 'SCENARIO_DEFAULTS':
                print(f"  {key}:")
                for scenario_name, scenario_config in value.items():
                    print(f"    {scenario_name}:")
                    for config_key, config_value in scenario_config.items():
                        print(f"      {config_key}: {config_value}")
            else:
                print(f"  {key}: {value}")

        print("-" * 50)

    def cleanup_logs(self, days: int = 30) -> None:
        """
        清理旧日志文件

        :param days: 保留天数
        """
        deleted_count = logger_manager.cleanup_old_logs(days)
        print(f"🧹 清理完成: 删除了 {deleted_count} 个旧的日志文件，剩余 {len(logger_manager.get_log_files())} 个")


def create_argument_parser() -> argparse.ArgumentParser:
    """
    创建命令行参数解析器

    :return: 参数解析器
    """
    parser = argparse.ArgumentParser(
        prog="sievelab",
        description="Bernoulli sieve 蒙特卡洛实验室",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  sievelab run --config theorem1.json                  # 运行配置文件中的场景
  sievelab run --config theorem1.json --seed 7         # 覆盖主种子
  sievelab run --config theorem1.json --workers 8      # 8 个工作进程
  sievelab run --config theorem1.json --out results/   # 指定输出目录
  sievelab run --config theorem1.json --log-level DEBUG  # 调试日志
  sievelab scenarios                                   # 列出所有场景
  sievelab config                                      # 显示当前配置
  sievelab cleanup --days 7                            # 清理7天前的日志

退出码: 0 = 全部检查通过，2 = 统计检查未通过，1 = 错误
        """
    )

    subparsers = parser.add_subparsers(dest='command', help='可用命令')

    # run 命令
    run_parser = subparsers.add_parser('run', help='运行场景')
    run_parser.add_argument('--config', required=True, help='JSON 实验配置文件')
    run_parser.add_argument('--seed', type=int, help='主种子')
    run_parser.add_argument('--workers', type=int, help='工作进程数')
    run_parser.add_argument('--out', help='输出目录')
    run_parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='日志级别')

    # scenarios 命令
    subparsers.add_parser('scenarios', help='列出所有可用场景')

    # config 命令
    subparsers.add_parser('config', help='显示当前配置')

    # cleanup 命令
    cleanup_parser = subparsers.add_parser('cleanup', help='清理旧日志')
    cleanup_parser.add_argument('--days', type=int, default=30, help='保留天数')

    return parser


def main():
    """
    主函数
    """
    try:
        # 解析命令行参数
        parser = create_argument_parser()
        args = parser.parse_args()

        if not args.command:
            parser.print_help()
            return

        lab = SieveLab()

        # 执行相应命令
        if args.command == 'run':
            if args.log_level:
                logger_manager.set_log_level(args.log_level)
            sys.exit(lab.run(args.config, seed=args.seed, workers=args.workers, out=args.out))

        elif args.command == 'scenarios':
            lab.list_scenarios()

        elif args.command == 'config':
            lab.show_config()

        elif args.command == 'cleanup':
            lab.cleanup_logs(args.days)

    except KeyboardInterrupt:
        print("\n⚠️  用户中断操作")
        sys.exit(EXIT_ERROR)
    except Exception as e:
        print(f"❌ 程序执行失败: {str(e)}")
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
