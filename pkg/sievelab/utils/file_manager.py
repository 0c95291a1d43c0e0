# -*- coding: utf-8 -*-
"""
文件管理器
负责把场景报告写成 JSON 与 CSV 表格，并读回报告
"""

import csv
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from sievelab.core.errors import ReportIOError
from sievelab.models.scenario import ScenarioReport


OCCUPANCY_COLUMNS = ["scenario", "t", "u", "replicate", "n", "K", "M", "L", "statistic"]
LIMIT_COLUMNS = ["scenario", "u", "sample_index", "value"]
TEST_COLUMNS = ["scenario", "test", "statistic", "p_value", "threshold", "pass"]
POISSON_COLUMNS = ["t", "N", "L_poisson", "L_fixed", "gap", "rho", "seed"]


class FileManager:
    """
    文件管理器
    负责将场景报告输出到文件
    """

    def __init__(self, output_dir: str = "output"):
        """
        初始化文件管理器

        :param output_dir: 输出目录路径
        """
        self.output_dir = Path(output_dir)
        self.logger = logging.getLogger("sievelab.file_manager")

    def _ensure_dir(self) -> None:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportIOError(f"无法创建输出目录 {self.output_dir}: {e}") from e

    def write_report(self, report: ScenarioReport, filename: str = "report.json") -> str:
        """
        写入 JSON 报告

        :param report: 场景报告
        :param filename: 文件名
        :return: 文件路径
        """
        self._ensure_dir()
        filepath = self.output_dir / filename
        try:
            filepath.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            raise ReportIOError(f"写入报告失败 {filepath}: {e}") from e
        self.logger.info(f"报告已保存到: {filepath}")
        return str(filepath)

    def read_report(self, filepath: str) -> ScenarioReport:
        """
        读回 JSON 报告

        :param filepath: 文件路径
        :return: 场景报告
        """
        try:
            return ScenarioReport.model_validate_json(Path(filepath).read_text(encoding="utf-8"))
        except (OSError, ValidationError) as e:
            raise ReportIOError(f"读取报告失败 {filepath}: {e}") from e

    def _write_csv(self, filename: str, columns: List[str], rows: List[Dict]) -> str:
        filepath = self.output_dir / filename
        try:
            with open(filepath, "w", encoding="utf-8", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=columns)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            raise ReportIOError(f"写入表格失败 {filepath}: {e}") from e
        self.logger.debug(f"写入 {len(rows)} 行到: {filepath}")
        return str(filepath)

    def emit_csv(self, report: ScenarioReport) -> Dict[str, str]:
        """
        写入 occupancy.csv、limits.csv、tests.csv 与 poisson.csv

        没有数据的表只写表头

        :param report: 场景报告
        :return: 表名到文件路径的映射
        """
        self._ensure_dir()
        occupancy = [row.model_dump() for row in report.occupancy]
        limits = [row.model_dump() for row in report.limits]
        tests = [{"scenario": report.scenario, "test": check.name, "statistic": check.statistic,
                  "p_value": "" if check.p_value is None else check.p_value,
                  "threshold": check.threshold, "pass": check.passed}
                 for check in report.checks]
        poisson = [{"t": rec.t, "N": rec.N, "L_poisson": rec.L_poisson, "L_fixed": rec.L_fixed,
                    "gap": rec.poissonization_gap, "rho": rec.rho, "seed": rec.seed}
                   for rec in report.poisson]
        return {
            "occupancy": self._write_csv("occupancy.csv", OCCUPANCY_COLUMNS, occupancy),
            "limits": self._write_csv("limits.csv", LIMIT_COLUMNS, limits),
            "tests": self._write_csv("tests.csv", TEST_COLUMNS, tests),
            "poisson": self._write_csv("poisson.csv", POISSON_COLUMNS, poisson),
        }

    def get_output_files(self) -> List[str]:
        """
        获取输出文件列表

        :return: 文件路径列表（按修改时间倒序）
        """
        try:
            files = [f for f in self.output_dir.glob("*") if f.suffix in (".json", ".csv")]
            files.sort(key=lambda x: x.stat().st_mtime, reverse=True)
            return [str(f) for f in files]
        except OSError as e:
            self.logger.error(f"获取输出文件列表失败: {str(e)}")
            return []

    def get_file_info(self, filepath: str) -> Optional[dict]:
        """
        获取文件信息

        :param filepath: 文件路径
        :return: 文件信息字典或None
        """
        path = Path(filepath)
        if not path.exists():
            return None
        stat = path.stat()
        return {
            "path": str(path),
            "size": stat.st_size,
            "modified_time": datetime.fromtimestamp(stat.st_mtime),
            "is_file": path.is_file()
        }
