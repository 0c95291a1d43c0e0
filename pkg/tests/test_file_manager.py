"""报告输出的测试"""

import csv

import pytest

from sievelab.core.errors import ReportIOError
from sievelab.models.occupancy import PoissonizationRecord
from sievelab.models.scenario import OccupancyRow, ScenarioReport
from sievelab.models.statistics import AcceptanceCheck
from sievelab.utils.file_manager import (
    LIMIT_COLUMNS,
    OCCUPANCY_COLUMNS,
    POISSON_COLUMNS,
    TEST_COLUMNS,
    FileManager,
)


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        return next(reader), list(reader)


@pytest.fixture
def report():
    report = ScenarioReport(scenario="theorem3a", config={"scenario": "theorem3a"})
    report.occupancy.append(OccupancyRow(scenario="theorem3a", t=6.0, u=1.0, replicate=0, n=403,
                                         K=20, M=25, L=5, statistic=0.25))
    report.checks.append(AcceptanceCheck(name="ks_final[t=6,u=1]", statistic=0.05, threshold=0.15, passed=True))
    report.checks.append(AcceptanceCheck(name="ks_normal[t=6,u=1]", statistic=0.05, p_value=0.4,
                                         threshold=0.15, passed=True, gating=False))
    report.poisson.append(PoissonizationRecord(t=6.0, N=410, L_poisson=6, L_fixed=5, rho=4, seed=11))
    report.failures[3] = "重复实验 3 失败"
    return report


class TestFileManager:
    """JSON 报告与 CSV 表格"""

    def test_report_round_trip(self, tmp_path, report):
        manager = FileManager(str(tmp_path / "out"))
        path = manager.write_report(report)
        loaded = manager.read_report(path)
        assert loaded.body() == report.body()
        assert loaded.failures == {3: "重复实验 3 失败"}

    def test_csv_tables(self, tmp_path, report):
        paths = FileManager(str(tmp_path)).emit_csv(report)
        assert set(paths) == {"occupancy", "limits", "tests", "poisson"}

        header, rows = read_rows(paths["occupancy"])
        assert header == OCCUPANCY_COLUMNS
        assert rows == [["theorem3a", "6.0", "1.0", "0", "403", "20", "25", "5", "0.25"]]

        header, rows = read_rows(paths["tests"])
        assert header == TEST_COLUMNS
        assert len(rows) == 2
        assert rows[0][3] == ""
        assert rows[1][3] == "0.4"

        header, rows = read_rows(paths["poisson"])
        assert header == POISSON_COLUMNS
        assert rows == [["6.0", "410", "6", "5", "2", "4", "11"]]

    def test_empty_tables_have_headers(self, tmp_path, report):
        paths = FileManager(str(tmp_path)).emit_csv(report)
        header, rows = read_rows(paths["limits"])
        assert header == LIMIT_COLUMNS
        assert rows == []

    def test_output_files(self, tmp_path, report):
        manager = FileManager(str(tmp_path))
        manager.write_report(report)
        manager.emit_csv(report)
        assert len(manager.get_output_files()) == 5
        info = manager.get_file_info(str(tmp_path / "report.json"))
        assert info["is_file"] and info["size"] > 0
        assert manager.get_file_info(str(tmp_path / "missing.json")) is None

    def test_read_invalid_report(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{}", encoding="utf-8")
        with pytest.raises(ReportIOError):
            FileManager(str(tmp_path)).read_report(str(path))

    def test_unwritable_directory(self, tmp_path, report):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(ReportIOError):
            FileManager(str(blocker / "sub")).write_report(report)
