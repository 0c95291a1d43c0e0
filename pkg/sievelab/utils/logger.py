# -*- coding: utf-8 -*-
"""
日志管理器
控制台、主日志、错误日志与场景日志；每条记录带上当前场景名、主种子与进程名
"""

import logging
import logging.handlers
import time
from pathlib import Path
from typing import List, Optional


LOG_FORMAT = '%(asctime)s - %(processName)s - %(name)s - %(levelname)s - [%(scenario)s seed=%(master_seed)s] %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class RunContextFilter(logging.Filter):
    """
    给日志记录补上 scenario 与 master_seed 字段

    挂在处理器上，因此子日志器传播上来的记录也会带上
    """

    def __init__(self):
        super().__init__()
        self.scenario = "-"
        self.master_seed = "-"

    def bind(self, scenario: str, master_seed: Optional[int] = None) -> None:
        self.scenario = scenario
        self.master_seed = "-" if master_seed is None else str(master_seed)

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "scenario"):
            record.scenario = self.scenario
        if not hasattr(record, "master_seed"):
            record.master_seed = self.master_seed
        return True


class LoggerManager:
    """
    日志管理器

    setup() 之前只有场景日志与清理功能可用
    """

    def __init__(self, log_dir: str = "logs", log_level: str = "INFO"):
        """
        :param log_dir: 日志目录
        :param log_level: 日志级别，无法识别时为 INFO
        """
        self.log_dir = Path(log_dir)
        self.log_level = getattr(logging, log_level.upper(), logging.INFO)
        self.context = RunContextFilter()
        self._level_handlers: List[logging.Handler] = []
        self._configured = False

    def _handler(self, handler: logging.Handler, level: int) -> logging.Handler:
        handler.setLevel(level)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        handler.addFilter(self.context)
        return handler

    def _rotating(self, filename: str, level: int, max_mb: int, backups: int) -> logging.Handler:
        self.log_dir.mkdir(parents=True, exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(
            self.log_dir / filename, maxBytes=max_mb * 1024 * 1024, backupCount=backups, encoding='utf-8')
        return self._handler(handler, level)

    def setup(self) -> "LoggerManager":
        """
        配置根日志器：控制台、sievelab.log 与 error.log

        重复调用不会重复添加处理器

        :return: 自身
        """
        if self._configured:
            return self

        root_logger = logging.getLogger()
        root_logger.setLevel(self.log_level)
        for handler in root_logger.handlers[:]:
            root_logger.removeHandler(handler)

        console = self._handler(logging.StreamHandler(), self.log_level)
        main_file = self._rotating("sievelab.log", self.log_level, max_mb=10, backups=5)
        root_logger.addHandler(console)
        root_logger.addHandler(main_file)
        root_logger.addHandler(self._rotating("error.log", logging.ERROR, max_mb=5, backups=3))
        self._level_handlers = [console, main_file]

        self._configured = True
        return self

    def get_logger(self, name: str) -> logging.Logger:
        return logging.getLogger(name)

    def create_scenario_logger(self, scenario_name: str, master_seed: Optional[int] = None) -> logging.Logger:
        """
        绑定运行上下文，并为场景日志器加上 <scenario>.log

        工作进程中的场景记录通过 scenario.<name> 日志器写入同一文件

        :param scenario_name: 场景名称
        :param master_seed: 主种子
        :return: 场景日志器
        """
        self.context.bind(scenario_name, master_seed)
        logger = logging.getLogger(f"scenario.{scenario_name}")
        if not logger.handlers:
            logger.addHandler(self._rotating(f"{scenario_name}.log", self.log_level, max_mb=5, backups=3))
        logger.setLevel(self.log_level)
        return logger

    def cleanup_old_logs(self, days: int = 30) -> int:
        """
        删除修改时间早于 days 天前的日志文件（含轮转备份）

        :param days: 保留天数
        :return: 删除的文件数量
        """
        cutoff = time.time() - days * 24 * 3600
        deleted = 0
        try:
            for log_file in self.log_dir.glob("*.log*"):
                if log_file.stat().st_mtime < cutoff:
                    log_file.unlink()
                    deleted += 1
        except OSError as e:
            logging.getLogger("sievelab.logger").error(f"清理旧日志失败: {e}")
        return deleted

    def get_log_files(self) -> List[str]:
        """
        :return: 当前日志文件，按修改时间倒序
        """
        if not self.log_dir.is_dir():
            return []
        files = sorted(self.log_dir.glob("*.log"), key=lambda f: f.stat().st_mtime, reverse=True)
        return [str(f) for f in files]

    def set_log_level(self, level: str) -> None:
        """
        调整根日志器、控制台与主日志的级别，error.log 保持 ERROR

        :param level: 日志级别字符串
        """
        self.log_level = getattr(logging, level.upper(), logging.INFO)
        logging.getLogger().setLevel(self.log_level)
        for handler in self._level_handlers:
            handler.setLevel(self.log_level)


def _build_manager() -> LoggerManager:
    from sievelab.config.settings import settings
    return LoggerManager(settings.LOG_DIR, "DEBUG" if settings.DEBUG else settings.LOG_LEVEL)


# 全局日志管理器实例（由入口调用 setup() 生效）
logger_manager = _build_manager()
