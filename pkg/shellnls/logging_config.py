"""
Конфигурация системы логирования для shellnls.
Настраивает единое логирование для всех модулей пакета.
"""

import logging
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler


def setup_logging(
    log_level: str = "DEBUG",
    log_file: Optional[str] = None,
    console_output: bool = False
) -> logging.Logger:
    """
    Настройка системы логирования для shellnls.

    Args:
        log_level: Уровень логирования (DEBUG, INFO, WARNING, ERROR)
        log_file: Путь к файлу логов (по умолчанию shellnls.log)
        console_output: Выводить ли логи также в консоль

    Returns:
        Корневой логгер пакета shellnls
    """
    if log_file is None:
        log_file = Path.cwd() / "shellnls.log"
    else:
        log_file = Path(log_file)

    log_file.parent.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger("shellnls")
    logger.setLevel(getattr(logging, log_level.upper()))
    logger.handlers.clear()

    formatter = logging.Formatter(
        fmt="%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s",
        datefmt="%H:%M:%S"
    )

    # Файл перезаписывается при каждом запуске
    file_handler = logging.FileHandler(log_file, mode='w', encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    if console_output:
        console_handler = RichHandler(console=Console(), show_path=False, log_time_format="%H:%M:%S")
        console_handler.setLevel(getattr(logging, log_level.upper()))
        console_handler.setFormatter(logging.Formatter("%(name)s | %(message)s"))
        logger.addHandler(console_handler)

    logger.propagate = False

    # RuntimeWarning numpy и предупреждения квадратур scipy попадают в тот же файл
    logging.captureWarnings(True)
    warnings_logger = logging.getLogger("py.warnings")
    warnings_logger.handlers = [file_handler]
    warnings_logger.propagate = False

    logger.info("=" * 60)
    logger.info("shellnls: запуск")
    logger.info(f"Log level: {log_level.upper()}")
    logger.info(f"Log file: {log_file}")
    logger.info("=" * 60)

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Получение логгера для конкретного модуля.

    Args:
        name: Имя модуля (обычно __name__)

    Returns:
        Логгер для указанного модуля
    """
    return logging.getLogger(f"shellnls.{name}")


def init_core_logging(log_file: Optional[str] = None) -> logging.Logger:
    """Инициализация логирования для библиотечного использования (только в файл)."""
    return setup_logging(log_level="DEBUG", log_file=log_file, console_output=False)


def init_console_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """Инициализация логирования с выводом в консоль (для CLI)."""
    return setup_logging(log_level=log_level, log_file=log_file, console_output=True)
