"""
Тесты настройки журнала.
"""

import logging
import tempfile
import warnings
from pathlib import Path

import pytest

from shellnls.logging_config import get_logger, init_console_logging, init_core_logging


class TestLogging:

    def setup_method(self):
        """Подготовка к тестам."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.log_file = Path(self.temp_dir.name) / "logs" / "run.log"

    def teardown_method(self):
        for name in ("shellnls", "py.warnings"):
            for handler in logging.getLogger(name).handlers:
                handler.close()
        logging.captureWarnings(False)
        self.temp_dir.cleanup()

    def test_file_banner_and_module_logger(self):
        root = init_core_logging(log_file=str(self.log_file))
        get_logger("core.kernels").info("квадратура построена")
        for handler in root.handlers:
            handler.flush()

        text = self.log_file.read_text(encoding="utf-8")
        assert "shellnls: запуск" in text
        assert "квадратура построена" in text
        assert root.propagate is False
        assert len(root.handlers) == 1

    def test_console_handler(self):
        root = init_console_logging(log_file=str(self.log_file))
        assert len(root.handlers) == 2
        assert root.level == logging.INFO

    def test_python_warnings_go_to_file(self):
        init_core_logging(log_file=str(self.log_file))
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            logging.captureWarnings(False)
            logging.captureWarnings(True)
            warnings.warn("проверка перехвата", RuntimeWarning)
        for handler in logging.getLogger("py.warnings").handlers:
            handler.flush()
        assert "проверка перехвата" in self.log_file.read_text(encoding="utf-8")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
