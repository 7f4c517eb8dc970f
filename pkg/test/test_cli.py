"""
Тесты командной строки: print-config, run, коды завершения и отчёт verify.
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest
from rich.console import Console

from shellnls.cli import app
from shellnls.cli.verify import (
    LEVELS,
    SHARPNESS_FLOOR,
    OracleResult,
    _KernelCache,
    check_bound_state_root,
    check_bound_state_rotation,
    check_conservation,
    check_free_gaussian,
    check_lambda_independence,
    check_reconstruction,
    check_sharpness,
    check_symbol_conjugacy,
    render_report,
    run_suites,
)
from shellnls.core.application import Simulation
from shellnls.core.kernels import build_kernel_quadrature

CONFIG_TEXT = """
scenario = defocusing

[numerics]
L = 2
dt = 0.01
T = 0.1
kernel_tol = 2e-3
{numerics}

[output]
diagnostics = {diagnostics}
snapshots = {snapshots}
snapshot_stride = 5
"""


class TestMain:
    """main(argv) и коды завершения."""

    @classmethod
    def setup_class(cls):
        cls.kernel = build_kernel_quadrature(2, tau_min=0.01, T_horizon=0.1, tol=2e-3)

    def setup_method(self):
        """Подготовка к тестам."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)
        self.log_file = str(self.root / "shellnls.log")

    def teardown_method(self):
        self.temp_dir.cleanup()

    def write_config(self, numerics: str = "") -> Path:
        path = self.root / "run.ini"
        path.write_text(
            CONFIG_TEXT.format(
                numerics=numerics,
                diagnostics=self.root / "out" / "run.jsonl",
                snapshots=self.root / "out" / "snap.csv",
            ),
            encoding="utf-8",
        )
        return path

    def use_shared_kernel(self, monkeypatch):
        monkeypatch.setattr(app, "Simulation", lambda config: Simulation(config, kernel=self.kernel))

    def test_print_config(self, capsys):
        config_path = self.write_config()
        code = app.main(["--log-file", self.log_file, "print-config", str(config_path)])
        assert code == app.EXIT_OK
        output = capsys.readouterr().out
        assert "scenario = defocusing" in output
        assert "L = 2" in output

    def test_missing_config(self, capsys):
        code = app.main(["--log-file", self.log_file, "print-config", str(self.root / "absent.ini")])
        assert code == app.EXIT_ERROR
        assert "Ошибка" in capsys.readouterr().out

    def test_invalid_config(self, capsys):
        path = self.root / "bad.ini"
        path.write_text("scenario = free\n[numerics]\nL = four\n", encoding="utf-8")
        code = app.main(["--log-file", self.log_file, "run", str(path)])
        assert code == app.EXIT_ERROR
        assert "строка 3" in capsys.readouterr().out

    def test_run_writes_outputs(self, monkeypatch):
        self.use_shared_kernel(monkeypatch)
        config_path = self.write_config()
        code = app.main(["--log-file", self.log_file, "run", str(config_path)])
        assert code == app.EXIT_OK

        lines = (self.root / "out" / "run.jsonl").read_text(encoding="utf-8").splitlines()
        assert "header" in json.loads(lines[0])
        assert json.loads(lines[-1])["trailer"]["records"] == 11
        assert len(lines) == 13
        snapshots = sorted(path.name for path in (self.root / "out").glob("snap_*.csv"))
        assert snapshots == ["snap_000000.csv", "snap_000005.csv", "snap_000010.csv"]

    def test_run_overrides(self, monkeypatch):
        self.use_shared_kernel(monkeypatch)
        config_path = self.write_config()
        code = app.main(["--log-file", self.log_file, "run", str(config_path), "--T", "0.05"])
        assert code == app.EXIT_OK
        lines = (self.root / "out" / "run.jsonl").read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[-1])["trailer"]["records"] == 6

    def test_early_stop_exit_code(self, monkeypatch):
        self.use_shared_kernel(monkeypatch)
        config_path = self.write_config("picard_max = 1")
        code = app.main(["--log-file", self.log_file, "run", str(config_path)])
        assert code == app.EXIT_EARLY_STOP
        trailer = json.loads((self.root / "out" / "run.jsonl").read_text(encoding="utf-8").splitlines()[-1])
        assert trailer["trailer"]["early_stop"] is True
        assert trailer["trailer"]["stop_step"] == 1

    def test_verify_dispatch(self, monkeypatch):
        calls = []
        monkeypatch.setattr(app, "verify", lambda level, seed, console: calls.append((level, seed)) or 0)
        assert app.main(["--log-file", self.log_file, "verify", "--full", "--seed", "7"]) == 0
        assert app.main(["--log-file", self.log_file, "verify"]) == 0
        assert calls == [("full", 7), ("fast", 0)]


class TestVerifyChecks:
    """Отдельные быстрые проверки и отчёт."""

    def test_levels(self):
        assert LEVELS == ("fast", "full")
        with pytest.raises(ValueError, match="Неизвестный уровень"):
            run_suites("medium")

    def test_bound_state_root(self):
        results = check_bound_state_root()
        assert all(result.passed for result in results)

    def test_free_gaussian(self):
        assert check_free_gaussian().passed

    def test_symbol_conjugacy(self):
        assert check_symbol_conjugacy(np.random.default_rng(0)).passed

    def test_sharpness_floor_regression(self):
        result = check_sharpness("fast")
        assert result.limit == pytest.approx(0.9 * SHARPNESS_FLOOR)
        assert result.measured >= result.limit
        assert result.passed

    def test_lambda_independence(self):
        results = check_lambda_independence()
        assert len(results) == 2
        assert all(result.passed for result in results)

    def test_render_report(self):
        console = Console(record=True, width=200)
        results = [
            OracleResult(name="первая", measured=1e-12, limit=1e-10, passed=True),
            OracleResult(name="вторая [x]", measured=1.0, limit=1e-3, passed=False, detail="подробно"),
        ]
        render_report(results, console)
        text = console.export_text()
        assert "OK" in text
        assert "FAIL" in text
        assert "вторая [x]" in text


@pytest.mark.slow
class TestFullChecks:
    """Проверки уровня full: прогоны решателя до T = 1."""

    @classmethod
    def setup_class(cls):
        cls.cache = _KernelCache()

    def test_conservation(self):
        results = check_conservation(self.cache)
        assert len(results) == 8
        failed = [result.name for result in results if not result.passed]
        assert failed == []

    def test_bound_state_rotation(self):
        results = check_bound_state_rotation(self.cache)
        assert all(result.passed for result in results)

    def test_reconstruction(self):
        results = check_reconstruction(self.cache)
        assert len(results) == 3
        assert all(result.passed for result in results)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
