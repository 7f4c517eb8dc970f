"""
Иерархия исключений shellnls.
Все классы наследуют встроенные исключения, поэтому вызывающий код
может по-прежнему перехватывать ValueError / RuntimeError.
"""

from __future__ import annotations

from typing import Optional


class ShellNLSError(Exception):
    """Базовый класс ошибок пакета."""


class DomainError(ShellNLSError, ValueError):
    """Аргумент вне области определения функции (x ≤ 0, λ ≤ 0, |m| > ℓ ...)."""


class OrderError(DomainError):
    """Порядок ℓ превышает поддерживаемый предел."""


class BandLimitError(ShellNLSError, ValueError):
    """Полоса L превышает точность квадратурной сетки."""


class GridMismatchError(ShellNLSError, ValueError):
    """Размеры массива не соответствуют сетке."""


class ConvergenceError(ShellNLSError, RuntimeError):
    """
    Квадратура, экстраполяция или сертификация ядра не достигли точности.

    Attributes:
        achieved: Достигнутая оценка ошибки (если известна)
    """

    def __init__(self, message: str, achieved: Optional[float] = None):
        super().__init__(message)
        self.achieved = achieved


class NonContractionError(ConvergenceError):
    """
    Итерация Пикара (или итерация согласования следа) не сжимает.

    Attributes:
        ratio: Последний измеренный коэффициент сжатия
        step: Номер шага по времени (None для начальных данных)
    """

    def __init__(self, message: str, ratio: float = float("nan"),
                 step: Optional[int] = None, achieved: Optional[float] = None):
        super().__init__(message, achieved=achieved)
        self.ratio = ratio
        self.step = step


class ConfigError(ShellNLSError, ValueError):
    """
    Ошибка текста конфигурации.

    Attributes:
        line: Номер строки (с единицы) или None
        key: Имя ключа или None
    """

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        super().__init__(message)
        self.line = line
        self.key = key
