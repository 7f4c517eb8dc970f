"""
Командная строка shellnls: run, verify, print-config.

Переменная окружения SHELLNLS_THREADS ограничивает число потоков
численных библиотек; применяется до импорта numpy.
"""

import os

_THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def apply_thread_cap() -> None:
    threads = os.environ.get("SHELLNLS_THREADS")
    if threads and threads.isdigit() and int(threads) > 0:
        for name in _THREAD_VARIABLES:
            os.environ[name] = threads


apply_thread_cap()
