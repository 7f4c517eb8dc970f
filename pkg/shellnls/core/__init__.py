"""
shellnls.core
Специальные функции, преобразования, ядро памяти, начальные данные,
шаги по времени и диагностика.
"""

from .application import Simulation
from .config import RUN_CONFIG_SCHEMA, RunConfig, load_config, parse_config
from .domain import InitialData, assemble_initial_state, build_regular_part, change_lambda
from .errors import (
    BandLimitError,
    ConfigError,
    ConvergenceError,
    DomainError,
    GridMismatchError,
    NonContractionError,
    OrderError,
    ShellNLSError,
)
from .events import (
    BaseEvent,
    EarlyStopEvent,
    ErrorOccurredEvent,
    RunFinishedEvent,
    RunStartedEvent,
    StepCompletedEvent,
)
from .kernels import KernelQuadrature, build_kernel_quadrature
from .observables import DiagnosticsBuilder, reconstruct_field
from .profiles import PROFILE_MAP, BaseRadialProfile, create_profile
from .propagator import Propagator, SolverConfig, run
from .state import DiagnosticsRecord, SolverState, Trajectory

__all__ = [
    'Simulation',
    'RunConfig',
    'RUN_CONFIG_SCHEMA',
    'parse_config',
    'load_config',
    'InitialData',
    'assemble_initial_state',
    'change_lambda',
    'build_regular_part',
    'KernelQuadrature',
    'build_kernel_quadrature',
    'DiagnosticsBuilder',
    'reconstruct_field',
    'PROFILE_MAP',
    'BaseRadialProfile',
    'create_profile',
    'Propagator',
    'SolverConfig',
    'run',
    'DiagnosticsRecord',
    'SolverState',
    'Trajectory',
    'BaseEvent',
    'RunStartedEvent',
    'StepCompletedEvent',
    'EarlyStopEvent',
    'RunFinishedEvent',
    'ErrorOccurredEvent',
    'ShellNLSError',
    'DomainError',
    'OrderError',
    'BandLimitError',
    'GridMismatchError',
    'ConvergenceError',
    'NonContractionError',
    'ConfigError',
]
