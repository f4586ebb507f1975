"""Simulation and analysis of the quantum privacy amplification protocol."""
from .errors import DomainError, NumericError, PostSelectionError
from .kernels import BACKEND
from .qpa_map import (
    StepOutcome,
    Trajectory,
    canonicalize,
    efficiency,
    is_purifiable,
    iterate,
    step_identical,
    step_mixed,
)
from .quantum_core import BellDiagonal, werner

__version__ = "0.1.0"
