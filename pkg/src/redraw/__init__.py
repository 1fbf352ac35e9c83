"""Network reconstruction from phase-locked oscillator dynamics."""

from __future__ import annotations

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ExperimentBatch,
    InfluenceMatrix,
    LockReport,
    NetworkSpec,
    PhaseTrace,
    ReconstructionParams,
    SimConfig,
    ValidationError,
)
from .simulator import run_batch, simulate  # noqa: E402
from .reconstruct import reconstruct, reconstruct_stages, reconstruct_windowed  # noqa: E402
from .metrics import evaluate  # noqa: E402

__all__ = [
    "ExperimentBatch",
    "InfluenceMatrix",
    "LockReport",
    "NetworkSpec",
    "PhaseTrace",
    "ReconstructionParams",
    "SimConfig",
    "ValidationError",
    "evaluate",
    "reconstruct",
    "reconstruct_stages",
    "reconstruct_windowed",
    "run_batch",
    "simulate",
]
