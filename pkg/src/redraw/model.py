"""Domain types shared across the package.

Node indices are 0-based in arrays and 1-based in every user-facing message
and file format.  ``weights[i, j]`` is the influence node ``j`` has on node
``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]

STAGES = ("raw", "post_dpi", "post_threshold")


class ValidationError(ValueError):
    """Raised when a domain object violates one of its invariants."""


def _frozen(a, dtype=np.float64) -> FloatArray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Directed weighted graph; ``weights[i, j] > 0`` means j drives i."""

    weights: FloatArray

    def __post_init__(self) -> None:
        w = _frozen(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError(f"weights must be square, got shape {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @property
    def support(self) -> NDArray[np.bool_]:
        s = self.weights > 0
        np.fill_diagonal(s, False)
        return s

    @property
    def edge_count(self) -> int:
        return int(self.support.sum())

    def edges(self) -> list[tuple[int, int, float]]:
        """``(source, target, weight)`` triples, 0-based, sorted by target then source."""
        out = []
        for i, j in zip(*np.nonzero(self.support)):
            out.append((int(j), int(i), float(self.weights[i, j])))
        return sorted(out, key=lambda e: (e[1], e[0]))

    def permuted(self, perm: Sequence[int]) -> "NetworkSpec":
        p = np.asarray(perm)
        return NetworkSpec(self.weights[np.ix_(p, p)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


def validate_network(spec: NetworkSpec) -> NetworkSpec:
    w = spec.weights
    if spec.n < 2:
        raise ValidationError(f"network needs at least 2 nodes, got {spec.n}")
    bad = np.argwhere(~np.isfinite(w))
    if bad.size:
        i, j = bad[0]
        raise ValidationError(f"non-finite weight at ({i + 1}, {j + 1})")
    for i in range(spec.n):
        if w[i, i] != 0:
            raise ValidationError(f"self-loop at node {i + 1}")
    neg = np.argwhere(w < 0)
    if neg.size:
        i, j = neg[0]
        raise ValidationError(f"negative weight {w[i, j]} at ({i + 1}, {j + 1})")
    return spec


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Oscillator parameters for one experiment.

    ``natural_frequencies`` and ``initial_phases`` may be left as ``None`` in a
    template handed to :func:`redraw.simulator.run_batch`, which draws them.
    """

    natural_frequencies: Optional[FloatArray] = None
    initial_phases: Optional[FloatArray] = None
    coupling: float = 10.0
    phase_shift: float = math.pi / 4
    duration: float = 30.0
    dt: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("natural_frequencies", "initial_phases"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(v))
        if self.natural_frequencies is not None and np.any(self.natural_frequencies <= 0):
            raise ValidationError("natural frequencies must be > 0")
        if self.initial_phases is not None and not np.all(np.isfinite(self.initial_phases)):
            raise ValidationError("initial phases must be finite")
        if not self.coupling > 0:
            raise ValidationError(f"coupling must be > 0, got {self.coupling}")
        if not 0 <= self.phase_shift <= math.pi / 2:
            raise ValidationError(f"phase shift must lie in [0, pi/2], got {self.phase_shift}")
        if not (self.dt > 0 and self.duration > 0 and self.dt <= self.duration):
            raise ValidationError("need 0 < dt <= duration")

    @property
    def n_steps(self) -> int:
        m = self.duration / self.dt
        steps = round(m)
        if abs(m - steps) > 1e-9 * max(1.0, m):
            raise ValidationError(f"dt={self.dt} does not divide duration={self.duration}")
        return int(steps)

    def times(self) -> FloatArray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class PhaseTrace:
    times: FloatArray
    phases: FloatArray
    experiment_index: int = 1

    def __post_init__(self) -> None:
        t = _frozen(self.times)
        ph = _frozen(self.phases)
        if ph.ndim != 2 or ph.shape[0] != t.shape[0]:
            raise ValidationError(f"phases shape {ph.shape} does not match {t.shape[0]} samples")
        if t.size < 2:
            raise ValidationError("a trace needs at least 2 samples")
        steps = np.diff(t)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValidationError("times must be strictly increasing with uniform spacing")
        if not np.all(np.isfinite(ph)):
            raise ValidationError("phases must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "phases", ph)

    @property
    def n(self) -> int:
        return int(self.phases.shape[1])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Estimated influence ``rho[i, j]`` of node j on node i at one pipeline stage."""

    values: FloatArray
    stage: str = "raw"

    def __post_init__(self) -> None:
        v = _frozen(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"influence matrix must be square, got {v.shape}")
        if self.stage not in STAGES:
            raise ValidationError(f"unknown stage {self.stage!r}")
        if np.any(np.diag(v) != 0):
            raise ValidationError("influence matrix diagonal must be zero")
        if np.any(v < 0) or np.any(v > 1):
            raise ValidationError("influence values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def support(self) -> NDArray[np.bool_]:
        return self.values > 0

    def as_network(self) -> NetworkSpec:
        return NetworkSpec(self.values)


@dataclass(frozen=True)
class ReconstructionParams:
    nu: float = 0.9
    mu: float = 0.8
    windows: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not 0 <= self.nu < 1:
            raise ValidationError(f"nu must lie in [0, 1), got {self.nu}")
        if not 0 <= self.mu <= self.nu:
            raise ValidationError(f"mu must lie in [0, nu], got mu={self.mu}, nu={self.nu}")
        if self.windows is not None:
            w = tuple(float(b) for b in self.windows)
            if len(w) < 2 or any(b <= a for a, b in zip(w[:-1], w[1:])):
                raise ValidationError("window boundaries must be strictly increasing")
            if w[0] < 0:
                raise ValidationError("window boundaries must be >= 0")
            object.__setattr__(self, "windows", w)


@dataclass(frozen=True, eq=False)
class LockReport:
    r: FloatArray
    psi: FloatArray
    mean: float
    std: float
    cv: float
    chi: float
    settle_time: float
    locked: bool
    diagnostic: str = ""

    def summary(self) -> dict:
        return {
            "mean_psi": self.mean,
            "std_psi": self.std,
            "cv": self.cv,
            "chi": self.chi,
            "settle_time": self.settle_time,
            "locked": self.locked,
            "final_r": float(self.r[-1]),
            "diagnostic": self.diagnostic,
        }


@dataclass(frozen=True, eq=False)
class ExperimentBatch:
    spec: NetworkSpec
    template: SimConfig
    traces: tuple[PhaseTrace, ...]
    lock_reports: tuple[LockReport, ...]
    configs: tuple[SimConfig, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.traces) != len(self.lock_reports):
            raise ValidationError("traces and lock reports differ in length")

    @property
    def K(self) -> int:
        return len(self.traces)

    @property
    def all_locked(self) -> bool:
        return all(rep.locked for rep in self.lock_reports)
