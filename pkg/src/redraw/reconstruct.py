"""Phase-lag influence estimation, triplet pruning and thresholding."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    ExperimentBatch,
    FloatArray,
    InfluenceMatrix,
    PhaseTrace,
    ReconstructionParams,
    ValidationError,
)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class UnlockedExperimentError(RuntimeError):
    pass


def wrap_phase(x):
    """Map angles into (-pi, pi]."""
    return math.pi - np.remainder(math.pi - np.asarray(x, dtype=np.float64), TWO_PI)


def relative_phase(trace: PhaseTrace, i: int, j: int) -> FloatArray:
    """Wrapped ``theta_i - theta_j``; negative where i lags j."""
    if i == j:
        raise ValueError("relative phase needs two distinct nodes")
    return wrap_phase(trace.phases[:, i] - trace.phases[:, j])


def zeta(dtheta):
    """Instantaneous influence: ``(1 + cos d) / 2`` while lagging, 0 while leading."""
    d = np.asarray(dtheta, dtype=np.float64)
    return np.where(d <= 0, 0.5 * (1.0 + np.cos(d)), 0.0)


def _window_slices(times: FloatArray, bounds: Sequence[float]) -> list[tuple[float, float, slice]]:
    tol = 1e-9 * max(1.0, abs(times[-1]))
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        lo = int(np.searchsorted(times, a - tol, side="left"))
        hi = int(np.searchsorted(times, b + tol, side="right"))
        if hi - lo < 2:
            raise ValidationError(f"window [{a}, {b}] holds fewer than 2 samples")
        out.append((float(a), float(b), slice(lo, hi)))
    return out


def _pairwise_zeta(phases: FloatArray) -> FloatArray:
    # z[t, i, j] = zeta(theta_i - theta_j)
    z = zeta(wrap_phase(phases[:, :, None] - phases[:, None, :]))
    idx = np.arange(phases.shape[1])
    z[:, idx, idx] = 0.0
    return z


def _trapezoid_mean(values: FloatArray, times: FloatArray) -> FloatArray:
    span = times[-1] - times[0]
    return np.trapezoid(values, times, axis=0) / span


def time_average(trace: PhaseTrace, i: int, j: int, window: Optional[tuple[float, float]] = None) -> float:
    """Time mean of zeta for one ordered pair, trapezoidal rule on the sample grid."""
    t = trace.times
    sl = slice(None)
    if window is not None:
        sl = _window_slices(t, window)[0][2]
    z = zeta(relative_phase(trace, i, j))
    return float(_trapezoid_mean(z[sl], t[sl]))


def trace_influence(trace: PhaseTrace, bounds: Optional[Sequence[float]] = None) -> list[FloatArray]:
    """Per-window ``rho_ij`` matrices for one experiment (all ordered pairs at once)."""
    t = trace.times
    if bounds is None:
        bounds = (float(t[0]), float(t[-1]))
    z = _pairwise_zeta(trace.phases)
    return [np.clip(_trapezoid_mean(z[sl], t[sl]), 0.0, 1.0) for _, _, sl in _window_slices(t, bounds)]


def average_experiments(matrices: Iterable) -> FloatArray:
    mats = [np.asarray(m, dtype=np.float64) for m in matrices]
    if not mats:
        raise ValidationError("need at least one experiment")
    return np.mean(np.stack(mats), axis=0)


def _check_locks(batch: ExperimentBatch, unlocked: str) -> None:
    if unlocked not in ("error", "warn"):
        raise ValueError(f"unknown unlocked policy {unlocked!r}")
    bad = [rep_k for rep_k, rep in zip((tr.experiment_index for tr in batch.traces), batch.lock_reports)
           if not rep.locked]
    if not bad:
        return
    msg = f"{len(bad)} of {batch.K} experiments not phase-locked (experiments {bad[:10]})"
    if unlocked == "error":
        raise UnlockedExperimentError(msg)
    log.warning("%s; including them anyway", msg)


def _windowed_raw(batch: ExperimentBatch, bounds: Optional[Sequence[float]], unlocked: str) -> list[FloatArray]:
    _check_locks(batch, unlocked)
    per_exp = [trace_influence(tr, bounds) for tr in batch.traces]
    return [average_experiments(ws) for ws in zip(*per_exp)]


def experiment_average(batch: ExperimentBatch, unlocked: str = "error") -> InfluenceMatrix:
    """Experiment mean of the per-experiment time averages."""
    return InfluenceMatrix(_windowed_raw(batch, None, unlocked)[0], "raw")


def dpi_candidates(values: FloatArray) -> np.ndarray:
    """Entries (z, w) that are the weakest side of some connected triplet (w, y, z).

    Only the threshold test ``rho_zw < nu`` is left out, so one call serves any
    ``nu``.
    """
    r = np.asarray(values, dtype=np.float64)
    rzw = r[:, :, None]  # [z, w, y] -> rho_zw
    ryw = r.T[None, :, :]  # [z, w, y] -> rho_yw
    rzy = r[:, None, :]  # [z, w, y] -> rho_zy
    # zero diagonal makes y == z and y == w drop out
    weaker = (rzw < ryw) & (rzw < rzy)
    return (r > 0) & weaker.any(axis=2)


def dpi_filter(m: InfluenceMatrix, nu: float) -> InfluenceMatrix:
    """Remove the weakest link of each connected triplet when it is also below ``nu``.

    Every test reads the input matrix; removals are applied together afterwards.
    """
    if not 0 <= nu < 1:
        raise ValidationError(f"nu must lie in [0, 1), got {nu}")
    r = m.values
    drop = dpi_candidates(r) & (r < nu)
    return InfluenceMatrix(np.where(drop, 0.0, r), "post_dpi")


def threshold_cut(m: InfluenceMatrix, mu: float) -> InfluenceMatrix:
    if not 0 <= mu < 1:
        raise ValidationError(f"mu must lie in [0, 1), got {mu}")
    r = m.values
    return InfluenceMatrix(np.where(r < mu, 0.0, r), "post_threshold")


@dataclass(frozen=True)
class Stages:
    raw: InfluenceMatrix
    post_dpi: InfluenceMatrix
    post_threshold: InfluenceMatrix


def filter_stages(raw: InfluenceMatrix, params: ReconstructionParams) -> Stages:
    post_dpi = dpi_filter(raw, params.nu)
    return Stages(raw, post_dpi, threshold_cut(post_dpi, params.mu))


def reconstruct_stages(batch: ExperimentBatch, params: ReconstructionParams,
                       unlocked: str = "error") -> Stages:
    return filter_stages(experiment_average(batch, unlocked), params)


def reconstruct(batch: ExperimentBatch, params: ReconstructionParams,
                unlocked: str = "error") -> InfluenceMatrix:
    return reconstruct_stages(batch, params, unlocked).post_threshold


@dataclass(frozen=True)
class Window:
    start: float
    end: float
    stages: Stages

    @property
    def matrix(self) -> InfluenceMatrix:
        return self.stages.post_threshold


@dataclass(frozen=True)
class WindowedReconstruction:
    windows: tuple[Window, ...]

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def __getitem__(self, idx) -> Window:
        return self.windows[idx]


def window_bounds(duration: float, window: float, start: float = 0.0) -> list[float]:
    """Consecutive boundaries of length ``window``; the last window may be shorter."""
    if not window > 0:
        raise ValidationError("window length must be > 0")
    count = int(math.floor((duration - start) / window + 1e-9))
    bounds = [start + l * window for l in range(count + 1)]
    if bounds[-1] < duration - 1e-9 * max(1.0, duration):
        bounds.append(duration)
    else:
        bounds[-1] = duration
    return bounds


def reconstruct_windowed(batch: ExperimentBatch, params: ReconstructionParams,
                         window: Optional[float] = None, unlocked: str = "error") -> WindowedReconstruction:
    """Run the whole pipeline separately on each time window.

    Windows come from ``window`` (a length) or, failing that, from
    ``params.windows`` (explicit boundaries).
    """
    times = batch.traces[0].times
    if window is not None:
        bounds = window_bounds(float(times[-1]), window, float(times[0]))
    elif params.windows is not None:
        bounds = list(params.windows)
        if bounds[0] < times[0] - 1e-9 or bounds[-1] > times[-1] + 1e-9:
            raise ValidationError("window boundaries fall outside the trace")
    else:
        bounds = [float(times[0]), float(times[-1])]
    raws = _windowed_raw(batch, bounds, unlocked)
    out = []
    for (a, b), raw in zip(zip(bounds[:-1], bounds[1:]), raws):
        out.append(Window(a, b, filter_stages(InfluenceMatrix(raw, "raw"), params)))
    return WindowedReconstruction(tuple(out))
