"""Nonuniform Kuramoto network integration and phase-locking checks."""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

import numpy as np

from .model import (
    ExperimentBatch,
    FloatArray,
    LockReport,
    NetworkSpec,
    PhaseTrace,
    SimConfig,
    ValidationError,
    validate_network,
)

DEFAULT_CHI = 0.35
DEFAULT_SETTLE_TIME = 20.0
FREQ_RANGE = (1.0, 2.0)
PHASE_RANGE = (-math.pi, math.pi)


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: Optional[float] = None, experiment: Optional[int] = None):
        super().__init__(message)
        self.time = time
        self.experiment = experiment


def effective_phase_shift(weight: float, phi: float) -> float:
    """Per-edge lag ``phi / weight``; zero where there is no edge."""
    if weight < 0:
        raise ValueError(f"negative weight {weight}")
    return phi / weight if weight > 0 else 0.0


def phase_shift_matrix(spec: NetworkSpec, phi: float) -> FloatArray:
    w = spec.weights
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = phi / w[pos]
    return out


def _rhs(weights, shifts, omega, scale, theta):
    # diff[..., i, j] = theta_j - theta_i
    diff = theta[..., None, :] - theta[..., :, None]
    return omega + scale * np.sum(weights * np.sin(diff - shifts), axis=-1)


def derivative(spec: NetworkSpec, config: SimConfig, theta) -> FloatArray:
    """Right-hand side of the oscillator model for state ``theta`` (shape ``(..., n)``)."""
    if config.natural_frequencies is None:
        raise ValidationError("config has no natural frequencies")
    theta = np.asarray(theta, dtype=np.float64)
    shifts = phase_shift_matrix(spec, config.phase_shift)
    return _rhs(spec.weights, shifts, config.natural_frequencies, config.coupling / spec.n, theta)


def integrate_rk4(spec: NetworkSpec, omega, theta0, coupling: float, phi: float,
                  duration: float, dt: float) -> FloatArray:
    """Classical RK4 on a stack of experiments.

    ``omega`` and ``theta0`` have shape ``(K, n)``; returns ``(K, M + 1, n)``.
    """
    omega = np.asarray(omega, dtype=np.float64)
    theta = np.array(theta0, dtype=np.float64)
    steps = round(duration / dt)
    weights = spec.weights
    shifts = phase_shift_matrix(spec, phi)
    scale = coupling / spec.n
    out = np.empty((theta.shape[0], steps + 1, theta.shape[1]))
    out[:, 0] = theta
    half = 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported below
        for m in range(1, steps + 1):
            k1 = _rhs(weights, shifts, omega, scale, theta)
            k2 = _rhs(weights, shifts, omega, scale, theta + half * k1)
            k3 = _rhs(weights, shifts, omega, scale, theta + half * k2)
            k4 = _rhs(weights, shifts, omega, scale, theta + dt * k3)
            theta = theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(theta)):
                bad = int(np.argwhere(~np.isfinite(theta))[0, 0])
                raise SimulationError(f"integration diverged at t={m * dt:.6g}s", time=m * dt, experiment=bad)
            out[:, m] = theta
    return out


def simulate(spec: NetworkSpec, config: SimConfig, experiment_index: int = 1) -> PhaseTrace:
    """Integrate one experiment; phases are returned unwrapped."""
    if spec.n >= 2:
        validate_network(spec)
    if config.natural_frequencies is None or config.initial_phases is None:
        raise ValidationError("simulate needs natural frequencies and initial phases")
    if config.natural_frequencies.shape != (spec.n,) or config.initial_phases.shape != (spec.n,):
        raise ValidationError(f"frequency/phase vectors must have length {spec.n}")
    _ = config.n_steps  # raises if dt does not divide duration
    phases = integrate_rk4(spec, config.natural_frequencies[None], config.initial_phases[None],
                           config.coupling, config.phase_shift, config.duration, config.dt)
    return PhaseTrace(config.times(), phases[0], experiment_index)


def order_parameter(phases) -> tuple[FloatArray, FloatArray]:
    """Magnitude ``r(t)`` and unwrapped phase ``psi(t)`` of the mean unit phasor."""
    z = np.mean(np.exp(1j * np.asarray(phases)), axis=-1)
    r = np.clip(np.abs(z), 0.0, 1.0)
    psi = np.unwrap(np.angle(z))
    return r, psi


def lock_report(trace: PhaseTrace, settle_time: float = DEFAULT_SETTLE_TIME,
                chi: float = DEFAULT_CHI) -> LockReport:
    """Coefficient-of-variation locking test on the order-parameter phase after ``settle_time``."""
    if not settle_time < trace.times[-1]:
        raise ValidationError(f"settle time {settle_time} must precede the end of the trace")
    if not chi > 0:
        raise ValidationError("chi must be > 0")
    r, psi = order_parameter(trace.phases)
    tail = psi[trace.times >= settle_time]
    mean = float(np.mean(tail))
    std = float(np.std(tail))
    if mean == 0.0:
        return LockReport(r, psi, mean, std, math.inf, chi, settle_time, False,
                          "mean order-parameter phase is zero; coefficient of variation undefined")
    cv = std / abs(mean)
    return LockReport(r, psi, mean, std, cv, chi, settle_time, cv <= chi)


def experiment_rng(seed: int, k: int) -> np.random.Generator:
    """Generator for experiment ``k`` (1-based); independent of how many experiments run."""
    return np.random.default_rng([int(seed), int(k)])


def draw_conditions(n: int, seed: int, k: int) -> tuple[FloatArray, FloatArray]:
    rng = experiment_rng(seed, k)
    omega = rng.uniform(*FREQ_RANGE, size=n)
    theta0 = rng.uniform(*PHASE_RANGE, size=n)
    return omega, theta0


def run_batch(spec: NetworkSpec, template: SimConfig, K: int, seed: Optional[int] = None,
              settle_time: float = DEFAULT_SETTLE_TIME, chi: float = DEFAULT_CHI,
              first: int = 1) -> ExperimentBatch:
    """Draw conditions for experiments ``first .. first+K-1``, integrate them together, check locking.

    All experiments are stepped in one vectorised RK4 loop; each row evolves
    independently so results do not depend on ``K``.
    """
    if K < 1:
        raise ValidationError("K must be >= 1")
    validate_network(spec)
    seed = template.seed if seed is None else seed
    ks = range(first, first + K)
    draws = [draw_conditions(spec.n, seed, k) for k in ks]
    omega = np.stack([d[0] for d in draws])
    theta0 = np.stack([d[1] for d in draws])
    try:
        phases = integrate_rk4(spec, omega, theta0, template.coupling, template.phase_shift,
                               template.duration, template.dt)
    except SimulationError as exc:
        k = None if exc.experiment is None else first + exc.experiment
        raise SimulationError(f"experiment {k}: {exc}", exc.time, k) from exc
    times = template.times()
    traces, reports, configs = [], [], []
    for row, k in enumerate(ks):
        tr = PhaseTrace(times, phases[row], k)
        traces.append(tr)
        reports.append(lock_report(tr, settle_time, chi))
        configs.append(replace(template, natural_frequencies=omega[row],
                               initial_phases=theta0[row], seed=seed))
    return ExperimentBatch(spec, template, tuple(traces), tuple(reports), tuple(configs))
