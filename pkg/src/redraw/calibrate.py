"""A-priori selection of the pruning thresholds (nu, mu) on random test graphs.

Each test graph is simulated once; its raw influence matrix is then filtered
at every grid point, which is the only threshold-dependent part of the
pipeline.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .metrics import METRIC_NAMES, algebraic_connectivity, is_weakly_connected
from .model import NetworkSpec, SimConfig, ValidationError
from .reconstruct import dpi_candidates, experiment_average
from .simulator import DEFAULT_CHI, DEFAULT_SETTLE_TIME, run_batch
from .topologies import calibration_edge_probability, erdos_renyi_directed

log = logging.getLogger(__name__)

DEFAULT_BOUNDS = {"ppv": 40.0, "acc": 70.0, "tpr": 40.0, "fpr": 30.0}


@dataclass(frozen=True)
class CalibrationConfig:
    n: int
    graphs: int = 100
    experiments: int = 10
    grid_step: float = 0.01
    grid_max: float = 0.99
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    p: Optional[float] = None
    coupling_per_node: float = 2.5
    phase_shift: float = math.pi / 4
    duration: float = 30.0
    dt: float = 0.01
    settle_time: float = DEFAULT_SETTLE_TIME
    chi: float = DEFAULT_CHI
    max_redraws: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValidationError("calibration needs n >= 2")
        if self.graphs < 1 or self.experiments < 1:
            raise ValidationError("graphs and experiments must be >= 1")
        if not 0 < self.edge_probability < 1:
            raise ValidationError(f"edge probability must lie in (0, 1), got {self.edge_probability}")
        if not (0 < self.grid_step and 0 <= self.grid_max < 1):
            raise ValidationError("grid must satisfy 0 < step and max < 1")
        unknown = set(self.bounds) - set(METRIC_NAMES)
        if unknown:
            raise ValidationError(f"unknown metric bounds {sorted(unknown)}")
        object.__setattr__(self, "bounds", {**DEFAULT_BOUNDS, **self.bounds})

    @property
    def edge_probability(self) -> float:
        return calibration_edge_probability(self.n) if self.p is None else self.p

    @property
    def coupling(self) -> float:
        return self.coupling_per_node * self.n

    def template(self) -> SimConfig:
        return SimConfig(coupling=self.coupling, phase_shift=self.phase_shift,
                         duration=self.duration, dt=self.dt, seed=self.seed)


def threshold_grid(step: float = 0.01, top: float = 0.99) -> tuple[np.ndarray, np.ndarray]:
    """All ``(nu, mu)`` with ``0 <= mu <= nu <= top`` on a regular grid, nu-major."""
    m = int(math.floor(top / step + 1e-9))  # never step past top
    nus, mus = [], []
    for i in range(m + 1):
        for j in range(i + 1):
            nus.append(round(i * step, 12))
            mus.append(round(j * step, 12))
    return np.array(nus), np.array(mus)


@dataclass(frozen=True)
class GraphSample:
    index: int
    attempts: int
    spec: NetworkSpec
    raw: np.ndarray
    locked: bool
    mean_cv: float
    max_cv: float
    lambda2: float
    weakly_connected: bool


def sample_graph(config: CalibrationConfig, index: int) -> GraphSample:
    """Draw test graph ``index``, redrawing while its experiments fail to lock."""
    template = config.template()
    last = None
    for attempt in range(config.max_redraws + 1):
        seed = [config.seed, index, attempt]
        spec = erdos_renyi_directed(config.n, config.edge_probability, seed)
        sim_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
        batch = run_batch(spec, template, config.experiments, seed=sim_seed,
                          settle_time=config.settle_time, chi=config.chi)
        cvs = [r.cv for r in batch.lock_reports]
        last = GraphSample(
            index=index,
            attempts=attempt + 1,
            spec=spec,
            raw=experiment_average(batch, unlocked="warn").values,
            locked=batch.all_locked,
            mean_cv=float(np.mean(cvs)),
            max_cv=float(np.max(cvs)),
            lambda2=algebraic_connectivity(spec),
            weakly_connected=is_weakly_connected(spec),
        )
        if last.locked:
            return last
    log.warning("test graph %d still unlocked after %d redraws; keeping it", index, config.max_redraws)
    return last


def _confusion_over_grid(truth: np.ndarray, raw: np.ndarray, nus: np.ndarray, mus: np.ndarray):
    """TP/FP/TN/FN at every grid point, reproducing dpi_filter then threshold_cut."""
    n = raw.shape[0]
    off = ~np.eye(n, dtype=bool)
    cand = dpi_candidates(raw)[off]
    r = raw[off]
    t = truth[off]
    counts = np.zeros((nus.size, 4), dtype=np.int64)
    for nu in np.unique(nus):
        sel = np.nonzero(nus == nu)[0]
        kept = np.where(cand & (r < nu), 0.0, r)
        pred = (kept[None, :] >= mus[sel][:, None]) & (kept[None, :] > 0)
        counts[sel, 0] = np.sum(pred & t, axis=1)
        counts[sel, 1] = np.sum(pred & ~t, axis=1)
        counts[sel, 2] = np.sum(~pred & ~t, axis=1)
        counts[sel, 3] = np.sum(~pred & t, axis=1)
    return counts


def _percentages(counts: np.ndarray) -> np.ndarray:
    tp, fp, tn, fn = (counts[:, k].astype(np.float64) for k in range(4))
    total = tp + fp + tn + fn
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.stack([
            100.0 * tp / (tp + fp),
            100.0 * (tp + tn) / total,
            100.0 * tp / (tp + fn),
            100.0 * fp / (fp + tn),
        ], axis=1)
    return out  # NaN marks an undefined metric


@dataclass(frozen=True, eq=False)
class CalibrationMap:
    nu: np.ndarray
    mu: np.ndarray
    means: np.ndarray  # (R, 4) mean PPV, ACC, TPR, FPR; NaN if undefined for every graph
    excluded: np.ndarray  # (R, 4) graphs left out of each mean
    bounds: dict
    samples: tuple = ()

    @property
    def ppv(self) -> np.ndarray:
        return self.means[:, 0]

    @property
    def acc(self) -> np.ndarray:
        return self.means[:, 1]

    @property
    def tpr(self) -> np.ndarray:
        return self.means[:, 2]

    @property
    def fpr(self) -> np.ndarray:
        return self.means[:, 3]

    @property
    def predicates(self) -> np.ndarray:
        b = self.bounds
        with np.errstate(invalid="ignore"):
            return np.stack([
                self.ppv >= b["ppv"],
                self.acc >= b["acc"],
                self.tpr >= b["tpr"],
                self.fpr <= b["fpr"],
            ], axis=1)

    @property
    def satisfied(self) -> np.ndarray:
        return self.predicates.sum(axis=1)

    @property
    def admissible(self) -> np.ndarray:
        return self.satisfied == 4

    @property
    def admissible_area(self) -> int:
        return int(self.admissible.sum())

    def with_bounds(self, **bounds) -> "CalibrationMap":
        return replace(self, bounds={**self.bounds, **bounds})

    def index_of(self, nu: float, mu: float) -> int:
        hit = np.nonzero(np.isclose(self.nu, nu) & np.isclose(self.mu, mu))[0]
        if hit.size == 0:
            raise KeyError(f"({nu}, {mu}) is not a grid point")
        return int(hit[0])


def calibrate(config: CalibrationConfig, workers: int = 1) -> CalibrationMap:
    nus, mus = threshold_grid(config.grid_step, config.grid_max)
    indices = range(config.graphs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(sample_graph, [config] * config.graphs, indices))
    else:
        samples = [sample_graph(config, g) for g in indices]
    total = np.zeros((nus.size, 4))
    seen = np.zeros((nus.size, 4), dtype=np.int64)
    for s in samples:
        pct = _percentages(_confusion_over_grid(s.spec.support, s.raw, nus, mus))
        ok = ~np.isnan(pct)
        total += np.where(ok, pct, 0.0)
        seen += ok
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(seen > 0, total / np.maximum(seen, 1), np.nan)
    return CalibrationMap(nus, mus, means, len(samples) - seen, dict(config.bounds), tuple(samples))


@dataclass(frozen=True)
class Suggestion:
    nu: float
    mu: float
    satisfied: int
    fully_admissible: bool
    candidates: int
    message: str


def suggest_thresholds(cmap: CalibrationMap) -> Suggestion:
    """Pick the admissible point closest to the admissible region's centroid.

    Without admissible points, the same rule runs over the points meeting the
    largest number of bounds.
    """
    sat = cmap.satisfied
    best = int(sat.max())
    pool = np.nonzero(sat == best)[0]
    cx, cy = float(np.mean(cmap.nu[pool])), float(np.mean(cmap.mu[pool]))
    dist = np.hypot(cmap.nu[pool] - cx, cmap.mu[pool] - cy)
    order = np.lexsort((cmap.mu[pool], cmap.nu[pool], np.round(dist, 12)))
    k = int(pool[order[0]])
    full = best == 4
    msg = "admissible" if full else "no fully admissible region; consider relaxing bounds"
    return Suggestion(float(cmap.nu[k]), float(cmap.mu[k]), best, full, int(pool.size), msg)


def map_rows(cmap: CalibrationMap) -> list[list]:
    sat = cmap.satisfied
    adm = cmap.admissible
    rows = []
    for k in range(cmap.nu.size):
        rows.append([cmap.nu[k], cmap.mu[k], *cmap.means[k], int(sat[k]), int(adm[k])])
    return rows


def dumps_map_csv(cmap: CalibrationMap) -> str:
    lines = ["nu,mu,ppv,acc,tpr,fpr,satisfied,admissible"]
    for nu, mu, ppv, acc, tpr, fpr, sat, adm in map_rows(cmap):
        vals = ["" if math.isnan(v) else repr(float(v)) for v in (ppv, acc, tpr, fpr)]
        lines.append(",".join([f"{nu:.2f}", f"{mu:.2f}", *vals, str(sat), str(adm)]))
    return "\n".join(lines) + "\n"
