"""Scoring a reconstruction against the ground-truth graph."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .model import InfluenceMatrix, NetworkSpec, ValidationError

METRIC_NAMES = ("ppv", "acc", "tpr", "fpr")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    n: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")
        if self.tp + self.fp + self.tn + self.fn != self.total:
            raise ValidationError(f"counts do not sum to n(n-1) = {self.total}")

    @property
    def total(self) -> int:
        return self.n * (self.n - 1)


@dataclass(frozen=True)
class MetricsReport:
    """Percentages; a metric with a zero denominator is ``None`` and its reason is kept."""

    ppv: Optional[float]
    acc: Optional[float]
    tpr: Optional[float]
    fpr: Optional[float]
    missing: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    def values(self) -> tuple[Optional[float], ...]:
        return tuple(getattr(self, k) for k in METRIC_NAMES)


def _support(m) -> np.ndarray:
    if isinstance(m, NetworkSpec):
        s = m.weights > 0
    elif isinstance(m, InfluenceMatrix):
        s = m.values > 0
    else:
        s = np.asarray(m) > 0
    s = s.copy()
    np.fill_diagonal(s, False)
    return s


def confusion(truth: NetworkSpec, inferred) -> ConfusionCounts:
    """Edge-level confusion counts over the n(n-1) ordered pairs."""
    t = _support(truth)
    p = _support(inferred)
    if t.shape != p.shape:
        raise ValidationError(f"dimension mismatch: truth {t.shape} vs inferred {p.shape}")
    off = ~np.eye(t.shape[0], dtype=bool)
    return ConfusionCounts(
        tp=int(np.sum(p & t & off)),
        fp=int(np.sum(p & ~t & off)),
        tn=int(np.sum(~p & ~t & off)),
        fn=int(np.sum(~p & t & off)),
        n=int(t.shape[0]),
    )


def report(counts: ConfusionCounts) -> MetricsReport:
    missing = {}

    def pct(num, den, name, why):
        if den == 0:
            missing[name] = why
            return None
        return 100.0 * num / den

    c = counts
    ppv = pct(c.tp, c.tp + c.fp, "ppv", "no inferred links")
    acc = pct(c.tp + c.tn, c.total, "acc", "no ordered pairs")
    tpr = pct(c.tp, c.tp + c.fn, "tpr", "ground truth has no links")
    fpr = pct(c.fp, c.fp + c.tn, "fpr", "ground truth is complete")
    return MetricsReport(ppv, acc, tpr, fpr, missing)


def evaluate(truth: NetworkSpec, inferred) -> MetricsReport:
    return report(confusion(truth, inferred))


def undirected_adjacency(spec: NetworkSpec) -> np.ndarray:
    s = _support(spec)
    return (s | s.T).astype(np.float64)


def laplacian(spec: NetworkSpec) -> np.ndarray:
    a = undirected_adjacency(spec)
    return np.diag(a.sum(axis=1)) - a


def jacobi_eigenvalues(a, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = max(1.0, float(np.abs(a).max()))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(a.diagonal())


def algebraic_connectivity(spec: NetworkSpec) -> float:
    """Second-smallest Laplacian eigenvalue of the undirected, unweighted graph."""
    if spec.n < 2:
        raise ValidationError("algebraic connectivity needs n >= 2")
    lam = jacobi_eigenvalues(laplacian(spec))
    val = float(lam[1])
    return 0.0 if abs(val) < 1e-10 else val


def is_weakly_connected(spec: NetworkSpec) -> bool:
    a = undirected_adjacency(spec) > 0
    n = a.shape[0]
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.nonzero(a[u])[0]:
            v = int(v)
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n
