"""Ground-truth graph builders and edge-list ingestion.

Node labels are 1-based here, matching the figures the builders reproduce.
An edge ``(s, t, w)`` means node ``s`` influences node ``t`` with weight ``w``,
stored as ``weights[t-1, s-1] = w``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .model import NetworkSpec, ValidationError, validate_network

Edge = tuple[int, int, float]

KINDS = (
    "chain",
    "star",
    "fig2d_block",
    "geometric_hub",
    "ravasz_barabasi",
    "regular_ring",
    "rewired_ring",
    "erdos_renyi",
    "from_file",
)

# Four-node block: a transitive tournament (6 edges).  The weights are strong
# enough that every transitive link keeps a small lag and survives pruning at
# nu = 0.9.
BLOCK_EDGES: tuple[Edge, ...] = (
    (1, 2, 4.0),
    (2, 3, 4.0),
    (3, 4, 4.0),
    (1, 3, 3.0),
    (2, 4, 3.0),
    (1, 4, 3.0),
)

# Hub inputs: two nodes per block feed node 17.  Hub weights at or above the
# block weights couple the blocks through the hub and add false positives
# between blocks, so the default stays below them.
HUB_PORTS = (3, 4)
HUB_WEIGHT = 1.0

RING_NEAR_WEIGHT = 1.2
RING_FAR_WEIGHT = 0.8
REWIRED_TARGETS = (4, 8, 12, 16, 20)
REWIRED_SOURCES = (19, 3, 7, 11, 15)  # each target minus 5, mod 20
REWIRED_WEIGHT = 20.0


def from_edges(n: int, edges: Iterable[Edge]) -> NetworkSpec:
    a = np.zeros((n, n))
    for s, t, w in edges:
        if not (1 <= s <= n and 1 <= t <= n):
            raise ValidationError(f"edge {s}->{t} references a node outside 1..{n}")
        if s == t:
            raise ValidationError(f"self-loop at node {s}")
        a[t - 1, s - 1] = w
    return validate_network(NetworkSpec(a))


def chain(n: int = 4, weights: Optional[Sequence[float]] = None, reverse: bool = False) -> NetworkSpec:
    """Directed path.  Forward: ``k -> k+1`` with ``weights[k-1]``.

    ``reverse=True`` builds ``n -> n-1 -> ... -> 1`` where ``weights[k-1]`` is
    the weight of ``k+1 -> k``, i.e. entry ``a[k, k+1]`` in 1-based labels.
    """
    w = [1.0] * (n - 1) if weights is None else list(weights)
    if len(w) != n - 1:
        raise ValidationError(f"chain of {n} nodes needs {n - 1} weights, got {len(w)}")
    if reverse:
        return from_edges(n, [(k + 1, k, w[k - 1]) for k in range(1, n)])
    return from_edges(n, [(k, k + 1, w[k - 1]) for k in range(1, n)])


def star(n: int = 4, hub: int = 1, leaf_weight: float = 1.0, driver: Optional[int] = None,
         driver_weight: float = 2.0) -> NetworkSpec:
    """Hub driving every other node; an optional ``driver`` instead drives the hub."""
    edges = []
    for k in range(1, n + 1):
        if k == hub:
            continue
        if k == driver:
            edges.append((driver, hub, driver_weight))
        else:
            edges.append((hub, k, leaf_weight))
    return from_edges(n, edges)


def fig2d_block(edges: Sequence[Edge] = BLOCK_EDGES) -> NetworkSpec:
    return from_edges(4, edges)


def _blocks(block_edges: Sequence[Edge], blocks: int = 4, size: int = 4) -> list[Edge]:
    out = []
    for b in range(blocks):
        off = b * size
        out.extend((s + off, t + off, w) for s, t, w in block_edges)
    return out


def geometric_hub(block_edges: Sequence[Edge] = BLOCK_EDGES, hub_weight: float = HUB_WEIGHT,
                  ports: Sequence[int] = HUB_PORTS) -> NetworkSpec:
    """Four blocks around hub node 17.

    ``ports`` are positions 1..4 inside a block; each such node in every block
    influences the hub.
    """
    edges = _blocks(block_edges)
    for b in range(4):
        edges.extend((p + 4 * b, 17, hub_weight) for p in ports)
    return from_edges(17, edges)


def ravasz_barabasi(block_edges: Sequence[Edge] = BLOCK_EDGES, hub_weight: float = 5.0) -> NetworkSpec:
    """Four blocks; hub node 17 is influenced by all 16 block nodes."""
    edges = _blocks(block_edges)
    edges.extend((k, 17, hub_weight) for k in range(1, 17))
    return from_edges(17, edges)


def regular_ring(n: int = 20, near_weight: float = RING_NEAR_WEIGHT,
                 far_weight: float = RING_FAR_WEIGHT) -> NetworkSpec:
    """Node ``i`` influenced by ``i-1`` (stronger) and ``i-2`` (weaker), indices mod n."""
    edges = []
    for i in range(1, n + 1):
        edges.append(((i - 2) % n + 1, i, near_weight))
        edges.append(((i - 3) % n + 1, i, far_weight))
    return from_edges(n, edges)


def rewired_ring(n: int = 20, near_weight: float = RING_NEAR_WEIGHT, far_weight: float = RING_FAR_WEIGHT,
                 sources: Sequence[int] = REWIRED_SOURCES, targets: Sequence[int] = REWIRED_TARGETS,
                 rewired_weight: float = REWIRED_WEIGHT) -> NetworkSpec:
    if len(sources) != len(targets):
        raise ValidationError("rewiring sources and targets differ in length")
    base = regular_ring(n, near_weight, far_weight).weights.copy()
    for s, t in zip(sources, targets):
        if base[t - 1, s - 1] > 0:
            raise ValidationError(f"rewired edge {s}->{t} already in the ring")
        base[t - 1, s - 1] = rewired_weight
    return validate_network(NetworkSpec(base))


def erdos_renyi_directed(n: int, p: float, seed: int) -> NetworkSpec:
    """Each ordered pair i != j carries a unit edge independently with probability p."""
    if not 0 < p < 1:
        raise ValidationError(f"edge probability must lie in (0, 1), got {p}")
    rng = np.random.default_rng(seed)
    a = (rng.random((n, n)) < p).astype(np.float64)
    np.fill_diagonal(a, 0.0)
    return NetworkSpec(a)


def calibration_edge_probability(n: int) -> float:
    return math.log(n) / (2 * n)


def parse_edge_list(text: str, nodes: Optional[int] = None) -> NetworkSpec:
    """Parse ``source,target[,weight]`` lines (1-based labels, ``#`` comments allowed)."""
    rows: list[Edge] = []
    seen = set()
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or not any(cells) or cells[0].startswith("#"):
            continue
        if lineno == 1 and cells[0].lower() in ("source", "src", "from"):
            continue
        if len(cells) not in (2, 3):
            raise ValidationError(f"line {lineno}: expected source,target[,weight]")
        try:
            s, t = int(cells[0]), int(cells[1])
        except ValueError:
            raise ValidationError(f"line {lineno}: unknown node label {cells[0]!r} or {cells[1]!r}") from None
        try:
            w = float(cells[2]) if len(cells) == 3 and cells[2] else 1.0
        except ValueError:
            raise ValidationError(f"line {lineno}: bad weight {cells[2]!r}") from None
        if s == t:
            raise ValidationError(f"line {lineno}: self-loop at node {s}")
        if w < 0 or not math.isfinite(w):
            raise ValidationError(f"line {lineno}: negative or non-finite weight {w}")
        if (s, t) in seen:
            raise ValidationError(f"line {lineno}: duplicate edge {s}->{t}")
        if s < 1 or t < 1 or (nodes is not None and (s > nodes or t > nodes)):
            raise ValidationError(f"line {lineno}: unknown node label in {s}->{t}")
        seen.add((s, t))
        rows.append((s, t, w))
    n = nodes if nodes is not None else max((max(s, t) for s, t, _ in rows), default=0)
    if n < 2:
        raise ValidationError("edge list defines fewer than 2 nodes; pass the node count")
    a = np.zeros((n, n))
    for s, t, w in rows:
        a[t - 1, s - 1] = w
    return validate_network(NetworkSpec(a))


def ingest_edge_list(path: Union[str, Path], nodes: Optional[int] = None) -> NetworkSpec:
    return parse_edge_list(Path(path).read_text(), nodes)


def format_edge_list(spec: NetworkSpec) -> str:
    lines = ["source,target,weight"]
    lines += [f"{s + 1},{t + 1},{w!r}" for s, t, w in spec.edges()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TopologyRecipe:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown topology kind {self.kind!r}; choose from {', '.join(KINDS)}")


_BUILDERS = {
    "chain": chain,
    "star": star,
    "fig2d_block": fig2d_block,
    "geometric_hub": geometric_hub,
    "ravasz_barabasi": ravasz_barabasi,
    "regular_ring": regular_ring,
    "rewired_ring": rewired_ring,
    "erdos_renyi": erdos_renyi_directed,
    "from_file": ingest_edge_list,
}


def build(recipe: TopologyRecipe) -> NetworkSpec:
    params = dict(recipe.params)
    if recipe.kind == "erdos_renyi":
        n = int(params.get("n", 10))
        params.setdefault("p", calibration_edge_probability(n))
        params.setdefault("seed", 0)
        params["n"] = n
    try:
        spec = _BUILDERS[recipe.kind](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {recipe.kind}: {exc}") from None
    return validate_network(spec)


# Named reference topologies.  Entry a[i, j] is the influence of j on i.
FIGURES = {
    "fig2a": TopologyRecipe("chain", {"n": 4}),
    "fig2b": TopologyRecipe("chain", {"n": 4, "weights": [2.0, 1.5, 1.0], "reverse": True}),
    "fig2c": TopologyRecipe("star", {"n": 4, "hub": 1, "driver": 2, "driver_weight": 2.0}),
    "fig2d": TopologyRecipe("fig2d_block", {}),
    "fig4a": TopologyRecipe("geometric_hub", {}),
    "fig4b": TopologyRecipe("ravasz_barabasi", {}),
    "fig5a": TopologyRecipe("regular_ring", {}),
    "fig5b": TopologyRecipe("rewired_ring", {}),
}


def figure(name: str) -> NetworkSpec:
    try:
        return build(FIGURES[name])
    except KeyError:
        raise ValidationError(f"unknown figure topology {name!r}; choose from {', '.join(FIGURES)}") from None


@dataclass(frozen=True)
class RunSettings:
    coupling: float
    nu: float
    mu: float


# Coupling and thresholds each figure topology is run with.
FIGURE_SETTINGS = {
    **{k: RunSettings(10.0, 0.9, 0.8) for k in ("fig2a", "fig2b", "fig2c", "fig2d")},
    **{k: RunSettings(40.0, 0.9, 0.35) for k in ("fig4a", "fig4b")},
    **{k: RunSettings(50.0, 0.65, 0.60) for k in ("fig5a", "fig5b")},
}
