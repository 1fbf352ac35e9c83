"""File formats: JSON documents, CSV traces and matrices, DOT digraphs."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .metrics import METRIC_NAMES, MetricsReport
from .model import (
    InfluenceMatrix,
    NetworkSpec,
    PhaseTrace,
    ReconstructionParams,
    SimConfig,
    ValidationError,
)

PathLike = Union[str, Path]


def write_atomic(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- NetworkSpec ---------------------------------------------------------

def network_to_dict(spec: NetworkSpec) -> dict:
    return {"type": "NetworkSpec", "n": spec.n, "weights": spec.weights.tolist()}


def network_from_dict(doc: dict) -> NetworkSpec:
    try:
        weights = np.array(doc["weights"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed NetworkSpec document: {exc}") from None
    if "n" in doc and weights.shape != (doc["n"], doc["n"]):
        raise ValidationError(f"weights shape {weights.shape} does not match n={doc['n']}")
    return NetworkSpec(weights)


def dumps_network(spec: NetworkSpec) -> str:
    return json.dumps(network_to_dict(spec), indent=2) + "\n"


def loads_network(text: str) -> NetworkSpec:
    return network_from_dict(json.loads(text))


def save_network(spec: NetworkSpec, path: PathLike) -> None:
    write_atomic(path, dumps_network(spec))


def load_network(path: PathLike) -> NetworkSpec:
    return loads_network(Path(path).read_text())


# -- SimConfig / ReconstructionParams -----------------------------------

def sim_config_to_dict(cfg: SimConfig) -> dict:
    def arr(v):
        return None if v is None else v.tolist()

    return {
        "type": "SimConfig",
        "natural_frequencies": arr(cfg.natural_frequencies),
        "initial_phases": arr(cfg.initial_phases),
        "coupling": cfg.coupling,
        "phase_shift": cfg.phase_shift,
        "duration": cfg.duration,
        "dt": cfg.dt,
        "seed": cfg.seed,
    }


def sim_config_from_dict(doc: dict) -> SimConfig:
    keys = ("natural_frequencies", "initial_phases", "coupling", "phase_shift", "duration", "dt", "seed")
    return SimConfig(**{k: doc[k] for k in keys if k in doc and doc[k] is not None})


def params_to_dict(params: ReconstructionParams) -> dict:
    return {
        "type": "ReconstructionParams",
        "nu": params.nu,
        "mu": params.mu,
        "windows": None if params.windows is None else list(params.windows),
    }


def params_from_dict(doc: dict) -> ReconstructionParams:
    windows = doc.get("windows")
    return ReconstructionParams(doc["nu"], doc["mu"], None if windows is None else tuple(windows))


def save_json(obj: dict, path: PathLike) -> None:
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


# -- PhaseTrace -----------------------------------------------------------

def dumps_trace(trace: PhaseTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"theta_{i + 1}" for i in range(trace.n)])
    for t, row in zip(trace.times, trace.phases):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
    return buf.getvalue()


def loads_trace(text: str, experiment_index: int = 1) -> PhaseTrace:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0].strip() != "t":
        raise ValidationError("trace CSV must start with a 't,theta_1,...' header")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != len(rows[0]):
        raise ValidationError("trace CSV rows do not match the header")
    return PhaseTrace(data[:, 0], data[:, 1:], experiment_index)


def save_trace(trace: PhaseTrace, path: PathLike) -> None:
    write_atomic(path, dumps_trace(trace))


def load_trace(path: PathLike, experiment_index: int = 1) -> PhaseTrace:
    return loads_trace(Path(path).read_text(), experiment_index)


# -- matrices ---------------------------------------------------------------

def dumps_matrix(values) -> str:
    values = np.asarray(values)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in values:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def loads_matrix(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    return np.array([[float(x) for x in r] for r in rows], dtype=np.float64)


def dumps_dot(m, name: str = "G") -> str:
    """DOT digraph; an edge ``j -> i`` carries ``m[i, j]`` rounded to 3 decimals."""
    values = m.values if isinstance(m, InfluenceMatrix) else (
        m.weights if isinstance(m, NetworkSpec) else np.asarray(m))
    n = values.shape[0]
    lines = [f"digraph {name} {{"]
    lines += [f"  {k + 1};" for k in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and values[i, j] > 0:
                lines.append(f'  {j + 1} -> {i + 1} [label="{values[i, j]:.3f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- metrics ----------------------------------------------------------------

def metrics_to_dict(rep: MetricsReport) -> dict:
    return {"PPV": rep.ppv, "ACC": rep.acc, "TPR": rep.tpr, "FPR": rep.fpr, "missing": dict(rep.missing)}


def dumps_metrics_csv(rep: MetricsReport, label: str | None = None) -> str:
    head = (["topology"] if label is not None else []) + [k.upper() for k in METRIC_NAMES]
    row = ([label] if label is not None else []) + ["" if v is None else repr(float(v)) for v in rep.values()]
    return ",".join(head) + "\n" + ",".join(row) + "\n"
