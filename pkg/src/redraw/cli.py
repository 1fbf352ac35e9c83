"""Command-line entry point: ``redraw <subcommand> ...``.

Every subcommand writes its outputs plus a ``manifest.json`` into the output
directory (``--out``, else ``$REDRAW_OUTPUT_DIR``, else ``./redraw-out``).
``redraw replay manifest.json`` re-runs the recorded command.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import io as rio
from .calibrate import CalibrationConfig, calibrate, dumps_map_csv, suggest_thresholds
from .metrics import evaluate
from .model import (
    ExperimentBatch,
    InfluenceMatrix,
    NetworkSpec,
    ReconstructionParams,
    SimConfig,
    ValidationError,
)
from .reconstruct import UnlockedExperimentError, reconstruct_stages, reconstruct_windowed
from .simulator import DEFAULT_CHI, DEFAULT_SETTLE_TIME, SimulationError, lock_report, run_batch
from .topologies import FIGURE_SETTINGS, FIGURES, TopologyRecipe, build, figure

log = logging.getLogger("redraw")

OUTPUT_ENV = "REDRAW_OUTPUT_DIR"
EXIT_OK, EXIT_INPUT, EXIT_UNLOCKED, EXIT_RUNTIME = 0, 1, 3, 4

KIND_ALIASES = {
    "chain": "chain",
    "star": "star",
    "block": "fig2d_block",
    "geometric-hub": "geometric_hub",
    "ravasz-barabasi": "ravasz_barabasi",
    "regular-ring": "regular_ring",
    "rewired-ring": "rewired_ring",
    "er": "erdos_renyi",
    "file": "from_file",
}


@dataclass
class RunManifest:
    subcommand: str
    argv: list
    config: dict
    seed: Optional[int]
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0

    def save(self, out: Path) -> Path:
        path = out / "manifest.json"
        rio.save_json(asdict(self), path)
        return path


class Outputs:
    """Collects written files for the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []

    def write(self, rel: str, text: str) -> Path:
        path = self.root / rel
        rio.write_atomic(path, text)
        self.files.append(str(path))
        return path


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUTPUT_ENV) or "redraw-out")


def _floats(text: Optional[str]) -> Optional[list[float]]:
    if text is None:
        return None
    return [float(x) for x in text.split(",") if x.strip()]


# -- argument groups --------------------------------------------------------

def _add_out(p: argparse.ArgumentParser, formats: Sequence[str] = ("json", "csv", "dot")) -> None:
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./redraw-out)")
    p.add_argument("--format", action="append", choices=formats, dest="formats",
                   help="emit this format (repeatable)")


def _add_sim(p: argparse.ArgumentParser, coupling: Optional[float] = None) -> None:
    p.add_argument("--k", "--experiments", type=int, default=50, dest="k", help="number of experiments")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coupling", type=float, default=coupling, help="coupling strength c")
    p.add_argument("--phase-shift", "--phi", type=float, default=math.pi / 4, dest="phase_shift")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--settle", "--settle-time", type=float, default=DEFAULT_SETTLE_TIME, dest="settle",
                   help="lock test start time")
    p.add_argument("--chi", type=float, default=DEFAULT_CHI, help="lock threshold on c_v")


def _add_recon(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--window", type=float, default=None, help="window length in seconds")
    p.add_argument("--unlocked", choices=("error", "warn"), default="error")


def _add_topology(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0, dest="topo_seed")
    p.add_argument("--p", type=float, help="edge probability (er)")
    p.add_argument("--weights", help="comma-separated chain weights")
    p.add_argument("--reverse", action="store_true", help="chain runs n -> 1")
    p.add_argument("--hub", type=int)
    p.add_argument("--driver", type=int)
    p.add_argument("--hub-weight", type=float)
    p.add_argument("--path", help="edge-list file (file kind)")


def _recipe(kind: str, args) -> TopologyRecipe:
    if kind in FIGURES:
        return FIGURES[kind]
    if kind not in KIND_ALIASES:
        raise ValidationError(f"unknown topology {kind!r}; choose from {', '.join([*KIND_ALIASES, *FIGURES])}")
    k = KIND_ALIASES[kind]
    params: dict = {}
    if args.n is not None:
        params["nodes" if k == "from_file" else "n"] = args.n
    if k == "erdos_renyi":
        params["seed"] = args.topo_seed
        if args.p is not None:
            params["p"] = args.p
    if args.weights is not None:
        params["weights"] = _floats(args.weights)
    if args.reverse:
        params["reverse"] = True
    for name in ("hub", "driver", "hub_weight"):
        if getattr(args, name) is not None:
            params[name] = getattr(args, name)
    if k == "from_file":
        if not args.path:
            raise ValidationError("file topology needs --path")
        params["path"] = args.path
    return TopologyRecipe(k, params)


def _load_spec(args) -> tuple[NetworkSpec, Optional[str]]:
    if getattr(args, "spec", None):
        return rio.load_network(args.spec), args.spec
    if getattr(args, "figure", None):
        return figure(args.figure), None
    raise ValidationError("give --spec FILE or --figure NAME")


def _settings(args):
    fig = getattr(args, "figure", None)
    return FIGURE_SETTINGS.get(fig) if fig else None


def _template(args, n: int) -> SimConfig:
    s = _settings(args)
    coupling = args.coupling if args.coupling is not None else (s.coupling if s else 10.0)
    return SimConfig(coupling=coupling, phase_shift=args.phase_shift, duration=args.duration,
                     dt=args.dt, seed=args.seed)


def _params(args) -> ReconstructionParams:
    s = _settings(args)
    nu = args.nu if args.nu is not None else (s.nu if s else 0.9)
    mu = args.mu if args.mu is not None else (s.mu if s else 0.8)
    return ReconstructionParams(nu, mu)


def _emit_matrix(outs: Outputs, stem: str, m, formats) -> None:
    values = m.values if isinstance(m, InfluenceMatrix) else np.asarray(m)
    if "csv" in formats:
        outs.write(f"{stem}.csv", rio.dumps_matrix(values))
    if "json" in formats:
        outs.write(f"{stem}.json", json.dumps({"values": values.tolist()}) + "\n")
    if "dot" in formats:
        outs.write(f"{stem}.dot", rio.dumps_dot(values))


def _emit_spec(outs: Outputs, spec: NetworkSpec, formats) -> None:
    if "json" in formats:
        outs.write("network.json", rio.dumps_network(spec))
    if "csv" in formats:
        from .topologies import format_edge_list

        outs.write("network.csv", format_edge_list(spec))
    if "dot" in formats:
        outs.write("network.dot", rio.dumps_dot(spec))


def _locks_doc(batch: ExperimentBatch) -> list[dict]:
    return [{"experiment": tr.experiment_index, **rep.summary()}
            for tr, rep in zip(batch.traces, batch.lock_reports)]


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


# -- subcommands ------------------------------------------------------------

def cmd_generate(args, outs: Outputs) -> dict:
    recipe = _recipe(args.kind, args)
    spec = build(recipe)
    _emit_spec(outs, spec, args.formats or ["json", "dot"])
    print(f"{recipe.kind}: {spec.n} nodes, {spec.edge_count} edges")
    return {"recipe": {"kind": recipe.kind, "params": recipe.params}}


def cmd_simulate(args, outs: Outputs) -> dict:
    spec, _ = _load_spec(args)
    template = _template(args, spec.n)
    batch = run_batch(spec, template, args.k, args.seed, args.settle, args.chi)
    for tr in batch.traces:
        outs.write(f"traces/trace_{tr.experiment_index:03d}.csv", rio.dumps_trace(tr))
    outs.write("locks.json", json.dumps(_json_safe(_locks_doc(batch)), indent=2) + "\n")
    _report_locks(batch)
    return {"sim": rio.sim_config_to_dict(template), "k": args.k, "settle": args.settle,
            "chi": args.chi, "all_locked": batch.all_locked}


def _report_locks(batch: ExperimentBatch) -> None:
    bad = [tr.experiment_index for tr, r in zip(batch.traces, batch.lock_reports) if not r.locked]
    cvs = [r.cv for r in batch.lock_reports]
    print(f"locked {batch.K - len(bad)}/{batch.K}, mean c_v {np.mean(cvs):.4f}")
    if bad:
        print(f"unlocked experiments: {bad}", file=sys.stderr)


def _batch_from_traces(paths: Sequence[Path], settle: float, chi: float) -> ExperimentBatch:
    traces = [rio.load_trace(p, k) for k, p in enumerate(paths, start=1)]
    if not traces:
        raise ValidationError("no trace files found")
    n = traces[0].n
    for tr in traces:
        if tr.n != n or not np.array_equal(tr.times, traces[0].times):
            raise ValidationError("traces differ in node count or time grid")
    t = traces[0].times
    template = SimConfig(duration=float(t[-1] - t[0]), dt=float(t[1] - t[0]))
    reports = tuple(lock_report(tr, settle, chi) for tr in traces)
    return ExperimentBatch(NetworkSpec(np.zeros((n, n))), template, tuple(traces), reports)


def _trace_paths(src: str) -> list[Path]:
    p = Path(src)
    if p.is_dir():
        return sorted(p.glob("trace_*.csv"))
    return [p]


def _emit_reconstruction(outs: Outputs, batch: ExperimentBatch, params: ReconstructionParams,
                         window: Optional[float], unlocked: str, formats) -> InfluenceMatrix:
    if window is None:
        st = reconstruct_stages(batch, params, unlocked)
        for stage in ("raw", "post_dpi", "post_threshold"):
            _emit_matrix(outs, f"rho_{stage}", getattr(st, stage), formats)
        return st.post_threshold
    wr = reconstruct_windowed(batch, params, window, unlocked)
    index = []
    for k, w in enumerate(wr, start=1):
        stem = f"windows/window_{k:03d}"
        _emit_matrix(outs, stem, w.matrix, formats)
        index.append({"window": k, "start": w.start, "end": w.end,
                      "edges": int(w.matrix.support.sum()), "files": [f"{stem}.{f}" for f in formats]})
    outs.write("windows/index.json", json.dumps(index, indent=2) + "\n")
    return wr[len(wr) - 1].matrix


def cmd_reconstruct(args, outs: Outputs) -> dict:
    batch = _batch_from_traces(_trace_paths(args.traces), args.settle, args.chi)
    params = _params(args)
    _report_locks(batch)
    _emit_reconstruction(outs, batch, params, args.window, args.unlocked, args.formats or ["csv"])
    return {"params": rio.params_to_dict(params), "window": args.window, "unlocked": args.unlocked,
            "settle": args.settle, "chi": args.chi}


def _emit_metrics(outs: Outputs, rep, formats, label: Optional[str] = None) -> None:
    if "csv" in formats:
        outs.write("metrics.csv", rio.dumps_metrics_csv(rep, label))
    if "json" in formats or "csv" not in formats:
        outs.write("metrics.json", json.dumps(rio.metrics_to_dict(rep), indent=2) + "\n")


def _print_metrics(rep) -> None:
    cells = [f"{k.upper()}={'n/a' if v is None else f'{v:.2f}'}" for k, v in zip(("ppv", "acc", "tpr", "fpr"),
                                                                                   rep.values())]
    print(" ".join(cells))


def cmd_evaluate(args, outs: Outputs) -> dict:
    truth = rio.load_network(args.truth)
    text = Path(args.inferred).read_text()
    inferred = (rio.loads_network(text).weights if args.inferred.endswith(".json")
                else rio.loads_matrix(text))
    rep = evaluate(truth, inferred)
    _emit_metrics(outs, rep, args.formats or ["json"])
    _print_metrics(rep)
    return {}


def cmd_pipeline(args, outs: Outputs) -> dict:
    spec, _ = _load_spec(args)
    template = _template(args, spec.n)
    params = _params(args)
    formats = args.formats or ["json", "csv", "dot"]
    batch = run_batch(spec, template, args.k, args.seed, args.settle, args.chi)
    outs.write("locks.json", json.dumps(_json_safe(_locks_doc(batch)), indent=2) + "\n")
    _report_locks(batch)
    _emit_spec(outs, spec, ["json"])
    matrix_formats = [f for f in formats if f in ("csv", "dot")] or ["csv"]
    final = _emit_reconstruction(outs, batch, params, args.window, args.unlocked, matrix_formats)
    rep = evaluate(spec, final)
    _emit_metrics(outs, rep, formats, args.figure)
    _print_metrics(rep)
    return {"sim": rio.sim_config_to_dict(template), "k": args.k, "params": rio.params_to_dict(params),
            "window": args.window, "unlocked": args.unlocked, "settle": args.settle, "chi": args.chi,
            "figure": args.figure}


def cmd_calibrate(args, outs: Outputs) -> dict:
    bounds = _parse_bounds(args.bounds)
    bounds.update({k: getattr(args, f"{k}_bound") for k in ("ppv", "acc", "tpr", "fpr")
                   if getattr(args, f"{k}_bound") is not None})
    cfg = CalibrationConfig(n=args.n, graphs=args.graphs, experiments=args.k, grid_step=args.step,
                            bounds=bounds, p=args.p, seed=args.seed, max_redraws=args.max_redraws)
    cmap = calibrate(cfg, workers=args.workers)
    outs.write("calibration_map.csv", dumps_map_csv(cmap))
    sug = suggest_thresholds(cmap)
    samples = [{"graph": s.index, "attempts": s.attempts, "edges": s.spec.edge_count, "locked": s.locked,
                "mean_cv": s.mean_cv, "max_cv": s.max_cv, "lambda2": s.lambda2, "weakly_connected": s.weakly_connected}
               for s in cmap.samples]
    doc = {"suggestion": asdict(sug), "admissible_area": cmap.admissible_area,
           "mean_cv": float(np.mean([s.mean_cv for s in cmap.samples])), "graphs": samples}
    outs.write("calibration.json", json.dumps(_json_safe(doc), indent=2) + "\n")
    print(f"admissible points: {cmap.admissible_area}; suggested nu={sug.nu:.2f} mu={sug.mu:.2f} ({sug.message})")
    cfg_doc = asdict(cfg)
    return {"calibration": cfg_doc, "workers": args.workers}


def _parse_bounds(text: Optional[str]) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"bad bound {item!r}; expected name=value")
        out[key.strip().lower()] = float(val)
    return out


BENCH_SUITES = {
    "fig2": ("fig2a", "fig2b", "fig2c", "fig2d"),
    "fig4": ("fig4a", "fig4b"),
    "fig5": ("fig5a", "fig5b"),
}
VARIANTS = {"regular": "fig5a", "rewired": "fig5b", "geometric": "fig4a", "ravasz-barabasi": "fig4b"}
SWEEP_TOPOLOGIES = {"chain4": "fig2a", "ring20": "fig5a"}


def _figure_row(name: str, k: int, seed: int, unlocked: str):
    spec = figure(name)
    s = FIGURE_SETTINGS[name]
    batch = run_batch(spec, SimConfig(coupling=s.coupling, seed=seed), k, seed)
    inferred = reconstruct_stages(batch, ReconstructionParams(s.nu, s.mu), unlocked).post_threshold
    return evaluate(spec, inferred), batch


def cmd_benchmark(args, outs: Outputs) -> dict:
    lines = []
    if args.suite == "k-sweep":
        name = SWEEP_TOPOLOGIES[args.topology]
        ks = [int(x) for x in args.ks.split(",")]
        lines.append("topology,K,PPV,ACC,TPR,FPR")
        for k in ks:
            rep, _ = _figure_row(name, k, args.seed, args.unlocked)
            lines.append(",".join([args.topology, str(k)] + [_cell(v) for v in rep.values()]))
    else:
        names = BENCH_SUITES[args.suite]
        if args.variant is not None:
            if VARIANTS[args.variant] not in names:
                raise ValidationError(f"variant {args.variant!r} does not belong to suite {args.suite}")
            names = (VARIANTS[args.variant],)
        lines.append("topology,n,e,c,nu,mu,PPV,ACC,TPR,FPR")
        for name in names:
            rep, batch = _figure_row(name, args.k, args.seed, args.unlocked)
            s = FIGURE_SETTINGS[name]
            lines.append(",".join([name, str(batch.spec.n), str(batch.spec.edge_count), repr(s.coupling),
                                   repr(s.nu), repr(s.mu)] + [_cell(v) for v in rep.values()]))
    text = "\n".join(lines) + "\n"
    outs.write(f"benchmark_{args.suite}.csv", text)
    sys.stdout.write(text)
    return {"suite": args.suite, "variant": args.variant, "k": args.k, "ks": args.ks,
            "topology": args.topology, "unlocked": args.unlocked}


def _cell(v) -> str:
    return "" if v is None else f"{v:.2f}"


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="redraw", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a ground-truth network")
    p.add_argument("kind", help=f"one of {', '.join([*KIND_ALIASES, *FIGURES])}")
    _add_topology(p)
    _add_out(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate K experiments on a network")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="NetworkSpec JSON")
    g.add_argument("--figure", choices=sorted(FIGURES))
    _add_sim(p)
    _add_out(p, ("csv",))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="infer the influence matrix from phase traces")
    p.add_argument("--traces", required=True, help="trace CSV or directory of trace_*.csv")
    p.add_argument("--settle", "--settle-time", type=float, default=DEFAULT_SETTLE_TIME, dest="settle")
    p.add_argument("--chi", type=float, default=DEFAULT_CHI)
    p.set_defaults(figure=None)
    _add_recon(p)
    _add_out(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score an inferred matrix against the truth")
    p.add_argument("--truth", required=True, help="NetworkSpec JSON")
    p.add_argument("--inferred", required=True, help="matrix CSV or NetworkSpec JSON")
    _add_out(p, ("json", "csv"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="simulate, reconstruct and evaluate in one go")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="NetworkSpec JSON")
    g.add_argument("--figure", choices=sorted(FIGURES))
    _add_sim(p)
    _add_recon(p)
    _add_out(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("calibrate", help="map admissible (nu, mu) on random graphs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--graphs", type=int, default=100)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--grid-step", "--step", type=float, default=0.01, dest="step")
    p.add_argument("--bounds", help="e.g. ppv=40,acc=70,tpr=40,fpr=30")
    p.add_argument("--p", type=float, default=None, help="edge probability (default ln n / 2n)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-redraws", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    for name in ("ppv", "acc", "tpr", "fpr"):
        p.add_argument(f"--{name}-bound", type=float, default=None)
    _add_out(p, ("csv",))
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("benchmark", help="rerun a named experiment suite")
    p.add_argument("suite", choices=[*BENCH_SUITES, "k-sweep"])
    p.add_argument("--variant", choices=sorted(VARIANTS))
    p.add_argument("--topology", choices=sorted(SWEEP_TOPOLOGIES), default="chain4")
    p.add_argument("--ks", default="50,75,100", help="K values for k-sweep")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unlocked", choices=("error", "warn"), default="warn")
    _add_out(p, ("csv",))
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory for the rerun")
    p.set_defaults(func=None)
    return ap


def _inputs(args) -> list[str]:
    keys = ("spec", "traces", "truth", "inferred", "path", "manifest")
    return [str(getattr(args, k)) for k in keys if getattr(args, k, None)]


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        doc = json.loads(Path(args.manifest).read_text())
        rerun = list(doc["argv"])
        if args.out:
            rerun = _strip_out(rerun) + ["--out", args.out]
        return main(rerun)

    out = _out_dir(args)
    outs = Outputs(out)
    t0 = time.perf_counter()
    code = EXIT_OK
    config: dict = {}
    try:
        config = args.func(args, outs)
        if config.get("all_locked") is False:
            code = EXIT_UNLOCKED
    except UnlockedExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_UNLOCKED
    except (ValidationError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    config = {k: v for k, v in (config or {}).items()}
    manifest = RunManifest(
        subcommand=args.command,
        argv=_strip_out(argv),
        config=_json_safe(_plain(config)),
        seed=getattr(args, "seed", None),
        inputs=_inputs(args),
        outputs=list(outs.files),
        duration_s=time.perf_counter() - t0,
    )
    manifest.save(out)
    return code


def _strip_out(argv: list) -> list:
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


if __name__ == "__main__":
    sys.exit(main())
