"""Command-line front end: ``particle-forge <command> --config cfg.json``.

Commands write plain data files (JSON, JSONL, CSV) into the output
directory.  Everything random derives from the config seed, so rerunning a
command reproduces its files byte for byte; wall-clock figures only ever go
into ``report_metadata.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

from .graph import Graph, Window, bfs_distances
from .graphical import direct_affect_tail, sample_clocks
from .ips.engine import run
from .ips.kernels import KernelContractError, make_kernel, sites
from .random_graphs import (CouplingField, PointSet, RadiusLaw, integer_lattice, lattice_points,
                            sample_grg, sample_lrp)
from .rng import key_hash, keyed_uniform
from .saw import EnumerationCapError, trail_table, trail_tables_to_csv
from .verify import harness
from .verify.oracle import CtmcOracle, StateSpaceTooLarge
from .verify.report import ExperimentReport, format_table, reports_to_json

EXPERIMENTS = ("oracle", "bounds", "percolation", "convergence", "conservation")


class ConfigError(ValueError):
    pass


# -- config ---------------------------------------------------------------

def load_schema() -> dict:
    text = resources.files("particle_forge").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def load_config(path: str | os.PathLike, seed: int | None = None) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("schema violation:\n" + "\n".join(lines))
    graph = cfg.get("graph")
    if graph and graph["kind"] == "file":
        gp = Path(graph["path"])
        if not gp.is_absolute():
            gp = path.parent / gp
        if not gp.exists():
            raise ConfigError(f"graph file not found: {gp}")
        graph["path"] = str(gp)
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg["seed"] = seed
    return cfg


def _require(cfg: dict, key: str, command: str):
    if key not in cfg:
        raise ConfigError(f"'{command}' needs a '{key}' section in the config")
    return cfg[key]


def _points(window: dict) -> PointSet:
    if "basis" in window:
        return lattice_points(window["basis"], -window["radius"], window["radius"])
    return integer_lattice(window["dim"], window["radius"])


def _nearest_neighbor_graph(pts: PointSet) -> Graph:
    if len(pts) < 2:
        return Graph.empty(len(pts))
    tree = cKDTree(pts.coords)
    d, _ = tree.query(pts.coords, k=2)
    r = float(d[:, 1].min()) * (1 + 1e-9)
    return Graph.from_edges(len(pts), sorted(tree.query_pairs(r)))


def build_graph(cfg: dict) -> tuple[Graph, PointSet | None]:
    gcfg = _require(cfg, "graph", "graph")
    seed = int(key_hash(cfg["seed"], "graph"))
    kind = gcfg["kind"]
    if kind == "explicit":
        return Graph.from_edges(gcfg["n"], gcfg["edges"]), None
    if kind == "file":
        return Graph.from_json(Path(gcfg["path"]).read_text()), None
    pts = _points(gcfg["window"])
    if kind == "lattice":
        return _nearest_neighbor_graph(pts), pts
    if kind == "lrp":
        J = gcfg["J"]
        field = CouplingField(beta=gcfg["beta"], p=gcfg["p"], kind=J["kind"],
                              exponent=J.get("exponent", 3.0))
        return sample_lrp(pts, field, seed), pts
    law = gcfg["radius_law"]
    law = RadiusLaw(law["kind"], K=law.get("K", 3.0), value=law.get("value", 0.0))
    return sample_grg(pts, law, seed), pts


def build_kernel(cfg: dict):
    model = _require(cfg, "model", "model")
    try:
        return make_kernel(model["name"], **model.get("params", {}))
    except TypeError as e:
        raise ConfigError(f"bad parameters for model {model['name']!r}: {e}") from None


def _state(s):
    return tuple(s) if isinstance(s, list) else s


def initial_state(cfg: dict, g: Graph) -> list:
    icfg = cfg.get("initial", {"kind": "bernoulli", "p": 0.5})
    if icfg["kind"] == "bernoulli":
        u = keyed_uniform(int(key_hash(cfg["seed"], "initial")), np.arange(g.n))
        return (u < icfg["p"]).astype(int).tolist()
    if icfg["kind"] == "constant":
        return [_state(icfg["value"])] * g.n
    states = [_state(s) for s in icfg["states"]]
    if len(states) != g.n:
        raise ConfigError(f"explicit initial state has {len(states)} entries for {g.n} vertices")
    return states


def window_cores(g: Graph, pts: PointSet | None, radii) -> dict[int, frozenset]:
    """Vertices within sup-distance ``m`` of the origin (or graph distance
    ``m`` from vertex 0 when the graph has no coordinates)."""
    if pts is not None:
        r = np.abs(pts.coords).max(axis=1)
        return {m: frozenset(np.flatnonzero(r <= m + 1e-9).tolist()) for m in radii}
    dist = np.array(bfs_distances(g, 0))
    return {m: frozenset(np.flatnonzero((dist >= 0) & (dist <= m)).tolist()) for m in radii}


def _origin(g: Graph, pts: PointSet | None) -> int:
    return pts.index_of([0] * pts.dim) if pts is not None else 0


# -- commands -------------------------------------------------------------

def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


def cmd_gen_graph(cfg: dict, out: Path) -> list[Path]:
    g, _ = build_graph(cfg)
    return [_write(out, "graph.json", g.to_json() + "\n")]


def _trail_rates(cfg: dict, g: Graph) -> list[float]:
    mode = cfg.get("trails", {}).get("rates", "model" if "model" in cfg else "unit")
    if mode == "unit":
        return [1.0] * g.n
    kernel = build_kernel(cfg)
    return [kernel.rate_bound(s) for s in sites(g)]


def _trail_vertices(cfg: dict, g: Graph, pts) -> list[int]:
    vs = cfg.get("trails", {}).get("vertices", [_origin(g, pts)])
    for v in vs:
        if not 0 <= v < g.n:
            raise ConfigError(f"trail vertex {v} not in a graph with {g.n} vertices")
    return vs


def cmd_trails(cfg: dict, out: Path) -> list[Path]:
    g, pts = build_graph(cfg)
    c = _trail_rates(cfg, g)
    n_max = cfg.get("trails", {}).get("n_max", 6)
    tables = [trail_table(g, c, v, n_max) for v in _trail_vertices(cfg, g, pts)]
    return [_write(out, "trails.csv", trail_tables_to_csv(tables))]


def cmd_simulate(cfg: dict, out: Path) -> list[Path]:
    g, pts = build_graph(cfg)
    kernel = build_kernel(cfg)
    horizon = float(cfg.get("horizon", 1.0))
    x0 = initial_state(cfg, g)
    rates = [kernel.rate_bound(s) for s in sites(g)]
    clocks = sample_clocks(g, rates, horizon, int(key_hash(cfg["seed"], "clocks")))
    written = [_write(out, "clocks.csv", clocks.to_csv())]
    full = run(g, None, kernel, x0, clocks, horizon)
    written.append(_write(out, "trajectory.jsonl", full.to_jsonl()))
    radii = cfg.get("windows", [])
    for m, core in sorted(window_cores(g, pts, radii).items()):
        tr = run(g, Window(g, core), kernel, x0, clocks, horizon)
        written.append(_write(out, f"trajectory_m{m}.jsonl", tr.to_jsonl()))
    return written


def _experiment_seed(cfg: dict, name: str) -> int:
    return int(key_hash(cfg["seed"], "experiment", name))


def _run_experiment(name: str, cfg: dict) -> list[ExperimentReport]:
    v = cfg.get("verify", {})
    seed = _experiment_seed(cfg, name)
    if name == "oracle":
        return harness.oracle_suite(v.get("oracle_replicas", 100_000), seed)
    if name == "bounds":
        return harness.bounds_suite(v.get("bound_replicas", 100_000), seed)
    if name == "percolation":
        return [harness.percolation_suite(replicas=v.get("percolation_replicas", 10_000),
                                          seed=seed)]
    if name == "convergence":
        return [harness.window_convergence(seeds=v.get("convergence_seeds", 100), seed=seed)]
    if name == "conservation":
        return harness.conservation_suite(events=v.get("conservation_events", 10_000), seed=seed)
    raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")


def _selected(cfg: dict, experiment: str | None) -> list[str]:
    if experiment is not None:
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
        return [experiment]
    return list(cfg.get("experiments", EXPERIMENTS))


def cmd_verify(cfg: dict, out: Path, workers: int = 1, experiment: str | None = None
               ) -> tuple[list[Path], bool, str]:
    names = _selected(cfg, experiment)
    t0 = time.perf_counter()
    if workers > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(names))) as pool:
            batches = list(pool.map(_run_experiment, names, [cfg] * len(names)))
    else:
        batches = [_run_experiment(n, cfg) for n in names]
    reports = sorted((r for b in batches for r in b), key=lambda r: r.experiment)
    passed = all(r.passed for r in reports)
    body = {"schema_version": 1, "seed": cfg["seed"], "experiments": names, "passed": passed,
            "reports": json.loads(reports_to_json(reports, include_runtime=False))}
    meta = {"created_unix": time.time(), "total_runtime_s": time.perf_counter() - t0,
            "workers": workers, "runtime_s": {r.experiment: r.runtime for r in reports}}
    written = [
        _write(out, "report.json", json.dumps(body, indent=2, sort_keys=True) + "\n"),
        _write(out, "report.txt", format_table(reports, include_runtime=False)),
        _write(out, "report_metadata.json", json.dumps(meta, indent=2, sort_keys=True) + "\n"),
    ]
    return written, passed, format_table(reports)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float) -> str:
    return repr(float(x))


def cmd_plot_data(cfg: dict, out: Path) -> list[Path]:
    g, pts = build_graph(cfg)
    plot = cfg.get("plot", {})
    seed = cfg["seed"]
    v0 = _trail_vertices(cfg, g, pts)[0]
    c = _trail_rates(cfg, g)

    tail = direct_affect_tail(g, v0, c, 0.05, range(1, 11), plot.get("tail_replicas", 2000),
                              int(key_hash(seed, "plot", "tail")))
    tail_rows = [(n, _f(a), _f(b)) for n, a, b in zip(tail.lengths, tail.forward, tail.backward)]

    n_max = cfg.get("trails", {}).get("n_max", 6)
    ratio_rows = []
    for v in _trail_vertices(cfg, g, pts):
        t = trail_table(g, c, v, n_max)
        for i in range(1, len(t.raw_double)):
            rs = t.raw_simple[i] / t.raw_simple[i - 1] if t.raw_simple[i - 1] > 0 else float("nan")
            rd = t.raw_double[i] / t.raw_double[i - 1] if t.raw_double[i - 1] > 0 else float("nan")
            ratio_rows.append((v, i + 2, _f(rs), _f(rd)))

    tv_rows = []
    if "model" in cfg:
        kernel = build_kernel(cfg)
        x0 = initial_state(cfg, g)
        t = float(cfg.get("horizon", 1.0))
        try:
            oracle = CtmcOracle(g, kernel)
        except (StateSpaceTooLarge, NotImplementedError):
            oracle = None
        if oracle is not None:
            for k, reps in enumerate(plot.get("tv_replicas", [100, 1000, 10000])):
                rep = harness.simulation_vs_oracle(g, kernel, x0, t, reps,
                                                   int(key_hash(seed, "plot", "tv", k)),
                                                   oracle=oracle)
                tv_rows.append((reps, _f(rep.measured["tv"])))

    return [
        _write(out, "tail_decay.csv", _csv(("n", "forward", "backward"), tail_rows)),
        _write(out, "trail_ratios.csv", _csv(("vertex", "n", "ratio_simple", "ratio_double"),
                                             ratio_rows)),
        _write(out, "tv_distances.csv", _csv(("replicas", "tv"), tv_rows)),
    ]


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides the config)")
    common.add_argument("--workers", type=int, metavar="N",
                        help="worker processes (default: available CPUs)")
    common.add_argument("--experiment", metavar="NAME", choices=EXPERIMENTS,
                        help="run a single verification experiment")
    p = argparse.ArgumentParser(prog="particle-forge",
                                description="Graphical construction of interacting particle systems.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("gen-graph", "write the sampled or explicit graph as JSON"),
                       ("trails", "jump rate trail tables as CSV"),
                       ("simulate", "clock realization and trajectories (JSONL)"),
                       ("verify", "verification experiments: report JSON and table"),
                       ("plot-data", "CSV series for tail decay, trail ratios, TV distances")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        out = Path(args.out or cfg.get("output_dir", "out"))
        workers = args.workers or cfg.get("workers") or os.cpu_count() or 1
        if workers < 1:
            raise ConfigError("--workers must be at least 1")
        ok = True
        if args.command == "gen-graph":
            written = cmd_gen_graph(cfg, out)
        elif args.command == "trails":
            written = cmd_trails(cfg, out)
        elif args.command == "simulate":
            written = cmd_simulate(cfg, out)
        elif args.command == "verify":
            written, ok, table = cmd_verify(cfg, out, workers, args.experiment)
            print(table, end="")
        else:
            written = cmd_plot_data(cfg, out)
    except ConfigError as e:
        print(f"particle-forge: config error: {e}", file=sys.stderr)
        return 2
    except (EnumerationCapError, KernelContractError, ValueError) as e:
        print(f"particle-forge: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    for p in written:
        print(f"wrote {p}")
    if not ok:
        print("particle-forge: at least one experiment failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
