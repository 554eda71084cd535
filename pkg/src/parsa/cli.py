"""Command-line driver: convert, generate, partition, assign-v, evaluate, bench.

Exit codes: 0 success, 2 bad arguments or config, 3 unreadable input,
4 runtime failure.  The log level comes from ``--log-level`` or the
``PARSA_LOG_LEVEL`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument, ParseError, ParsaError
from .graph import (BipartiteGraph, load_cache, load_edge_list, load_libsvm, save_cache,
                    save_id_map, zipf_bipartite)
from .io import RunManifest, read_partition, write_partition
from .metrics import METRICS, MetricsReport, attach_improvements, evaluate
from .partition_u import BALANCE_RULES, GreedyConfig, NeighborSets, UPartition, run_sequential
from .partition_v import VPartition, sweep_to_convergence
from .runtime import run_parallel

log = logging.getLogger("parsa")

FORMATS = ("libsvm", "edgelist-directed", "edgelist-undirected", "cache")


def load_graph(path, fmt: str) -> BipartiteGraph:
    if fmt not in FORMATS:
        raise InvalidArgument(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
    if not Path(path).is_file():
        raise InvalidArgument(f"input file not found: {path}")
    if fmt == "libsvm":
        return load_libsvm(path)
    if fmt == "cache":
        return load_cache(path)
    return load_edge_list(path, directed=fmt == "edgelist-directed")


def _parse_tau(text: str) -> float | None:
    if text.lower() in ("inf", "infinity", "none"):
        return None
    try:
        tau = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tau must be a non-negative integer or 'inf', got {text!r}")
    if tau < 0:
        raise argparse.ArgumentTypeError("tau must be >= 0")
    return tau


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# --------------------------------------------------------------------------
# pipeline


def partition_graph(g: BipartiteGraph, m: RunManifest, S0: NeighborSets | None = None):
    """U partition, V sweep and metrics for one manifest.  Returns ``(up, vp, report)``."""
    cfg = GreedyConfig(k=m.k, b=m.b, a=m.a, seed=m.seed, balance_rule=m.balance_rule)
    cfg.validate()
    if m.workers == 1 and m.server_shards == 1 and not m.global_init:
        up, S = run_sequential(g, cfg, S0)
    else:
        res = run_parallel(g, cfg, m.tau, m.workers, m.server_shards, m.prefetch, m.global_init, S0)
        up, S = res.partition, res.neighbor_sets
    # the V sweep needs the complete N(U_i), not the possibly stale server copy
    nbr = _neighbor_sets(g, up)
    vp, sweeps = sweep_to_convergence(nbr, g, m.max_sweeps)
    log.info("V placement converged after %d sweeps", sweeps)
    report = evaluate(g, up, vp)
    report.config = m.config()
    if m.trials:
        attach_improvements(g, report, m.trials, m.seed)
    return up, vp, report


def _neighbor_sets(g: BipartiteGraph, up: UPartition) -> list[set[int]]:
    out = [set() for _ in range(up.k)]
    for u, i in enumerate(up.assign.tolist()):
        out[i].update(g.adj_u[u])
    return out


def write_outputs(out: Path, up: UPartition, vp: VPartition, report: MetricsReport,
                  m: RunManifest, plot: bool = True) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_partition(out / "u_partition.txt", up.assign, up.k, m.config())
    write_partition(out / "v_partition.txt", vp.assign, vp.k, m.config())
    (out / "metrics.json").write_text(report.to_json())
    (out / "machines.csv").write_text(report.machines_csv())
    if plot:
        from .plotting import machine_bars
        machine_bars(report, out / "machines.png")


# --------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    g = load_graph(args.input, args.format)
    save_cache(g, args.out)
    save_id_map(g, str(args.out) + ".idmap.json")
    print(f"|U|={g.num_u} |V|={g.num_v} |E|={g.num_edges}")
    return 0


def cmd_generate(args) -> int:
    g = zipf_bipartite(args.num_u, args.num_v, args.avg_degree, args.exponent, args.seed)
    save_cache(g, args.out)
    save_id_map(g, str(args.out) + ".idmap.json")
    print(f"|U|={g.num_u} |V|={g.num_v} |E|={g.num_edges}")
    return 0


def _manifest_from(args) -> RunManifest:
    if getattr(args, "manifest", None):
        m = RunManifest.load(args.manifest)
        if args.out:
            m.out = args.out
        return m
    if not args.input:
        raise InvalidArgument("--input is required unless --manifest is given")
    return RunManifest(input=str(args.input), format=args.format, k=args.k, a=args.a, b=args.b,
                       seed=args.seed, balance_rule=args.balance_rule, tau=args.tau,
                       workers=args.workers, server_shards=args.server_shards,
                       prefetch=args.prefetch, global_init=args.global_init,
                       max_sweeps=args.max_sweeps, trials=args.trials, out=args.out or "out")


def cmd_partition(args) -> int:
    m = _manifest_from(args)
    if m.workers < 1 or m.server_shards < 1:
        raise InvalidArgument("--workers and --server-shards must be >= 1")
    if m.trials < 0:
        raise InvalidArgument("--trials must be >= 0")
    m.stamp_start()
    g = load_graph(m.input, m.format)
    t0 = time.perf_counter()
    up, vp, report = partition_graph(g, m)
    log.info("partitioned |U|=%d |E|=%d in %.2fs", g.num_u, g.num_edges, time.perf_counter() - t0)
    out = Path(m.out)
    write_outputs(out, up, vp, report, m, plot=not args.no_plot)
    m.stamp_finish()
    m.save(out / "manifest.json")
    sys.stdout.write(report.table())
    return 0


def cmd_assign_v(args) -> int:
    g = load_graph(args.input, args.format)
    assign, meta = read_partition(args.u_partition)
    if assign.size != g.num_u:
        raise InvalidArgument(f"U partition has {assign.size} entries, graph has |U|={g.num_u}")
    k = meta.get("k", int(assign.max(initial=-1)) + 1)
    up = UPartition(assign, k)
    if not up.is_complete():
        raise InvalidArgument("U partition must assign every vertex to 0..k-1")
    history: list[int] = []
    vp, sweeps = sweep_to_convergence(_neighbor_sets(g, up), g, args.max_sweeps, history=history)
    write_partition(args.out, vp.assign, k, {"sweeps": sweeps, "max_cost": history})
    print(f"sweeps={sweeps} max_machine_cost={history[-1] if history else 0}")
    return 0


def cmd_evaluate(args) -> int:
    g = load_graph(args.input, args.format)
    u_assign, u_meta = read_partition(args.u_partition)
    v_assign, v_meta = read_partition(args.v_partition)
    k = u_meta.get("k", int(max(u_assign.max(initial=-1), v_assign.max(initial=-1))) + 1)
    if v_meta.get("k", k) != k:
        raise InvalidArgument(f"U partition has k={k}, V partition has k={v_meta['k']}")
    report = evaluate(g, UPartition(u_assign, k), VPartition(v_assign, k))
    if args.trials < 0:
        raise InvalidArgument("--trials must be >= 0")
    if args.trials:
        attach_improvements(g, report, args.trials, args.seed, not args.uniform_v)
    if args.out:
        Path(args.out).write_text(report.to_json())
    sys.stdout.write(report.table())
    return 0


BENCH_FIELDS = ["k", "a", "b", "seed", "M_max", "T_max", "T_sum",
                "improvement_M_max", "improvement_T_max", "improvement_T_sum", "seconds"]


def run_bench(g: BipartiteGraph, configs: list[tuple[int, int, int]], seeds: list[int], trials: int,
              balance_rule: str = BALANCE_RULES[0]) -> list[dict]:
    """One row per (k, a, b) config and seed, with the U-partition wall time."""
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if not configs or not seeds:
        raise InvalidArgument("bench needs at least one config and one seed")
    rows = []
    for k, a, b in configs:
        for seed in seeds:
            m = RunManifest(k=k, a=a, b=b, seed=seed, balance_rule=balance_rule, trials=0)
            t0 = time.perf_counter()
            up, vp, report = partition_graph(g, m)
            elapsed = time.perf_counter() - t0
            attach_improvements(g, report, trials, seed)
            row = {"k": k, "a": a, "b": b, "seed": seed, "seconds": round(elapsed, 4)}
            for name in METRICS:
                row[name] = report.metric(name)
                row[f"improvement_{name}"] = report.improvement[name]
            rows.append(row)
            log.info("bench k=%d a=%d b=%d seed=%d T_max=%d (%.2fs)", k, a, b, seed, report.T_max, elapsed)
    return rows


def write_bench_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({key: (f"{v:.4f}" if isinstance(v, float) and not math.isinf(v) else v)
                        for key, v in r.items()})


def cmd_bench(args) -> int:
    if args.trials < 1:
        raise InvalidArgument("--trials must be >= 1")
    if args.input:
        g = load_graph(args.input, args.format)
    else:
        g = zipf_bipartite(args.num_u, args.num_v, args.avg_degree, args.exponent, args.graph_seed)
    if args.grid:
        configs = [(args.k[0], a, b) for a in args.a for b in args.b]
    else:
        configs = [(k, args.a[0], args.b[0]) for k in args.k]
    rows = run_bench(g, configs, args.seeds, args.trials, args.balance_rule)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bench_csv(rows, out / "bench.csv")
    if not args.no_plot:
        from .plotting import grid_heatmap, improvement_vs
        if args.grid:
            grid_heatmap(rows, out / "bench_ab.png")
        else:
            improvement_vs(rows, "k", out / "bench_k.png", "improvement vs k")
    print(f"wrote {len(rows)} rows to {out / 'bench.csv'}")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _add_graph_args(p, required=True) -> None:
    p.add_argument("--input", required=required, help="graph file")
    p.add_argument("--format", default="libsvm", choices=FORMATS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parsa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"parsa {__version__}")
    parser.add_argument("--log-level", default=os.environ.get("PARSA_LOG_LEVEL", "WARNING"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="text graph -> binary cache + id map")
    _add_graph_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("generate", help="synthetic Zipf bipartite graph -> binary cache")
    p.add_argument("--num-u", type=int, default=10_000)
    p.add_argument("--num-v", type=int, default=5_000)
    p.add_argument("--avg-degree", type=float, default=8.0)
    p.add_argument("--exponent", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("partition", help="partition U and V, write partitions and metrics")
    _add_graph_args(p, required=False)
    p.add_argument("--manifest", help="run manifest JSON; replaces the other flags")
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--a", type=int, default=16)
    p.add_argument("--b", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--balance-rule", default=BALANCE_RULES[0], choices=BALANCE_RULES)
    p.add_argument("--tau", type=_parse_tau, default=0, help="max delay, integer or 'inf'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--server-shards", type=int, default=1)
    p.add_argument("--prefetch", action="store_true")
    p.add_argument("--global-init", type=float, default=0.0, help="fraction of U for global init")
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--trials", type=int, default=10, help="random baselines for improvement (0 skips)")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("assign-v", help="place V for an existing U partition")
    _add_graph_args(p)
    p.add_argument("--u-partition", required=True)
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assign_v)

    p = sub.add_parser("evaluate", help="metrics for existing U and V partitions")
    _add_graph_args(p)
    p.add_argument("--u-partition", required=True)
    p.add_argument("--v-partition", required=True)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--uniform-v", action="store_true", help="random baseline ignores V feasibility")
    p.add_argument("--out", help="metrics JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="quality and time over a k list or an a/b grid")
    _add_graph_args(p, required=False)
    p.add_argument("--num-u", type=int, default=10_000)
    p.add_argument("--num-v", type=int, default=5_000)
    p.add_argument("--avg-degree", type=float, default=8.0)
    p.add_argument("--exponent", type=float, default=1.5)
    p.add_argument("--graph-seed", type=int, default=0)
    p.add_argument("--k", type=_int_list, default=[2, 4, 8, 16])
    p.add_argument("--a", type=_int_list, default=[16])
    p.add_argument("--b", type=_int_list, default=[16])
    p.add_argument("--grid", action="store_true", help="sweep a x b at the first k")
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--balance-rule", default=BALANCE_RULES[0], choices=BALANCE_RULES)
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--out", default="bench")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParsaError as exc:
        print(f"parsa {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"parsa {args.command}: error: {exc}", file=sys.stderr)
        return 4
