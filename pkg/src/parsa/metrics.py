"""Partition quality: balance, memory footprint, traffic and gain over random placement."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgument
from .graph import BipartiteGraph
from .partition_u import UPartition
from .partition_v import VPartition

METRICS = ("M_max", "T_max", "T_sum")


@dataclass
class MetricsReport:
    k: int
    u_sizes: list[int]
    max_u_size: int
    footprint: list[int]
    M_max: int
    worker_traffic: list[int]
    server_traffic: list[int]
    traffic: list[int]
    T_max: int
    T_sum: int
    isolated_v_count: int
    improvement: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def metric(self, name: str) -> float:
        if name not in METRICS:
            raise InvalidArgument(f"unknown metric {name!r}; choose from {METRICS}")
        return getattr(self, name)

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity; keep the sentinel readable
        d["improvement"] = {name: "inf" if math.isinf(v) else v for name, v in self.improvement.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True,
                          default=_json_default) + "\n"

    def table(self) -> str:
        """Aligned per-machine table followed by the totals."""
        header = ("machine", "|U_i|", "footprint", "worker", "server", "traffic")
        rows = [header] + [
            (str(i), str(self.u_sizes[i]), str(self.footprint[i]), str(self.worker_traffic[i]),
             str(self.server_traffic[i]), str(self.traffic[i]))
            for i in range(self.k)
        ]
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
        lines.append(f"max|U_i|={self.max_u_size}  M_max={self.M_max}  T_max={self.T_max}  "
                     f"T_sum={self.T_sum}  isolated_v={self.isolated_v_count}")
        for name, val in sorted(self.improvement.items()):
            lines.append(f"improvement {name}: {_fmt_pct(val)}")
        return "\n".join(lines) + "\n"

    def machines_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["machine", "u_size", "footprint", "worker_traffic", "server_traffic", "traffic"])
        for i in range(self.k):
            w.writerow([i, self.u_sizes[i], self.footprint[i], self.worker_traffic[i],
                        self.server_traffic[i], self.traffic[i]])
        return buf.getvalue()


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(type(x))


def _fmt_pct(val: float) -> str:
    return "inf" if math.isinf(val) else f"{val:.1f}%"


def _membership(g: BipartiteGraph, u_assign: np.ndarray, k: int) -> np.ndarray:
    """Boolean (k, |V|) matrix: v in N(U_i)."""
    rows = np.repeat(u_assign, np.diff(g.u_indptr))
    need = np.zeros((k, g.num_v), dtype=bool)
    need[rows, g.u_indices] = True
    return need


def evaluate(g: BipartiteGraph, up: UPartition, vp: VPartition) -> MetricsReport:
    """Exact integer metrics for a complete (U, V) placement.

    Worker i pays for every parameter it needs that lives elsewhere; server i
    pays for every other worker that needs one of its parameters.  Parameters
    no worker needs contribute nothing and are only counted.
    """
    if up.k != vp.k:
        raise InvalidArgument(f"U partition has k={up.k}, V partition has k={vp.k}")
    if up.assign.size != g.num_u or vp.assign.size != g.num_v:
        raise InvalidArgument("partition sizes do not match the graph")
    k = up.k
    if not up.is_complete() or np.any((vp.assign < 0) | (vp.assign >= k)):
        raise InvalidArgument("every vertex must be assigned to 0..k-1")
    need = _membership(g, up.assign, k)
    owners = need.sum(axis=0)
    home = vp.assign
    local = need[home, np.arange(g.num_v)]
    footprint = need.sum(axis=1)
    worker = footprint - np.bincount(home, weights=local, minlength=k).astype(np.int64)
    server = np.bincount(home, weights=owners - local, minlength=k).astype(np.int64)
    traffic = worker + server
    u_sizes = np.bincount(up.assign, minlength=k)
    return MetricsReport(
        k=k,
        u_sizes=u_sizes.tolist(),
        max_u_size=int(u_sizes.max(initial=0)),
        footprint=footprint.tolist(),
        M_max=int(footprint.max(initial=0)),
        worker_traffic=worker.tolist(),
        server_traffic=server.tolist(),
        traffic=traffic.tolist(),
        T_max=int(traffic.max(initial=0)),
        T_sum=int(traffic.sum()),
        isolated_v_count=int((owners == 0).sum()),
    )


def random_placement(g: BipartiteGraph, k: int, rng: np.random.Generator,
                     feasible_v: bool = True) -> tuple[UPartition, VPartition]:
    """Balanced random U split and a random V placement.

    With ``feasible_v`` each parameter goes to a uniformly chosen machine
    among those that need it (anywhere, if nobody does).
    """
    up = UPartition(np.empty(g.num_u, dtype=np.int64), k)
    up.assign[rng.permutation(g.num_u)] = np.arange(g.num_u) % k
    v_assign = rng.integers(0, k, size=g.num_v)
    if feasible_v and g.num_v:
        need = _membership(g, up.assign, k)
        counts = need.sum(axis=0)
        has = counts > 0
        # pick the r-th owner, r uniform in 0..count-1
        r = np.floor(rng.random(g.num_v) * np.maximum(counts, 1)).astype(np.int64)
        cum = np.cumsum(need, axis=0)
        chosen = (cum > r[None, :]).argmax(axis=0)
        v_assign = np.where(has, chosen, v_assign)
    return up, VPartition(v_assign.astype(np.int64), k)


def random_baseline(g: BipartiteGraph, k: int, trials: int, seed: int = 0,
                    feasible_v: bool = True) -> dict[str, float]:
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    rng = np.random.default_rng(seed)
    totals = dict.fromkeys(METRICS, 0.0)
    for _ in range(trials):
        rep = evaluate(g, *random_placement(g, k, rng, feasible_v))
        for name in METRICS:
            totals[name] += rep.metric(name)
    return {name: val / trials for name, val in totals.items()}


def improvement(random_value: float, candidate_value: float) -> float:
    """(random - candidate) / candidate * 100; +inf when only the candidate is zero."""
    if candidate_value == 0:
        return 0.0 if random_value == 0 else math.inf
    return (random_value - candidate_value) / candidate_value * 100.0


def improvement_vs_random(g: BipartiteGraph, candidate: MetricsReport, metric: str = "T_max",
                          trials: int = 10, seed: int = 0, feasible_v: bool = True) -> float:
    candidate.metric(metric)
    base = random_baseline(g, candidate.k, trials, seed, feasible_v)
    return improvement(base[metric], candidate.metric(metric))


def attach_improvements(g: BipartiteGraph, report: MetricsReport, trials: int, seed: int = 0,
                        feasible_v: bool = True) -> MetricsReport:
    base = random_baseline(g, report.k, trials, seed, feasible_v)
    report.improvement = {name: improvement(base[name], report.metric(name)) for name in METRICS}
    return report


def remote_pairs(g: BipartiteGraph, up: UPartition, vp: VPartition) -> int:
    """Number of (machine, parameter) pairs where the machine needs a parameter hosted elsewhere.

    This is sum_i sum_{j != i} |V_j & N(U_i)|, counted with plain sets; it
    equals both the summed worker traffic and the summed server traffic.
    """
    total = 0
    nbr_sets = [set() for _ in range(up.k)]
    adj = g.adj_u
    for u, i in enumerate(up.assign.tolist()):
        nbr_sets[i].update(adj[u])
    home = vp.assign.tolist()
    for i, s in enumerate(nbr_sets):
        total += sum(1 for v in s if home[v] != i)
    return total
