"""In-process parallel partitioning: a scheduler, sharded servers and workers.

Workers and server shards run as threads and talk only through message
objects (:class:`PullRequest`, :class:`PushRequest`, replies and acks) posted
to each shard's inbox, so a network transport could stand in for the queues.
Each worker keeps its own push counter; with delay bound ``tau`` a worker may
start its t-th block only after its pushes 1..t-tau-1 are acknowledged by
every shard.  ``tau=None`` means no bound.

Wire format (``PROTOCOL_VERSION`` 1), every message is a JSON object::

    {"type": "push", "version": 1, "worker": 0, "seq": 3, "initializing": false,
     "k": 2, "deltas": [[4, 9], []]}
    {"type": "pull", "version": 1, "worker": 0, "k": 2, "scope": [1, 4, 7]}
    {"type": "pull_reply", "version": 1, "shard": 0, "k": 2,
     "sets": [[4], []], "sizes": [10, 3], "clock": {"0": 2}}
    {"type": "ack", "version": 1, "shard": 0, "worker": 0, "seq": 3, "clock": 3}

Delta arrays are sorted v-ids; ``clock`` counts pushes applied per worker.
"""

from __future__ import annotations

import bisect
import logging
import math
import queue
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ParsaError, ProtocolError
from .graph import BipartiteGraph, divide_into_subgraphs, make_block
from .partition_u import (GreedyConfig, NeighborSets, UPartition, block_neighbor_sets,
                          init_schedule, partition_block)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


# --------------------------------------------------------------------------
# messages


def _check_version(d: dict, kind: str) -> None:
    if d.get("type") != kind:
        raise ProtocolError(f"expected a {kind!r} message, got {d.get('type')!r}")
    if d.get("version") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {d.get('version')!r}")


@dataclass(frozen=True)
class PushRequest:
    worker: int
    seq: int
    initializing: bool
    deltas: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.deltas)

    def to_wire(self) -> dict:
        return {"type": "push", "version": PROTOCOL_VERSION, "worker": self.worker, "seq": self.seq,
                "initializing": self.initializing, "k": self.k,
                "deltas": [list(d) for d in self.deltas]}

    @classmethod
    def from_wire(cls, d: dict) -> "PushRequest":
        _check_version(d, "push")
        if len(d["deltas"]) != d["k"]:
            raise ProtocolError("push delta count does not match k")
        return cls(d["worker"], d["seq"], bool(d["initializing"]),
                   tuple(tuple(sorted(x)) for x in d["deltas"]))


@dataclass(frozen=True)
class PullRequest:
    worker: int
    k: int
    scope: tuple[int, ...]

    def to_wire(self) -> dict:
        return {"type": "pull", "version": PROTOCOL_VERSION, "worker": self.worker,
                "k": self.k, "scope": list(self.scope)}

    @classmethod
    def from_wire(cls, d: dict) -> "PullRequest":
        _check_version(d, "pull")
        return cls(d["worker"], d["k"], tuple(d["scope"]))


@dataclass(frozen=True)
class PullReply:
    shard: int
    sets: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]
    clock: dict = field(hash=False)

    def to_wire(self) -> dict:
        return {"type": "pull_reply", "version": PROTOCOL_VERSION, "shard": self.shard,
                "k": len(self.sets), "sets": [list(s) for s in self.sets], "sizes": list(self.sizes),
                "clock": {str(w): c for w, c in sorted(self.clock.items())}}

    @classmethod
    def from_wire(cls, d: dict) -> "PullReply":
        _check_version(d, "pull_reply")
        return cls(d["shard"], tuple(tuple(s) for s in d["sets"]), tuple(d["sizes"]),
                   {int(w): c for w, c in d["clock"].items()})


@dataclass(frozen=True)
class Ack:
    shard: int
    worker: int
    seq: int
    clock: int

    def to_wire(self) -> dict:
        return {"type": "ack", "version": PROTOCOL_VERSION, "shard": self.shard,
                "worker": self.worker, "seq": self.seq, "clock": self.clock}

    @classmethod
    def from_wire(cls, d: dict) -> "Ack":
        _check_version(d, "ack")
        return cls(d["shard"], d["worker"], d["seq"], d["clock"])


# --------------------------------------------------------------------------
# server side


class ServerState:
    """Authoritative copy of the neighbor sets for one v-id range."""

    def __init__(self, k: int, shard: int = 0, lo: int = 0, hi: int | None = None,
                 journal: bool = False):
        self.k = k
        self.shard = shard
        self.lo = lo
        self.hi = hi
        self.sets: list[set[int]] = [set() for _ in range(k)]
        self.clock: dict[int, int] = {}
        self.journal: list[tuple] | None = [] if journal else None

    def owns(self, v: int) -> bool:
        return v >= self.lo and (self.hi is None or v < self.hi)

    def apply_push(self, push: PushRequest) -> Ack:
        if push.k != self.k:
            raise ProtocolError(f"push carries {push.k} partitions, server has {self.k}")
        for i, delta in enumerate(push.deltas):
            if push.initializing:
                self.sets[i] = set(delta)
            else:
                self.sets[i].update(delta)
        self.clock[push.worker] = self.clock.get(push.worker, 0) + 1
        if self.journal is not None:
            self.journal.append((push, [len(s) for s in self.sets]))
        return Ack(self.shard, push.worker, push.seq, self.clock[push.worker])

    def pull(self, req: PullRequest) -> PullReply:
        if req.k != self.k:
            raise ProtocolError(f"pull asks for {req.k} partitions, server has {self.k}")
        sets = tuple(tuple(v for v in req.scope if v in s) for s in self.sets)
        return PullReply(self.shard, sets, tuple(len(s) for s in self.sets), dict(self.clock))


def server_apply_push(state: ServerState, delta, initializing: bool, worker: int = 0, seq: int = 0) -> Ack:
    push = PushRequest(worker, seq, initializing, tuple(tuple(sorted(d)) for d in delta))
    return state.apply_push(push)


class ServerShard(threading.Thread):
    """Actor wrapper: messages are handled one at a time from ``inbox``."""

    def __init__(self, state: ServerState):
        super().__init__(name=f"server-{state.shard}", daemon=True)
        self.state = state
        self.inbox: queue.Queue = queue.Queue()

    def post(self, msg) -> Future:
        fut: Future = Future()
        self.inbox.put((msg, fut))
        return fut

    def stop(self) -> None:
        self.inbox.put(None)

    def run(self) -> None:
        while True:
            item = self.inbox.get()
            if item is None:
                return
            msg, fut = item
            try:
                if isinstance(msg, PushRequest):
                    fut.set_result(self.state.apply_push(msg))
                elif isinstance(msg, PullRequest):
                    fut.set_result(self.state.pull(msg))
                else:
                    raise ProtocolError(f"unknown message {type(msg).__name__}")
            except Exception as exc:  # delivered to the caller through the future
                fut.set_exception(exc)


class ServerGroup:
    """Shards covering 0..num_v-1 in contiguous v-id ranges."""

    def __init__(self, k: int, num_v: int, num_shards: int = 1, journal: bool = False):
        if num_shards < 1:
            raise InvalidArgument("server shard count must be >= 1")
        bounds = np.linspace(0, num_v, num_shards + 1).round().astype(int).tolist()
        self.bounds = bounds
        self.k = k
        self.shards = [ServerShard(ServerState(k, s, bounds[s], bounds[s + 1] if s < num_shards - 1 else None,
                                               journal))
                       for s in range(num_shards)]

    def __enter__(self):
        for s in self.shards:
            s.start()
        return self

    def __exit__(self, *exc):
        for s in self.shards:
            s.stop()
        for s in self.shards:
            s.join()

    def shard_of(self, v: int) -> int:
        return max(0, bisect.bisect_right(self.bounds, v, hi=len(self.shards)) - 1)

    def split(self, ids) -> list[list[int]]:
        parts: list[list[int]] = [[] for _ in self.shards]
        for v in ids:
            parts[self.shard_of(v)].append(v)
        return parts

    def push(self, worker: int, seq: int, initializing: bool, deltas) -> list[Future]:
        per_shard = [[[] for _ in range(self.k)] for _ in self.shards]
        for i, d in enumerate(deltas):
            for v in sorted(d):
                per_shard[self.shard_of(v)][i].append(v)
        return [shard.post(PushRequest(worker, seq, initializing, tuple(tuple(x) for x in part)))
                for shard, part in zip(self.shards, per_shard)]

    def pull(self, worker: int, scope) -> tuple[NeighborSets, list[PullReply]]:
        futures = [shard.post(PullRequest(worker, self.k, tuple(part)))
                   for shard, part in zip(self.shards, self.split(sorted(scope)))]
        replies = [f.result() for f in futures]
        sets = [set() for _ in range(self.k)]
        sizes = [0] * self.k
        for rep in replies:
            for i in range(self.k):
                sets[i].update(rep.sets[i])
                sizes[i] += rep.sizes[i]
        return NeighborSets(sets, sizes), replies

    def snapshot(self) -> NeighborSets:
        """Merged server state; call only while no worker is running."""
        sets = [set() for _ in range(self.k)]
        for shard in self.shards:
            for i, s in enumerate(shard.state.sets):
                sets[i].update(s)
        return NeighborSets(sets)

    def journal(self) -> list:
        return [entry for shard in self.shards for entry in (shard.state.journal or [])]


def worker_pull(servers: ServerGroup, v_scope, worker: int = 0) -> NeighborSets:
    """S_i restricted to ``v_scope`` for every i, with the global |S_i| as sizes."""
    if not len(v_scope):
        raise InvalidArgument("pull scope must be non-empty")
    return servers.pull(worker, v_scope)[0]


# --------------------------------------------------------------------------
# workers and scheduler


@dataclass
class TaskSpec:
    pass_count: int
    max_delay: float | None
    initializing: bool

    def __post_init__(self):
        if self.pass_count < 0:
            raise InvalidArgument("pass_count must be >= 0")


@dataclass
class BlockTrace:
    """What a worker saw when it started one block; used to audit the delay bound."""
    worker: int
    t: int
    block_id: int
    acked_before: int
    observed_clock: int
    pushed_before: int


class Worker:
    def __init__(self, wid: int, servers: ServerGroup, cfg: GreedyConfig, prefetch: bool = False):
        self.wid = wid
        self.servers = servers
        self.cfg = cfg
        self.prefetch = prefetch
        self.assign: dict[int, int] = {}
        self.trace: list[BlockTrace] = []
        self.seq = 0

    def run(self, spec: TaskSpec, loaders: list) -> None:
        """Process ``loaders`` (callables returning blocks) in order under ``spec``."""
        tau = spec.max_delay
        pending: list[tuple[int, list[Future]]] = []
        acked = 0
        pool = ThreadPoolExecutor(1, thread_name_prefix=f"prefetch-{self.wid}") if self.prefetch else None
        try:
            nxt = pool.submit(loaders[0]) if pool and loaders else None
            for t, load in enumerate(loaders, 1):
                if pool:
                    block = nxt.result()
                    nxt = pool.submit(loaders[t]) if t < len(loaders) else None
                else:
                    block = load()
                # delay bound: pushes from blocks 1..t-tau-1 must be applied
                if tau is not None and not math.isinf(tau):
                    limit = t - int(tau) - 1
                    while pending and pending[0][0] <= limit:
                        _, futs = pending.pop(0)
                        for f in futs:
                            f.result()
                        acked += 1
                base_seq = self.seq
                S, replies = self.servers.pull(self.wid, block.v_ids)
                self.trace.append(BlockTrace(
                    self.wid, t, block.block_id, acked,
                    min(r.clock.get(self.wid, 0) for r in replies), base_seq))
                pulled = [set(s) for s in S.sets]
                local = partition_block(block, self.cfg.k, S, self.cfg.balance_rule, self.cfg.cap)
                if spec.initializing:
                    deltas = block_neighbor_sets(block, local, self.cfg.k)
                else:
                    deltas = [s - p for s, p in zip(S.sets, pulled)]
                    for lu, i in enumerate(local):
                        self.assign[block.u_ids[lu]] = i
                self.seq += 1
                pending.append((t, self.servers.push(self.wid, self.seq, spec.initializing, deltas)))
            for _, futs in pending:
                for f in futs:
                    f.result()
        finally:
            if pool:
                pool.shutdown(wait=True)


@dataclass
class ParallelResult:
    partition: UPartition
    neighbor_sets: NeighborSets
    traces: list[BlockTrace]
    journal: list


def _run_workers(workers: list[Worker], spec: TaskSpec, plans: list[list]) -> None:
    errors: list[BaseException] = []

    def target(w, plan):
        try:
            w.run(spec, plan)
        except BaseException as exc:
            log.exception("worker %d failed", w.wid)
            errors.append(exc)

    threads = [threading.Thread(target=target, args=(w, p), name=f"worker-{w.wid}")
               for w, p in zip(workers, plans)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise ParsaError(f"worker failed: {errors[0]!r}") from errors[0]


def run_parallel(g: BipartiteGraph, cfg: GreedyConfig, tau: float | None = 0, num_workers: int = 1,
                 server_shards: int = 1, prefetch: bool = False, global_init: float = 0.0,
                 S0: NeighborSets | None = None, journal: bool = False) -> ParallelResult:
    """Partition U with ``num_workers`` concurrent workers sharing neighbor sets.

    ``global_init`` is the fraction of U sampled up front and partitioned by a
    single worker; its neighbor sets seed every worker.
    """
    cfg.validate()
    if num_workers < 1:
        raise InvalidArgument("num_workers must be >= 1")
    if tau is not None and tau < 0:
        raise InvalidArgument("tau must be >= 0 or None for unbounded")
    if not 0 <= global_init <= 1:
        raise InvalidArgument("global_init must be a fraction in [0, 1]")
    up = UPartition.unassigned(g.num_u, cfg.k)
    with ServerGroup(cfg.k, g.num_v, server_shards, journal) as servers:
        workers = [Worker(w, servers, cfg, prefetch) for w in range(num_workers)]
        if S0 is not None:
            if S0.k != cfg.k:
                raise InvalidArgument(f"initial neighbor sets have {S0.k} partitions, expected {cfg.k}")
            for f in servers.push(-1, 0, True, S0.sets):
                f.result()
        traces: list[BlockTrace] = []
        if g.num_u:
            if global_init > 0:
                count = max(1, int(round(global_init * g.num_u)))
                sample = np.random.default_rng([cfg.seed, 1]).choice(g.num_u, size=count, replace=False)
                lone = Worker(-1, servers, cfg)
                lone.run(TaskSpec(1, 0, True), [lambda: make_block(g, sample.tolist(), -1)])
                traces += lone.trace
            blocks = divide_into_subgraphs(g, min(cfg.b, g.num_u), cfg.seed)

            def loader(j):
                return lambda: blocks[j]

            init_ids = init_schedule(cfg.a, len(blocks))
            if init_ids:
                plans = [[loader(j) for p, j in enumerate(init_ids) if p % num_workers == w]
                         for w in range(num_workers)]
                _run_workers(workers, TaskSpec(len(init_ids), tau, True), plans)
            plans = [[loader(j) for j in range(len(blocks)) if j % num_workers == w]
                     for w in range(num_workers)]
            _run_workers(workers, TaskSpec(len(blocks), tau, False), plans)
            for w in workers:
                for u, i in w.assign.items():
                    if up.assign[u] != -1:
                        raise ParsaError(f"vertex {u} assigned twice")
                    up.assign[u] = i
                traces += w.trace
        final = servers.snapshot()
        log_entries = servers.journal()
    return ParallelResult(up, final, traces, log_entries)
