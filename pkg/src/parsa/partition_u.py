"""Assignment of data vertices U to k partitions.

The production path partitions one subgraph block at a time with a greedy
rule: pick a target partition, give it the unassigned vertex that would add
the fewest new parameters to its neighbor set, repeat.  Costs are held in one
:class:`~parsa.costindex.CostIndex` per partition.

The reference path enumerates candidate subsets exhaustively and is meant for
graphs with a dozen vertices or so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .costindex import DEFAULT_CAP, CostIndex
from .errors import InvalidArgument
from .graph import BipartiteGraph, SubgraphBlock, divide_into_subgraphs, make_block

NEIGHBOR_SET_SIZE = "neighbor-set-size"
PARTITION_SIZE = "partition-size"
BALANCE_RULES = (NEIGHBOR_SET_SIZE, PARTITION_SIZE)


class NeighborSets:
    """The k shared sets S_i of parameter ids, with cached cardinalities.

    A partial view (what a worker pulls from the servers) holds only the
    members inside its scope while ``sizes`` still carries the global totals.
    """

    __slots__ = ("sets", "sizes")

    def __init__(self, sets, sizes=None):
        self.sets = [set(s) for s in sets]
        self.sizes = [len(s) for s in self.sets] if sizes is None else list(sizes)

    @classmethod
    def empty(cls, k: int) -> "NeighborSets":
        return cls([set() for _ in range(k)])

    @property
    def k(self) -> int:
        return len(self.sets)

    def add(self, i: int, v: int) -> bool:
        s = self.sets[i]
        if v in s:
            return False
        s.add(v)
        self.sizes[i] += 1
        return True

    def copy(self) -> "NeighborSets":
        return NeighborSets(self.sets, self.sizes)

    def frozen(self) -> list[frozenset]:
        return [frozenset(s) for s in self.sets]

    def __eq__(self, other):
        return isinstance(other, NeighborSets) and self.sets == other.sets and self.sizes == other.sizes

    def __repr__(self):
        return f"NeighborSets(sizes={self.sizes})"


@dataclass
class UPartition:
    assign: np.ndarray      # u -> partition id, -1 while unassigned
    k: int

    @classmethod
    def unassigned(cls, num_u: int, k: int) -> "UPartition":
        return cls(np.full(num_u, -1, dtype=np.int64), k)

    @property
    def sizes(self) -> list[int]:
        return np.bincount(self.assign[self.assign >= 0], minlength=self.k).tolist()

    def members(self, i: int) -> list[int]:
        return np.flatnonzero(self.assign == i).tolist()

    def is_complete(self) -> bool:
        return bool(np.all((self.assign >= 0) & (self.assign < self.k)))

    def __eq__(self, other):
        return isinstance(other, UPartition) and self.k == other.k and np.array_equal(self.assign, other.assign)


@dataclass
class GreedyConfig:
    k: int = 16
    b: int = 16
    a: int = 16
    seed: int = 0
    balance_rule: str = NEIGHBOR_SET_SIZE
    cap: int = DEFAULT_CAP

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidArgument(f"k must be >= 1, got {self.k}")
        if self.b < 1:
            raise InvalidArgument(f"b must be >= 1, got {self.b}")
        if self.a < 0:
            raise InvalidArgument(f"a must be >= 0, got {self.a}")
        if self.balance_rule not in BALANCE_RULES:
            raise InvalidArgument(f"unknown balance rule {self.balance_rule!r}")


def neighbor_union(g: BipartiteGraph, u_ids) -> set[int]:
    adj = g.adj_u
    out: set[int] = set()
    for u in u_ids:
        out.update(adj[u])
    return out


def vertex_cost(u: int, i: int, S: NeighborSets, g: BipartiteGraph) -> int:
    """Number of parameters ``u`` would add to S_i."""
    s = S.sets[i]
    return sum(1 for v in g.adj_u[u] if v not in s)


def pick_partition(S_sizes, u_sizes, balance_rule: str) -> int:
    if balance_rule == NEIGHBOR_SET_SIZE:
        return min(range(len(S_sizes)), key=lambda j: (S_sizes[j], u_sizes[j], j))
    return min(range(len(u_sizes)), key=lambda j: (u_sizes[j], j))


def partition_block(block: SubgraphBlock, k: int, S: NeighborSets,
                    balance_rule: str = NEIGHBOR_SET_SIZE, cap: int = DEFAULT_CAP,
                    debug: bool = False) -> list[int]:
    """Partition every vertex of ``block`` into 0..k-1, growing ``S`` in place.

    Returns the partition id of each block vertex in local order.  With
    ``debug`` the greedy choice and cost monotonicity are re-checked against
    a brute-force recomputation at every step.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if S.k != k:
        raise InvalidArgument(f"neighbor sets have {S.k} partitions, expected {k}")
    n = block.num_u
    adj_u, adj_v, v_ids = block.adj_u, block.adj_v, block.v_ids
    # local membership masks of S_i restricted to the block's parameters
    member = [bytearray(v in s for v in v_ids) for s in S.sets]
    indexes = []
    for i in range(k):
        m = member[i]
        indexes.append(CostIndex.build((sum(1 for lv in nb if not m[lv]) for nb in adj_u), cap))
    assign = [-1] * n
    u_sizes = [0] * k
    S_sizes = S.sizes
    for _ in range(n):
        i = pick_partition(S_sizes, u_sizes, balance_rule)
        idx = indexes[i]
        u, c = idx.min()
        if debug:
            _check_greedy_step(block, member[i], assign, u, c)
        assign[u] = i
        u_sizes[i] += 1
        for other in indexes:
            other.remove(u)
        if c == 0:
            continue
        m = member[i]
        s = S.sets[i]
        before = list(idx.cost) if debug else None
        for lv in adj_u[u]:
            if m[lv]:
                continue
            m[lv] = 1
            s.add(v_ids[lv])
            S_sizes[i] += 1
            for w in adj_v[lv]:
                if assign[w] < 0:
                    idx.decrement(w)
        if debug:
            assert all(a <= b for a, b in zip(idx.cost, before) if a >= 0), "cost increased"
    return assign


def _check_greedy_step(block, mask, assign, u, c) -> None:
    costs = {w: sum(1 for lv in block.adj_u[w] if not mask[lv])
             for w in range(block.num_u) if assign[w] < 0}
    best = min(costs.values())
    assert costs[u] == c == best, f"picked u={u} cost={c}, brute force min {best}"


def block_neighbor_sets(block: SubgraphBlock, assign, k: int) -> list[set[int]]:
    """N(U_{i,j}) for the block's own assignment, in global v-ids."""
    out = [set() for _ in range(k)]
    for lu, i in enumerate(assign):
        s = out[i]
        for lv in block.adj_u[lu]:
            s.add(block.v_ids[lv])
    return out


def init_schedule(a: int, b: int) -> list[int]:
    """Block ids consumed by the initialization passes: the first min(a, b), cycled."""
    return [j % b for j in range(a)]


def run_sequential(g: BipartiteGraph, cfg: GreedyConfig, S0: NeighborSets | None = None,
                   debug: bool = False):
    """Single-process pipeline: ``a`` initialization passes, then ``b`` production blocks."""
    cfg.validate()
    S = NeighborSets.empty(cfg.k) if S0 is None else S0.copy()
    if S.k != cfg.k:
        raise InvalidArgument(f"initial neighbor sets have {S.k} partitions, expected {cfg.k}")
    up = UPartition.unassigned(g.num_u, cfg.k)
    if g.num_u == 0:
        return up, S
    blocks = divide_into_subgraphs(g, min(cfg.b, g.num_u), cfg.seed)
    nblocks = len(blocks)
    for j in init_schedule(cfg.a, nblocks):
        block = blocks[j]
        assign = partition_block(block, cfg.k, S, cfg.balance_rule, cfg.cap, debug)
        # earlier results are dropped: S restarts from this block's own neighbor sets
        S = NeighborSets(block_neighbor_sets(block, assign, cfg.k))
    for j in range(nblocks):
        block = blocks[j]
        assign = partition_block(block, cfg.k, S, cfg.balance_rule, cfg.cap, debug)
        up.assign[block.u_ids] = assign
    return up, S


# --------------------------------------------------------------------------
# reference path (exhaustive subset search)

MAX_REFERENCE_CANDIDATES = 20


def _f(g: BipartiteGraph, us) -> int:
    return len(neighbor_union(g, us))


def reference_round(R, U_i, alpha: float, g: BipartiteGraph):
    """argmin over T subset of R of f(T | U_i) - alpha * |T | U_i|.

    Ties go to the smaller |T|, then the lexicographically smaller sorted T.
    Returns ``(T, value)``.
    """
    R = sorted(R)
    if len(R) > MAX_REFERENCE_CANDIDATES:
        raise InvalidArgument(f"|R|={len(R)} exceeds {MAX_REFERENCE_CANDIDATES} candidates")
    base = set(U_i)
    base_n = neighbor_union(g, base)
    adj = g.adj_u
    best_t, best_val = (), None
    for size in range(len(R) + 1):
        for T in itertools.combinations(R, size):
            nb = set(base_n)
            for u in T:
                nb.update(adj[u])
            val = len(nb) - alpha * len(base.union(T))
            if best_val is None or val < best_val:
                best_t, best_val = T, val
    return list(best_t), best_val


@dataclass
class ReferenceResult:
    ok: bool
    partition: UPartition | None
    iterations: int
    residue: int
    log: list = field(default_factory=list, repr=False)


def run_reference(g: BipartiteGraph, k: int, alpha: float, theta_residue: float,
                  max_iters: int, seed: int = 0) -> ReferenceResult:
    """Randomized subset-growing partitioner for tiny graphs.

    Each round grows the smallest partition by the best subset of a random
    candidate sample, committing only when the penalized objective is not
    positive.  A run whose leftover exceeds ``k * theta_residue`` after
    ``max_iters`` rounds is reported as failed (``ok=False``), not raised.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    n = g.num_u
    if n > MAX_REFERENCE_CANDIDATES:
        raise InvalidArgument(f"reference path supports |U| <= {MAX_REFERENCE_CANDIDATES}")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in range(k)]
    remaining = list(range(n))
    t = 0
    history = []
    for t in range(1, max_iters + 1):
        if len(remaining) <= k * theta_residue:
            break
        i = min(range(k), key=lambda j: (len(parts[j]), j))
        p = min(1.0, n / (len(remaining) * k))
        R = [u for u, keep in zip(remaining, rng.random(len(remaining)) < p) if keep]
        if len(R) > 2 * n / k:
            continue
        T, val = reference_round(R, parts[i], alpha, g)
        if val <= 0:
            parts[i].extend(T)
            taken = set(T)
            remaining = [u for u in remaining if u not in taken]
            history.append((t, i, tuple(T), val))
    else:
        t = max_iters
    if len(remaining) > k * theta_residue:
        return ReferenceResult(False, None, t, len(remaining), history)
    for u in remaining:
        i = min(range(k), key=lambda j: (len(parts[j]), j))
        parts[i].append(u)
    up = UPartition.unassigned(n, k)
    for i, members in enumerate(parts):
        up.assign[members] = i
    return ReferenceResult(True, up, t, len(remaining), history)


def max_footprint(g: BipartiteGraph, up: UPartition) -> int:
    return max((_f(g, up.members(i)) for i in range(up.k)), default=0)


def footprint_bound(B: float, n: int) -> float:
    """4 B sqrt(n / log n); infinite for n < 2 where log n vanishes."""
    if n < 2:
        return math.inf
    return 4 * B * math.sqrt(n / math.log(n))
