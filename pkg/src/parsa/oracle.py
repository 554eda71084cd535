"""Slow, independent reference implementations used to check the fast paths."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidArgument
from .graph import BipartiteGraph, SubgraphBlock, make_block
from .partition_u import NeighborSets, UPartition, pick_partition

MAX_ENUMERATION = 10**7


@dataclass
class OracleResult:
    best_assignment: UPartition
    best_value: int
    enumerated_count: int


def exhaustive_partition(g: BipartiteGraph, k: int, prune: bool = True) -> OracleResult:
    """Minimize max_i |N(U_i)| over every assignment of U to k labels.

    Labels are interchangeable, so a vertex may only open the next unused
    label (first-occurrence order); this visits each set partition once.
    With ``prune`` a branch is cut as soon as it cannot strictly beat the best
    found so far, which keeps the lexicographically first minimizer.
    """
    n = g.num_u
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if k ** n > MAX_ENUMERATION:
        raise InvalidArgument(f"k^|U| = {k}^{n} exceeds {MAX_ENUMERATION}")
    masks = [sum(1 << v for v in nbrs) for nbrs in g.adj_u]
    best_val = [None]
    best_assign: list[list[int]] = [[0] * n]
    count = [0]
    assign = [0] * n
    part = [0] * k

    def rec(u: int, used: int, cur_max: int) -> None:
        if prune and best_val[0] is not None and cur_max >= best_val[0]:
            return
        if u == n:
            count[0] += 1
            if best_val[0] is None or cur_max < best_val[0]:
                best_val[0] = cur_max
                best_assign[0] = assign.copy()
            return
        for i in range(min(used + 1, k)):
            old = part[i]
            part[i] = old | masks[u]
            assign[u] = i
            rec(u + 1, max(used, i + 1), max(cur_max, part[i].bit_count()))
            part[i] = old

    if n == 0:
        return OracleResult(UPartition.unassigned(0, k), 0, 1)
    rec(0, 0, 0)
    up = UPartition.unassigned(n, k)
    up.assign[:] = best_assign[0]
    return OracleResult(up, best_val[0], count[0])


def naive_greedy(block, k: int, S: NeighborSets, balance_rule: str = "neighbor-set-size"):
    """Greedy block partitioning that rescans every cost at every step.

    Equal costs are broken the same way the cost index orders them: by the
    moment a vertex reached its current cost (build-time vertices first, in
    id order).  Mutates ``S`` and returns the local assignment list.
    """
    if isinstance(block, BipartiteGraph):
        block = make_block(block, range(block.num_u))
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    n = block.num_u
    nbrs = [[block.v_ids[lv] for lv in adj] for adj in block.adj_u]
    users = {}
    for lu, vs in enumerate(nbrs):
        for v in vs:
            users.setdefault(v, []).append(lu)

    def cost(u, i):
        return sum(1 for v in nbrs[u] if v not in S.sets[i])

    stamps = []
    clocks = []
    for i in range(k):
        ranked = sorted(range(n), key=lambda u: (cost(u, i), u))
        st = [0] * n
        for r, u in enumerate(ranked):
            st[u] = r
        stamps.append(st)
        clocks.append(n)
    assign = [-1] * n
    u_sizes = [0] * k
    for _ in range(n):
        i = pick_partition(S.sizes, u_sizes, balance_rule)
        live = [u for u in range(n) if assign[u] < 0]
        u_star = min(live, key=lambda u: (cost(u, i), stamps[i][u]))
        assign[u_star] = i
        u_sizes[i] += 1
        for v in nbrs[u_star]:
            if S.add(i, v):
                for w in users[v]:
                    if assign[w] < 0:
                        stamps[i][w] = clocks[i]
                        clocks[i] += 1
    return assign


class NaiveCostIndex:
    """Shadow of :class:`~parsa.costindex.CostIndex`: flat arrays, full scans."""

    def __init__(self, costs):
        self.cost = list(costs)
        n = len(self.cost)
        self.alive = [True] * n
        ranked = sorted(range(n), key=lambda u: (self.cost[u], u))
        self.stamp = [0] * n
        for r, u in enumerate(ranked):
            self.stamp[u] = r
        self.clock = n

    def min(self):
        live = [u for u, a in enumerate(self.alive) if a]
        if not live:
            return None
        u = min(live, key=lambda w: (self.cost[w], self.stamp[w]))
        return u, self.cost[u]

    def decrement(self, u):
        assert self.alive[u] and self.cost[u] >= 1
        self.cost[u] -= 1
        self.stamp[u] = self.clock
        self.clock += 1
        return self.cost[u]

    def remove(self, u):
        assert self.alive[u]
        self.alive[u] = False

    def __contains__(self, u):
        return 0 <= u < len(self.alive) and self.alive[u]

    def __len__(self):
        return sum(self.alive)
