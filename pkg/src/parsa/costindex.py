"""Vertex-cost index for one partition.

Costs live in a flat array addressed by local u-id.  A doubly-linked list
threads the live vertices in ascending cost order, and a small
array of head pointers gives direct access to the first node whose cost is at
least ``c`` for every ``c <= cap``.  Costs only ever go down, one unit at a
time, so a decremented node either stays put or jumps to just before
``heads[old_cost]``.
"""

from __future__ import annotations

from typing import Iterable

DEFAULT_CAP = 1024
_DEAD = -1
_BIG = 1 << 62


class CostIndex:
    """Array + cost-sorted doubly-linked list + head pointers.

    Inside one cost value vertices keep arrival order: the members present
    at build time by ascending id, then vertices that dropped in from the
    run above in the order they were decremented.  Either way a decrement is
    O(1) for costs up to ``cap``.  Node ``n`` is the list sentinel:
    ``nxt[n]`` is the first live vertex, ``prv[n]`` the last.
    """

    __slots__ = ("n", "cap", "cost", "nxt", "prv", "heads", "live_count", "ops")

    def __init__(self, n: int, cap: int = DEFAULT_CAP):
        self.n = n
        self.cap = cap
        self.cost = [_DEAD] * n + [_BIG]
        self.nxt = [n] * (n + 1)
        self.prv = [n] * (n + 1)
        self.heads = [n] * (cap + 1)
        self.live_count = 0
        self.ops = 0

    @classmethod
    def build(cls, costs: Iterable[int], cap: int = DEFAULT_CAP) -> "CostIndex":
        costs = list(costs)
        n = len(costs)
        idx = cls(n, cap)
        if not n:
            return idx
        if min(costs) < 0:
            raise ValueError("costs must be non-negative")
        # counting sort; appending in id order keeps ties ascending
        buckets: list[list[int]] = [[] for _ in range(max(costs) + 1)]
        for u, c in enumerate(costs):
            buckets[c].append(u)
        order = [u for bucket in buckets for u in bucket]
        nxt, prv = idx.nxt, idx.prv
        prev = n
        for u in order:
            nxt[prev] = u
            prv[u] = prev
            prev = u
        nxt[prev] = n
        prv[n] = prev
        idx.cost[:n] = costs
        idx.live_count = n
        heads = idx.heads
        c = 0
        for u in order:
            while c <= cap and c <= costs[u]:
                heads[c] = u
                c += 1
            if c > cap:
                break
        return idx

    def __len__(self) -> int:
        return self.live_count

    def __contains__(self, u: int) -> bool:
        return 0 <= u < self.n and self.cost[u] != _DEAD

    def min(self):
        """``(u, cost)`` of the list head, or ``None`` when empty."""
        u = self.nxt[self.n]
        if u == self.n:
            return None
        return u, self.cost[u]

    def _unlink(self, u: int) -> None:
        nxt, prv, heads, cost = self.nxt, self.prv, self.heads, self.cost
        p, q = prv[u], nxt[u]
        nxt[p] = q
        prv[q] = p
        c = cost[u] if cost[u] < self.cap else self.cap
        floor = cost[p] if p != self.n else -1
        while c > floor and heads[c] == u:
            heads[c] = q
            c -= 1
            self.ops += 1

    def remove(self, u: int) -> None:
        assert self.cost[u] != _DEAD, f"remove of dead vertex {u}"
        self._unlink(u)
        self.cost[u] = _DEAD
        self.live_count -= 1
        self.ops += 1

    def decrement(self, u: int) -> int:
        """Lower ``cost[u]`` by one; ``u`` moves to the end of its new cost run."""
        cost, nxt, prv, heads = self.cost, self.nxt, self.prv, self.heads
        c = cost[u]
        assert c >= 1, f"decrement of vertex {u} with cost {c}"
        n, cap = self.n, self.cap
        nc = c - 1
        p = prv[u]
        self.ops += 1
        if p == n or cost[p] < c:
            # first of its run: the end of run nc is exactly this slot
            cost[u] = nc
            if c <= cap:
                heads[c] = nxt[u]
            return nc
        # first node of run c is where u goes in front of
        if c <= cap:
            x = heads[c]
        else:
            x = p
            while prv[x] != n and cost[prv[x]] == c:
                x = prv[x]
                self.ops += 1
        q = nxt[u]
        nxt[p] = q
        prv[q] = p
        cost[u] = nc
        p = prv[x]
        nxt[p] = u
        prv[u] = p
        nxt[u] = x
        prv[x] = u
        floor = cost[p] if p != n else -1
        k = nc if nc < cap else cap
        while k > floor:
            heads[k] = u
            k -= 1
            self.ops += 1
        return nc

    # -- inspection helpers --------------------------------------------------

    def order(self) -> list[int]:
        out = []
        u = self.nxt[self.n]
        while u != self.n:
            out.append(u)
            u = self.nxt[u]
        return out

    def check(self) -> None:
        """Assert every structural invariant; O(n + cap)."""
        order = self.order()
        assert len(order) == self.live_count
        costs = [self.cost[u] for u in order]
        assert costs == sorted(costs), "list out of order"
        live = {u for u in range(self.n) if self.cost[u] != _DEAD}
        assert live == set(order)
        for c in range(self.cap + 1):
            want = next((u for u in order if self.cost[u] >= c), self.n)
            assert self.heads[c] == want, f"heads[{c}]={self.heads[c]} want {want}"

    def dump(self) -> str:
        """Text dump used by golden tests."""
        lines = [f"live={self.live_count} cap={self.cap}"]
        lines.append("list " + " ".join(f"{u}:{self.cost[u]}" for u in self.order()))
        top = max((self.cost[u] for u in self.order()), default=-1)
        shown = min(top + 1, self.cap)
        lines.append("heads " + " ".join(
            f"{c}->{'-' if self.heads[c] == self.n else self.heads[c]}" for c in range(shown + 1)))
        return "\n".join(lines)
