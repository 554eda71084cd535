"""Placement of parameter vertices V onto servers once U is partitioned.

A parameter may only live on a machine whose workers need it.  Each machine
carries a running cost: its footprint, minus the parameters it serves itself,
plus the requests it answers for other machines.  A sweep hands every
parameter to its cheapest eligible machine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BipartiteGraph


@dataclass
class VPartition:
    assign: np.ndarray      # v -> partition id
    k: int

    @property
    def sizes(self) -> list[int]:
        return np.bincount(self.assign, minlength=self.k).tolist()

    def members(self, i: int) -> list[int]:
        return np.flatnonzero(self.assign == i).tolist()

    def __eq__(self, other):
        return isinstance(other, VPartition) and self.k == other.k and np.array_equal(self.assign, other.assign)


def owners_of(neighbor_sets, num_v: int) -> list[list[int]]:
    """For each v, the ascending list of machines i with v in N(U_i)."""
    owners: list[list[int]] = [[] for _ in range(num_v)]
    for i, s in enumerate(neighbor_sets):
        for v in s:
            owners[v].append(i)
    return owners


def machine_costs(neighbor_sets, owners, assign) -> list[int]:
    cost = [len(s) for s in neighbor_sets]
    for v, own in enumerate(owners):
        if own:
            cost[assign[v]] += len(own) - 2
    return cost


def sweep(neighbor_sets, g: BipartiteGraph, prior: VPartition | None = None,
          owners=None) -> VPartition:
    """One pass over V in ascending id.

    Without ``prior`` this is the plain greedy placement starting from
    ``cost_i = |N(U_i)|``.  With ``prior`` every v is taken off its current
    machine and re-placed against the costs of the current assignment.
    Parameters nobody needs go round-robin by id.
    """
    k = len(neighbor_sets)
    if owners is None:
        owners = owners_of(neighbor_sets, g.num_v)
    assign = [v % k for v in range(g.num_v)]
    if prior is None:
        cost = [len(s) for s in neighbor_sets]
    else:
        assign = prior.assign.tolist()
        cost = machine_costs(neighbor_sets, owners, assign)
    for v, own in enumerate(owners):
        if not own:
            continue
        delta = len(own) - 2
        if prior is not None:
            cost[assign[v]] -= delta
        best = own[0]
        for i in own:
            if cost[i] < cost[best]:
                best = i
        assign[v] = best
        cost[best] += delta
    return VPartition(np.asarray(assign, dtype=np.int64), k)


def traffic_max(neighbor_sets, owners, assign) -> int:
    return max(machine_costs(neighbor_sets, owners, assign), default=0)


def sweep_to_convergence(neighbor_sets, g: BipartiteGraph, max_sweeps: int = 50,
                         prior: VPartition | None = None, history: list | None = None):
    """Repeat sweeps until nothing moves or ``max_sweeps`` is hit.

    Returns ``(VPartition, sweeps_run)``.  When ``history`` is given the
    maximal machine cost after every sweep is appended to it.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    owners = owners_of(neighbor_sets, g.num_v)
    vp = prior
    for count in range(1, max_sweeps + 1):
        new = sweep(neighbor_sets, g, vp, owners)
        if history is not None:
            history.append(traffic_max(neighbor_sets, owners, new.assign.tolist()))
        if vp is not None and new == vp:
            return new, count
        vp = new
    return vp, max_sweeps
