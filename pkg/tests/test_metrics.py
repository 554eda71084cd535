import json
import math

import numpy as np
import pytest

from parsa.errors import InvalidArgument
from parsa.graph import BipartiteGraph, zipf_bipartite
from parsa.metrics import (evaluate, improvement, improvement_vs_random, random_baseline,
                           random_placement, remote_pairs)
from parsa.partition_u import UPartition
from parsa.partition_v import VPartition

from conftest import random_graph


def _up(assign, k):
    return UPartition(np.asarray(assign, dtype=np.int64), k)


def _vp(assign, k):
    return VPartition(np.asarray(assign, dtype=np.int64), k)


def test_running_example_report(running_example):
    rep = evaluate(running_example, _up([0, 0, 1, 1], 2), _vp([0, 0, 1], 2))
    assert rep.traffic == [1, 1]
    assert (rep.T_max, rep.T_sum) == (1, 2)
    assert rep.footprint == [2, 2] and rep.M_max == 2
    assert rep.max_u_size == 2 and rep.isolated_v_count == 0


def test_single_machine_no_traffic():
    g = zipf_bipartite(100, 40, 5, seed=0)
    rep = evaluate(g, _up([0] * 100, 1), _vp([0] * 40, 1))
    assert rep.T_sum == 0 and rep.T_max == 0


def test_perfect_locality():
    g = BipartiteGraph.from_adjacency([[0, 1], [1], [2], [3]], num_v=5)
    rep = evaluate(g, _up([0, 0, 1, 1], 2), _vp([0, 0, 1, 1, 0], 2))
    assert rep.T_sum == 0
    assert rep.isolated_v_count == 1


def test_mismatch_errors(running_example):
    with pytest.raises(InvalidArgument):
        evaluate(running_example, _up([0, 0, 1, 1], 2), _vp([0, 0, 1], 3))
    with pytest.raises(InvalidArgument):
        evaluate(running_example, _up([0, 0, -1, 1], 2), _vp([0, 0, 1], 2))


def test_decomposition_identity_and_invariants():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = random_graph(rng, max_u=50, max_edges=300)
        k = int(rng.integers(1, 6))
        up, vp = random_placement(g, k, rng, feasible_v=bool(rng.integers(2)))
        rep = evaluate(g, up, vp)
        pairs = remote_pairs(g, up, vp)
        assert sum(rep.worker_traffic) == sum(rep.server_traffic) == pairs
        assert rep.T_sum == 2 * pairs
        assert min(rep.traffic, default=0) >= 0 and rep.T_max <= rep.T_sum
        for i in range(k):
            own_needed = sum(1 for v in vp.members(i) if g.adj_v[v] and i in set(up.assign[g.adj_v[v]].tolist()))
            assert rep.footprint[i] >= own_needed


def test_feasible_random_v():
    g = zipf_bipartite(200, 80, 5, seed=1)
    up, vp = random_placement(g, 4, np.random.default_rng(0))
    for v, us in enumerate(g.adj_v):
        if us:
            assert vp.assign[v] in set(up.assign[us].tolist())
    assert max(up.sizes) - min(up.sizes) <= 1


def test_improvement_definition():
    assert improvement(10, 10) == 0
    assert improvement(20, 10) == 100
    assert math.isinf(improvement(3, 0))
    assert improvement(0, 0) == 0


def test_random_vs_random_is_near_zero():
    g = zipf_bipartite(2000, 800, 6, seed=0)
    rng = np.random.default_rng(11)
    rep = evaluate(g, *random_placement(g, 8, rng))
    assert abs(improvement_vs_random(g, rep, "T_max", trials=10, seed=5)) < 15


def test_trials_must_be_positive(running_example):
    with pytest.raises(InvalidArgument):
        random_baseline(running_example, 2, 0)
    rep = evaluate(running_example, _up([0, 0, 1, 1], 2), _vp([0, 0, 1], 2))
    with pytest.raises(InvalidArgument):
        improvement_vs_random(running_example, rep, "nope")


def test_report_outputs(running_example):
    rep = evaluate(running_example, _up([0, 0, 1, 1], 2), _vp([0, 0, 1], 2))
    rep.improvement = {"T_max": math.inf, "M_max": 12.5}
    d = json.loads(rep.to_json())
    assert d["improvement"] == {"M_max": 12.5, "T_max": "inf"}
    assert rep.to_json() == rep.to_json()
    assert "T_max=1" in rep.table() and "improvement T_max: inf" in rep.table()
    assert rep.machines_csv().splitlines()[1] == "0,2,2,0,1,1"
