import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parsa.errors import InvalidArgument
from parsa.graph import BipartiteGraph, make_block, zipf_bipartite
from parsa.partition_u import (NEIGHBOR_SET_SIZE, PARTITION_SIZE, GreedyConfig, NeighborSets,
                               init_schedule, neighbor_union, partition_block, pick_partition,
                               run_sequential, vertex_cost)

from conftest import random_graph


def test_vertex_cost(running_example):
    g = running_example
    assert vertex_cost(0, 0, NeighborSets([set()]), g) == 2
    assert vertex_cost(0, 0, NeighborSets([{0}]), g) == 1
    assert vertex_cost(0, 0, NeighborSets([{0, 1, 2}]), g) == 0


def test_running_example_block(running_example):
    S = NeighborSets.empty(2)
    assign = partition_block(make_block(running_example, range(4)), 2, S, debug=True)
    assert assign == [0, 0, 1, 1]
    assert S.sets == [{0, 1}, {1, 2}]
    assert S.sizes == [2, 2]


def test_single_partition_takes_everything():
    g = BipartiteGraph.from_adjacency([[0], [], [2, 3]], num_v=5)
    S = NeighborSets.empty(1)
    assert partition_block(make_block(g, range(3)), 1, S) == [0, 0, 0]
    assert S.sets == [{0, 2, 3}]


def test_block_argument_errors(running_example):
    blk = make_block(running_example, range(4))
    with pytest.raises(InvalidArgument):
        partition_block(blk, 0, NeighborSets.empty(0))
    with pytest.raises(InvalidArgument):
        partition_block(blk, 3, NeighborSets.empty(2))


def test_pick_partition_ties():
    assert pick_partition([3, 1, 1], [0, 2, 1], NEIGHBOR_SET_SIZE) == 2
    assert pick_partition([3, 1, 1], [0, 2, 1], PARTITION_SIZE) == 0
    assert pick_partition([0, 0], [1, 1], NEIGHBOR_SET_SIZE) == 0


def test_isolated_vertices_follow_balance_rule():
    g = BipartiteGraph.from_adjacency([[], [], [], []], num_v=1)
    S = NeighborSets.empty(3)
    assert partition_block(make_block(g, range(4)), 3, S) == [0, 1, 2, 0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3, 5]), st.sampled_from([NEIGHBOR_SET_SIZE, PARTITION_SIZE]))
def test_debug_invariants_and_soundness(seed, k, rule):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, max_u=40, max_edges=200)
    if g.num_u == 0:
        return
    S = NeighborSets.empty(k)
    assign = partition_block(make_block(g, range(g.num_u)), k, S, rule, debug=True)
    assert all(0 <= i < k for i in assign)
    for i in range(k):
        members = [u for u, p in enumerate(assign) if p == i]
        assert S.sets[i] == neighbor_union(g, members)
        assert S.sizes[i] == len(S.sets[i])
    if rule == PARTITION_SIZE:
        sizes = np.bincount(assign, minlength=k)
        assert sizes.max() - sizes.min() <= 1


def test_small_cap_gives_same_result():
    g = zipf_bipartite(400, 150, 10, seed=4)
    blk = make_block(g, range(g.num_u))
    a = partition_block(blk, 4, NeighborSets.empty(4), cap=1024)
    b = partition_block(blk, 4, NeighborSets.empty(4), cap=2)
    assert a == b


def test_init_schedule():
    assert init_schedule(0, 4) == []
    assert init_schedule(3, 4) == [0, 1, 2]
    assert init_schedule(6, 4) == [0, 1, 2, 3, 0, 1]


def test_sequential_degenerate_matches_block(running_example):
    up, S = run_sequential(running_example, GreedyConfig(k=2, a=0, b=1))
    assert up.assign.tolist() == [0, 0, 1, 1]
    assert S.sets == [{0, 1}, {1, 2}]


def test_sequential_deterministic_and_sound():
    g = zipf_bipartite(1500, 400, 8, seed=1)
    cfg = GreedyConfig(k=8, a=0, b=5, seed=3)
    up1, S1 = run_sequential(g, cfg)
    up2, S2 = run_sequential(g, cfg)
    assert up1 == up2 and S1 == S2
    assert up1.is_complete()
    for i in range(cfg.k):
        assert S1.sets[i] == neighbor_union(g, up1.members(i))


def test_sequential_with_init_is_superset():
    g = zipf_bipartite(800, 300, 6, seed=2)
    up, S = run_sequential(g, GreedyConfig(k=4, a=3, b=4, seed=0), debug=True)
    assert up.is_complete()
    for i in range(4):
        assert S.sets[i] >= neighbor_union(g, up.members(i))


def test_sequential_from_prior_sets():
    g = zipf_bipartite(300, 100, 5, seed=6)
    S0 = NeighborSets([{0, 1}, {2}, set()])
    up, S = run_sequential(g, GreedyConfig(k=3, a=0, b=2), S0)
    assert S0.sets == [{0, 1}, {2}, set()]
    assert S.sets[0] >= {0, 1} and S.sets[1] >= {2}
    with pytest.raises(InvalidArgument):
        run_sequential(g, GreedyConfig(k=2, a=0, b=2), S0)


def test_sequential_more_blocks_than_vertices_and_empty():
    g = BipartiteGraph.from_adjacency([[0], [1]])
    up, _ = run_sequential(g, GreedyConfig(k=2, a=1, b=16))
    assert up.is_complete()
    up, S = run_sequential(BipartiteGraph.from_adjacency([], num_v=3), GreedyConfig(k=2))
    assert up.assign.size == 0 and S.sizes == [0, 0]


@pytest.mark.parametrize("field, value", [("k", 0), ("b", 0), ("a", -1), ("balance_rule", "nope")])
def test_config_validation(field, value):
    cfg = GreedyConfig(**{field: value})
    with pytest.raises(InvalidArgument):
        cfg.validate()


def test_greedy_beats_random_on_footprint():
    from parsa.partition_u import max_footprint, UPartition
    g = zipf_bipartite(3000, 1500, 8, seed=0)
    up, _ = run_sequential(g, GreedyConfig(k=8, a=8, b=8))
    rng = np.random.default_rng(0)
    rand = UPartition(rng.permutation(np.arange(g.num_u) % 8), 8)
    assert max_footprint(g, up) < 0.8 * max_footprint(g, rand)
