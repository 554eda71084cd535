"""Vertex-cut partitioning of bipartite dependency graphs for parameter-server placement."""

__version__ = "0.1.0"

from .errors import InvalidArgument, ParseError, ParsaError, ProtocolError  # noqa: E402
from .graph import (BipartiteGraph, divide_into_subgraphs, load_cache, load_edge_list,  # noqa: E402
                    load_libsvm, save_cache, zipf_bipartite)
from .costindex import CostIndex  # noqa: E402
from .partition_u import (GreedyConfig, NeighborSets, UPartition, partition_block,  # noqa: E402
                          run_reference, run_sequential)
from .partition_v import VPartition, sweep, sweep_to_convergence  # noqa: E402
from .metrics import MetricsReport, evaluate, improvement_vs_random  # noqa: E402
from .runtime import run_parallel  # noqa: E402

__all__ = [
    "BipartiteGraph", "CostIndex", "GreedyConfig", "InvalidArgument", "MetricsReport",
    "NeighborSets", "ParseError", "ParsaError", "ProtocolError", "UPartition", "VPartition",
    "divide_into_subgraphs", "evaluate", "improvement_vs_random", "load_cache", "load_edge_list",
    "load_libsvm", "partition_block", "run_parallel", "run_reference", "run_sequential",
    "save_cache", "sweep", "sweep_to_convergence", "zipf_bipartite",
]
