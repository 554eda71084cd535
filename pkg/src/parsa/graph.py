"""Bipartite dependency graphs: construction, loaders, binary cache and block division.

A graph links data vertices ``U`` (examples, rows) to parameter vertices ``V``
(features, columns).  Both adjacency directions are kept as CSR arrays.

Binary cache layout (little endian)::

    offset  size  field
    0       4     magic b"PRSA"
    4       4     uint32 format version (currently 1)
    8       8     uint64 num_u
    16      8     uint64 num_v
    24      8     uint64 num_edges
    32      8*(num_u+1)   int64 u_indptr
    ...     8*num_edges   int64 u_indices (sorted per row)

The V-side adjacency is rebuilt from the U side on load.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidArgument, ParseError

log = logging.getLogger(__name__)

CACHE_MAGIC = b"PRSA"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def _csr_from_pairs(rows: np.ndarray, cols: np.ndarray, num_rows: int):
    """Sorted, deduplicated CSR from parallel row/col arrays."""
    if rows.size:
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        keep = np.ones(rows.size, dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        rows, cols = rows[keep], cols[keep]
    counts = np.bincount(rows, minlength=num_rows) if num_rows else np.zeros(0, np.int64)
    indptr = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, cols.astype(np.int64, copy=False)


def _transpose(indptr: np.ndarray, indices: np.ndarray, num_cols: int):
    num_rows = indptr.size - 1
    rows = np.repeat(np.arange(num_rows, dtype=np.int64), np.diff(indptr))
    # stable sort on column keeps rows ascending inside each column
    order = np.argsort(indices, kind="stable")
    t_indices = rows[order]
    counts = np.bincount(indices, minlength=num_cols) if num_cols else np.zeros(0, np.int64)
    t_indptr = np.zeros(num_cols + 1, dtype=np.int64)
    np.cumsum(counts, out=t_indptr[1:])
    return t_indptr, t_indices


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Immutable sparse bipartite graph G(U, V, E).

    Build with :meth:`from_edges` or :meth:`from_adjacency`; the constructor
    takes already-validated CSR arrays.
    """

    num_u: int
    num_v: int
    u_indptr: np.ndarray
    u_indices: np.ndarray
    v_indptr: np.ndarray
    v_indices: np.ndarray
    u_labels: np.ndarray | None = field(default=None, repr=False)
    v_labels: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], num_u: int | None = None,
                   num_v: int | None = None, **labels) -> "BipartiteGraph":
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        rows, cols = pairs[:, 0], pairs[:, 1]
        if pairs.size and (rows.min() < 0 or cols.min() < 0):
            raise InvalidArgument("vertex ids must be non-negative")
        if num_u is None:
            num_u = int(rows.max()) + 1 if rows.size else 0
        if num_v is None:
            num_v = int(cols.max()) + 1 if cols.size else 0
        if rows.size and (rows.max() >= num_u or cols.max() >= num_v):
            raise InvalidArgument("edge endpoint out of range")
        return cls.from_csr(num_u, num_v, *_csr_from_pairs(rows, cols, num_u), **labels)

    @classmethod
    def from_adjacency(cls, adj_u: Sequence[Sequence[int]], num_v: int | None = None) -> "BipartiteGraph":
        edges = [(u, v) for u, nbrs in enumerate(adj_u) for v in nbrs]
        return cls.from_edges(edges, num_u=len(adj_u), num_v=num_v)

    @classmethod
    def from_csr(cls, num_u: int, num_v: int, u_indptr, u_indices, **labels) -> "BipartiteGraph":
        u_indptr = np.ascontiguousarray(u_indptr, dtype=np.int64)
        u_indices = np.ascontiguousarray(u_indices, dtype=np.int64)
        v_indptr, v_indices = _transpose(u_indptr, u_indices, num_v)
        return cls(num_u, num_v, u_indptr, u_indices, v_indptr, v_indices, **labels)

    @property
    def num_edges(self) -> int:
        return int(self.u_indices.size)

    @cached_property
    def adj_u(self) -> list[list[int]]:
        p, idx = self.u_indptr.tolist(), self.u_indices.tolist()
        return [idx[p[i]:p[i + 1]] for i in range(self.num_u)]

    @cached_property
    def adj_v(self) -> list[list[int]]:
        p, idx = self.v_indptr.tolist(), self.v_indices.tolist()
        return [idx[p[i]:p[i + 1]] for i in range(self.num_v)]

    def degree_u(self) -> np.ndarray:
        return np.diff(self.u_indptr)

    def degree_v(self) -> np.ndarray:
        return np.diff(self.v_indptr)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, nbrs in enumerate(self.adj_u):
            for v in nbrs:
                yield u, v

    def same_structure(self, other: "BipartiteGraph") -> bool:
        return (self.num_u == other.num_u and self.num_v == other.num_v
                and np.array_equal(self.u_indptr, other.u_indptr)
                and np.array_equal(self.u_indices, other.u_indices)
                and np.array_equal(self.v_indptr, other.v_indptr)
                and np.array_equal(self.v_indices, other.v_indices))

    def id_map(self) -> dict:
        """External labels for the dense ids; identity when the loader did not compact."""
        def conv(labels, n):
            return list(range(n)) if labels is None else [int(x) for x in labels]
        return {"u": conv(self.u_labels, self.num_u), "v": conv(self.v_labels, self.num_v)}


# --------------------------------------------------------------------------
# loaders


def load_libsvm(path) -> BipartiteGraph:
    """Read a libsvm/svmlight file; line i becomes u_i, feature index j becomes v_j.

    Feature values are ignored.  Blank lines and ``#`` comments are skipped.
    """
    rows: list[int] = []
    cols: list[int] = []
    u = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                float(tokens[0])
            except ValueError:
                raise ParseError(f"bad label {tokens[0]!r}", path=path, line=lineno) from None
            seen = set()
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                if not sep or not idx.isdigit():
                    raise ParseError(f"bad feature token {tok!r}", path=path, line=lineno)
                try:
                    float(val)
                except ValueError:
                    raise ParseError(f"bad feature value {tok!r}", path=path, line=lineno) from None
                j = int(idx)
                if j in seen:
                    raise ParseError(f"duplicate feature index {j}", path=path, line=lineno)
                seen.add(j)
                rows.append(u)
                cols.append(j)
            u += 1
    num_v = max(cols) + 1 if cols else 0
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    return BipartiteGraph.from_csr(u, num_v, *_csr_from_pairs(r, c, u))


def load_edge_list(path, directed: bool = True) -> BipartiteGraph:
    """Adjacency construction for a natural graph: U' = V = node set.

    Every edge ``src dst`` yields (u_src, v_dst); undirected input also adds
    (u_dst, v_src).  Node ids are compacted to 0..n-1 in ascending order of
    the external id; the mapping is kept in ``u_labels``/``v_labels``.
    """
    src: list[int] = []
    dst: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise ParseError("expected two node ids", path=path, line=lineno)
            try:
                a, b = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {line!r}", path=path, line=lineno) from None
            src.append(a)
            dst.append(b)
    s = np.asarray(src, dtype=np.int64)
    d = np.asarray(dst, dtype=np.int64)
    labels, inverse = np.unique(np.concatenate([s, d]), return_inverse=True)
    s, d = inverse[: s.size], inverse[s.size:]
    if not directed:
        s, d = np.concatenate([s, d]), np.concatenate([d, s])
    n = int(labels.size)
    compact = not np.array_equal(labels, np.arange(n))
    extra = {"u_labels": labels, "v_labels": labels} if compact else {}
    return BipartiteGraph.from_csr(n, n, *_csr_from_pairs(s, d, n), **extra)


def save_cache(g: BipartiteGraph, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, g.num_u, g.num_v, g.num_edges))
        fh.write(g.u_indptr.astype("<i8").tobytes())
        fh.write(g.u_indices.astype("<i8").tobytes())


def load_cache(path) -> BipartiteGraph:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ParseError("truncated cache header", path=path)
        magic, version, num_u, num_v, num_edges = _HEADER.unpack(head)
        if magic != CACHE_MAGIC:
            raise ParseError("not a graph cache file", path=path)
        if version != CACHE_VERSION:
            raise ParseError(f"unsupported cache version {version}", path=path)
        indptr = np.frombuffer(fh.read(8 * (num_u + 1)), dtype="<i8")
        indices = np.frombuffer(fh.read(8 * num_edges), dtype="<i8")
    if indptr.size != num_u + 1 or indices.size != num_edges or indptr[-1] != num_edges:
        raise ParseError("truncated or inconsistent cache body", path=path)
    idmap = Path(str(path) + ".idmap.json")
    labels = {}
    if idmap.exists():
        m = json.loads(idmap.read_text())
        if m["u"] != list(range(num_u)):
            labels["u_labels"] = np.asarray(m["u"], dtype=np.int64)
        if m["v"] != list(range(num_v)):
            labels["v_labels"] = np.asarray(m["v"], dtype=np.int64)
    return BipartiteGraph.from_csr(int(num_u), int(num_v), indptr.astype(np.int64),
                                   indices.astype(np.int64), **labels)


def save_id_map(g: BipartiteGraph, path) -> None:
    Path(path).write_text(json.dumps(g.id_map(), separators=(",", ":")) + "\n")


# --------------------------------------------------------------------------
# synthetic data


def zipf_bipartite(num_u: int, num_v: int, avg_degree: float = 12.0,
                   exponent: float = 1.5, seed: int = 0) -> BipartiteGraph:
    """Random bipartite graph whose parameter popularity follows a Zipf law.

    Each u draws ``1 + Poisson(avg_degree - 1)`` endpoints with probability
    proportional to ``rank ** -exponent``; duplicate draws collapse, so
    realised degrees sit slightly below ``avg_degree``.  Ranks are mapped to
    v-ids through a random permutation.
    """
    if num_u < 0 or num_v < 1 or avg_degree < 1:
        raise InvalidArgument("need num_u >= 0, num_v >= 1, avg_degree >= 1")
    rng = np.random.default_rng(seed)
    weights = np.arange(1, num_v + 1, dtype=float) ** -exponent
    weights /= weights.sum()
    degrees = 1 + rng.poisson(avg_degree - 1, size=num_u)
    draws = rng.choice(num_v, size=int(degrees.sum()), p=weights)
    perm = rng.permutation(num_v)
    rows = np.repeat(np.arange(num_u, dtype=np.int64), degrees)
    cols = perm[draws].astype(np.int64)
    return BipartiteGraph.from_csr(num_u, num_v, *_csr_from_pairs(rows, cols, num_u))


# --------------------------------------------------------------------------
# subgraph blocks


@dataclass(eq=False)
class SubgraphBlock:
    """One block of a division: a slice of U plus every v it touches.

    Local u-ids follow ascending global id, so id tie-breaks agree between
    local and global numbering.
    """

    block_id: int
    u_ids: list[int]
    v_ids: list[int]            # local v -> global v, ascending
    adj_u: list[list[int]]      # local u -> local v
    adj_v: list[list[int]]      # local v -> local u

    @property
    def num_u(self) -> int:
        return len(self.u_ids)

    @property
    def num_v(self) -> int:
        return len(self.v_ids)

    @property
    def local_graph(self) -> BipartiteGraph:
        return BipartiteGraph.from_adjacency(self.adj_u, num_v=len(self.v_ids))


def make_block(g: BipartiteGraph, u_ids: Iterable[int], block_id: int = 0) -> SubgraphBlock:
    u_ids = sorted(int(u) for u in u_ids)
    adj = g.adj_u
    v_ids = sorted({v for u in u_ids for v in adj[u]})
    local = {v: i for i, v in enumerate(v_ids)}
    adj_u = [[local[v] for v in adj[u]] for u in u_ids]
    adj_v: list[list[int]] = [[] for _ in v_ids]
    for lu, nbrs in enumerate(adj_u):
        for lv in nbrs:
            adj_v[lv].append(lu)
    return SubgraphBlock(block_id, u_ids, v_ids, adj_u, adj_v)


class BlockDivision(Sequence):
    """Lazy sequence of subgraph blocks; a block is built only when indexed."""

    def __init__(self, g: BipartiteGraph, chunks: list[np.ndarray]):
        self.graph = g
        self.chunks = chunks

    def __len__(self) -> int:
        return len(self.chunks)

    def __getitem__(self, j):
        if isinstance(j, slice):
            return [self[i] for i in range(*j.indices(len(self)))]
        if j < 0:
            j += len(self)
        return make_block(self.graph, self.chunks[j].tolist(), block_id=j)

    def block_u_ids(self, j: int) -> list[int]:
        return sorted(self.chunks[j].tolist())


def divide_into_subgraphs(g: BipartiteGraph, b: int, seed: int | None = 0) -> BlockDivision:
    """Split a seeded random permutation of U into ``b`` chunks differing in size by at most 1."""
    if b < 1 or b > g.num_u:
        raise InvalidArgument(f"block count must be in 1..{g.num_u}, got {b}")
    perm = np.random.default_rng(seed).permutation(g.num_u)
    return BlockDivision(g, np.array_split(perm, b))
