"""Immutable undirected simple graphs in CSR form, BFS neighborhoods and edge-list I/O."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp


class GraphInputError(ValueError):
    pass


class EdgeListParseError(ValueError):
    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: malformed edge line {line!r}")
        self.lineno = lineno


class VertexSet:
    """Membership over the ids ``0..n-1`` of one graph, backed by a boolean mask."""

    __slots__ = ("mask",)

    def __init__(self, mask: np.ndarray):
        self.mask = np.asarray(mask, dtype=bool)

    @classmethod
    def from_ids(cls, n: int, ids: Iterable[int]) -> "VertexSet":
        mask = np.zeros(n, dtype=bool)
        ids = np.fromiter(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise GraphInputError("vertex id out of range")
        mask[ids] = True
        return cls(mask)

    @property
    def ids(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __contains__(self, u) -> bool:
        return 0 <= u < self.mask.size and bool(self.mask[u])

    def __iter__(self) -> Iterator[int]:
        return iter(self.ids.tolist())

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        if isinstance(other, VertexSet):
            return np.array_equal(self.mask, other.mask)
        if isinstance(other, (set, frozenset)):
            return set(self) == other
        return NotImplemented

    def __repr__(self) -> str:
        return f"VertexSet({sorted(self)})"


class Graph:
    """Undirected simple graph; adjacency lists are sorted slices of one index array.

    Isolated vertices are kept, so ``vertex_count`` may exceed the number of
    vertices touched by edges.
    """

    __slots__ = ("indptr", "indices", "degree", "_csr")

    def __init__(self, indptr: np.ndarray, indices: np.ndarray):
        self.indptr = indptr
        self.indices = indices
        self.degree = np.diff(indptr)
        self._csr = None
        for arr in (self.indptr, self.indices, self.degree):
            arr.setflags(write=False)

    @property
    def vertex_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def edges(self) -> np.ndarray:
        """Canonical ``(m, 2)`` array of edges with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.vertex_count), self.degree)
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def adjacency_matrix(self) -> sp.csr_matrix:
        # cached; the graph never mutates so sharing is safe
        if self._csr is None:
            data = np.ones(len(self.indices), dtype=np.int32)
            n = self.vertex_count
            self._csr = sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))
        return self._csr

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph)
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self) -> str:
        return f"Graph(n={self.vertex_count}, m={self.edge_count})"


def from_edges(n: int, edges) -> Graph:
    """Build a graph on ``n`` vertices; duplicates and self-loops are dropped."""
    if n < 0:
        raise GraphInputError("vertex count must be nonnegative")
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise GraphInputError(f"edge endpoint out of range for n={n}")
    arr = arr[arr[:, 0] != arr[:, 1]]
    both = np.concatenate([arr, arr[:, ::-1]])
    # unique over (src, dst) via a combined key keeps things vectorized
    key = np.unique(both[:, 0] * max(n, 1) + both[:, 1])
    src, dst = np.divmod(key, max(n, 1))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Graph(indptr, dst.astype(np.int64))


def relabel(g: Graph, new_id: np.ndarray, n_new: int | None = None) -> Graph:
    """Graph with vertex ``u`` renamed ``new_id[u]``; vertices mapped to -1 are dropped."""
    n_new = g.vertex_count if n_new is None else n_new
    e = g.edges()
    mapped = new_id[e]
    mapped = mapped[(mapped >= 0).all(axis=1)]
    return from_edges(n_new, mapped)


class BfsScratch:
    """Reusable BFS state for one graph.

    Visited marks are stamped with a per-traversal epoch, so starting a new
    traversal never clears the array.
    """

    def __init__(self, g: Graph):
        self.g = g
        self.stamp = np.zeros(g.vertex_count, dtype=np.int64)
        self.epoch = 0

    def layers(self, u: int, d: int) -> list[list[int]]:
        """Distance layers ``[Γ_1(u), ..., Γ_d(u)]``; stops early once exhausted."""
        self.epoch += 1
        epoch, stamp = self.epoch, self.stamp
        indptr, indices = self.g.indptr, self.g.indices
        stamp[u] = epoch
        frontier = [u]
        out = []
        for _ in range(d):
            nxt = []
            for x in frontier:
                for y in indices[indptr[x]:indptr[x + 1]].tolist():
                    if stamp[y] != epoch:
                        stamp[y] = epoch
                        nxt.append(y)
            out.append(nxt)
            if not nxt:
                out.extend([] for _ in range(d - len(out)))
                break
            frontier = nxt
        return out


def _check_query(g: Graph, u: int, d: int) -> None:
    if not 0 <= u < g.vertex_count:
        raise GraphInputError(f"vertex {u} out of range")
    if d < 1:
        raise GraphInputError("hop count must be >= 1")


def d_hop_neighbors(g: Graph, u: int, d: int, scratch: BfsScratch | None = None) -> VertexSet:
    """Vertices at shortest-path distance exactly ``d`` from ``u``."""
    _check_query(g, u, d)
    scratch = scratch or BfsScratch(g)
    return VertexSet.from_ids(g.vertex_count, scratch.layers(u, d)[d - 1])


def neighbors_within(g: Graph, u: int, d: int, scratch: BfsScratch | None = None) -> VertexSet:
    """Vertices at distance ``1..d`` from ``u`` (``u`` itself excluded)."""
    _check_query(g, u, d)
    scratch = scratch or BfsScratch(g)
    layers = scratch.layers(u, d)
    return VertexSet.from_ids(g.vertex_count, (x for layer in layers for x in layer))


def exact_distance_matrix(g: Graph, sources: np.ndarray, d: int) -> sp.csr_matrix:
    """Boolean ``len(sources) x n`` matrix marking vertices at distance exactly ``d``.

    All sources advance together: one sparse product per hop over a dense
    frontier block.  Used by witness counting, where thousands of BFS runs
    over the same graph are needed.
    """
    sources = np.asarray(sources, dtype=np.int64)
    n = g.vertex_count
    if sources.size == 0:
        return sp.csr_matrix((0, n), dtype=bool)
    A = g.adjacency_matrix()
    rows = []
    # chunk to bound the dense frontier at ~8M cells
    chunk = max(1, 8_000_000 // max(n, 1))
    for start in range(0, len(sources), chunk):
        src = sources[start:start + chunk]
        k = len(src)
        seen = np.zeros((k, n), dtype=bool)
        seen[np.arange(k), src] = True
        frontier = seen.copy()
        for _ in range(d):
            reach = (A @ frontier.T.astype(np.float32)).T > 0
            frontier = reach & ~seen
            seen |= frontier
            if not frontier.any():
                break
        rows.append(sp.csr_matrix(frontier))
    return sp.vstack(rows, format="csr")


def induced_by_degree_cap(g: Graph, cap: float) -> tuple[Graph, VertexSet]:
    """Subgraph induced by vertices whose degree in ``g`` is at most ``cap``.

    Ids are preserved: dropped vertices stay in the id space as isolated
    vertices, and the returned set tells which ones were retained.
    """
    if cap < 0 or math.isnan(cap):
        raise GraphInputError("degree cap must be >= 0")
    keep = g.degree <= cap
    if keep.all():
        return g, VertexSet(keep)
    src = np.repeat(np.arange(g.vertex_count), g.degree)
    ok = keep[src] & keep[g.indices]
    indptr = np.zeros(g.vertex_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(src[ok], minlength=g.vertex_count), out=indptr[1:])
    return Graph(indptr, g.indices[ok].copy()), VertexSet(keep)


def induced_on(g: Graph, keep: np.ndarray) -> Graph:
    """Subgraph induced by a boolean vertex mask, ids preserved."""
    src = np.repeat(np.arange(g.vertex_count), g.degree)
    ok = keep[src] & keep[g.indices]
    indptr = np.zeros(g.vertex_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(src[ok], minlength=g.vertex_count), out=indptr[1:])
    return Graph(indptr, g.indices[ok].copy())


def _parse_pairs(path, lines: Iterable[str]) -> list[tuple[int, int]]:
    pairs = []
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) < 2:
            raise EdgeListParseError(path, lineno, line.rstrip("\n"))
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(path, lineno, line.rstrip("\n")) from None
        if u < 0 or v < 0:
            raise EdgeListParseError(path, lineno, line.rstrip("\n"))
        pairs.append((u, v))
    return pairs


def read_pairs(path) -> list[tuple[int, int]]:
    """Raw ``u v`` integer pairs from a SNAP-style file, ids untouched."""
    with open(path) as fh:
        return _parse_pairs(path, fh)


def load_edge_list_with_ids(path) -> tuple[Graph, dict[int, int]]:
    """Load an edge list; returns the graph and the original-id -> compact-id map.

    Compact ids follow first appearance in the file, except that a file
    whose ids are already exactly ``0..n-1`` keeps them, so canonical files
    round-trip unchanged.
    """
    pairs = read_pairs(path)
    idmap: dict[int, int] = {}
    compact = []
    for u, v in pairs:
        cu = idmap.setdefault(u, len(idmap))
        cv = idmap.setdefault(v, len(idmap))
        compact.append((cu, cv))
    if idmap and max(idmap) == len(idmap) - 1:
        idmap = {u: u for u in sorted(idmap)}
        compact = pairs
    return from_edges(len(idmap), compact), idmap


def load_edge_list(path) -> Graph:
    return load_edge_list_with_ids(path)[0]


def save_edge_list(g: Graph, path) -> None:
    """Write the canonical form: one ``u v`` line per edge, ``u < v``, sorted."""
    Path(path).write_text("".join(f"{u} {v}\n" for u, v in g.edges().tolist()))
