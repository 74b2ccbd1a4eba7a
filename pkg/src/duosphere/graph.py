"""Immutable sparse graph representation and GCN normalization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Raised for malformed graph inputs."""


@dataclass(frozen=True)
class Graph:
    """Undirected attributed graph.

    Edges are canonical: each unordered pair (u, v) with u < v stored once,
    sorted lexicographically. Attributes are a dense N x M float matrix.
    """

    n_nodes: int
    n_attrs: int
    edges: np.ndarray  # (|E|, 2) int64, u < v, lexicographically sorted
    attributes: np.ndarray  # (N, M) float64
    labels: np.ndarray  # (N,) int64 class ids

    def __post_init__(self):
        self.edges.setflags(write=False)
        self.attributes.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class CSRMatrix:
    """CSR sparse matrix; column indices strictly increasing within each row."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple[int, int]
    _sp: sp.csr_matrix = field(repr=False, compare=False, default=None)

    @classmethod
    def from_scipy(cls, m: sp.csr_matrix) -> "CSRMatrix":
        m = m.tocsr()
        m.sort_indices()
        m.sum_duplicates()
        return cls(m.indptr.copy(), m.indices.copy(), m.data.astype(np.float64),
                   m.shape, m)

    def to_scipy(self) -> sp.csr_matrix:
        if self._sp is not None:
            return self._sp
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def validate(self) -> None:
        n_rows, _ = self.shape
        if len(self.indptr) != n_rows + 1:
            raise GraphError("indptr length mismatch")
        if np.any(np.diff(self.indptr) < 0):
            raise GraphError("offsets not monotone")
        if self.indptr[-1] != len(self.data) or len(self.data) != len(self.indices):
            raise GraphError("value count mismatch")
        for i in range(n_rows):
            cols = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if len(cols) > 1 and np.any(np.diff(cols) <= 0):
                raise GraphError(f"row {i}: column indices not strictly increasing")


def build_graph(edge_list, attributes, labels) -> Graph:
    """Canonicalize edges (dedup, symmetrize, sort) and validate shapes."""
    attributes = np.asarray(attributes, dtype=np.float64)
    if attributes.ndim != 2:
        raise GraphError("attributes must be a 2-D matrix")
    n = attributes.shape[0]
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise GraphError(f"labels length {labels.shape} != node count {n}")
    if not np.all(np.isfinite(attributes)):
        raise GraphError("attributes contain non-finite values")

    edges = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if len(edges):
        bad = np.where((edges < 0) | (edges >= n))
        if len(bad[0]):
            raise GraphError(
                f"edge endpoint out of range at position {bad[0][0]}: "
                f"{edges[bad[0][0]].tolist()} (N={n})")
        lo = edges.min(axis=1)
        hi = edges.max(axis=1)
        keep = lo != hi  # drop self-loops
        pairs = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    else:
        pairs = edges.reshape(0, 2)
    return Graph(n_nodes=n, n_attrs=attributes.shape[1], edges=pairs,
                 attributes=attributes, labels=labels)


def adjacency(g: Graph, self_loops: bool = False) -> CSRMatrix:
    """Symmetric binary adjacency as CSR, optionally with self-loops."""
    n = g.n_nodes
    if len(g.edges):
        u, v = g.edges[:, 0], g.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
    else:
        rows = cols = np.empty(0, dtype=np.int64)
    if self_loops:
        diag = np.arange(n)
        rows = np.concatenate([rows, diag])
        cols = np.concatenate([cols, diag])
    m = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return CSRMatrix.from_scipy(m)


def degree_vector(g: Graph, self_loops: bool = False) -> np.ndarray:
    d = np.zeros(g.n_nodes)
    if len(g.edges):
        np.add.at(d, g.edges[:, 0], 1.0)
        np.add.at(d, g.edges[:, 1], 1.0)
    if self_loops:
        d += 1.0
    return d


def normalized_adjacency(g: Graph, self_loops: bool = True) -> CSRMatrix:
    """D^{-1/2} A D^{-1/2}; zero degrees clamped to 1; exactly symmetric."""
    a = adjacency(g, self_loops=self_loops).to_scipy()
    d = degree_vector(g, self_loops=self_loops)
    d = np.where(d > 0, d, 1.0)
    inv_sqrt = 1.0 / np.sqrt(d)
    norm = sp.diags(inv_sqrt) @ a @ sp.diags(inv_sqrt)
    return CSRMatrix.from_scipy(norm.tocsr())


def induced_subgraph(g: Graph, nodes) -> tuple[Graph, np.ndarray]:
    """Subgraph on `nodes` with re-indexed ids; returns (subgraph, node order)."""
    nodes = np.asarray(sorted(set(int(i) for i in nodes)), dtype=np.int64)
    remap = -np.ones(g.n_nodes, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    if len(g.edges):
        keep = (remap[g.edges[:, 0]] >= 0) & (remap[g.edges[:, 1]] >= 0)
        sub_edges = remap[g.edges[keep]]
    else:
        sub_edges = np.empty((0, 2), dtype=np.int64)
    sub = build_graph(sub_edges, g.attributes[nodes], g.labels[nodes])
    return sub, nodes
