"""
Graph and matrix models for Fréchet U-Net.

A Graph is a simple undirected unweighted labeled graph stored as a binary symmetric
adjacency matrix with zero diagonal. A WeightedMatrix is a real symmetric matrix
(sample mean adjacency matrix, edge-probability matrix, Laplacian, network output).
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

import numpy as np

from frechet_unet.models.enums import SpectrumConvention
from frechet_unet.models.errors import GraphError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Simple undirected graph on n labeled vertices.

    Equality and hashing go through the upper-triangle bit string, so graphs can key
    caches and be compared with ``==``.
    """
    adj: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] == 0:
            raise GraphError(f"adjacency must be a non-empty square matrix, got shape {adj.shape}")
        if not np.all((adj == 0) | (adj == 1)):
            raise GraphError("adjacency entries must be exactly 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphError("adjacency must have a zero diagonal (no self-loops)")
        object.__setattr__(self, "adj", _frozen(adj.astype(np.uint8, copy=True)))

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum()) // 2

    def upper(self) -> np.ndarray:
        """Strict upper triangle in row-major order."""
        return self.adj[np.triu_indices(self.n, k=1)]

    def upper_bits(self) -> str:
        return "".join("1" if bit else "0" for bit in self.upper())

    @classmethod
    def from_upper(cls, n: int, bits: Iterable[int]) -> "Graph":
        values = np.fromiter((int(b) for b in bits), dtype=np.uint8)
        expected = n * (n - 1) // 2
        if values.size != expected:
            raise GraphError(f"expected {expected} upper-triangle entries for n={n}, got {values.size}")
        adj = np.zeros((n, n), dtype=np.uint8)
        adj[np.triu_indices(n, k=1)] = values
        return cls(adj + adj.T)

    @classmethod
    def from_bits(cls, n: int, bits: str) -> "Graph":
        if set(bits) - {"0", "1"}:
            raise GraphError("graph bit strings may only contain '0' and '1'")
        return cls.from_upper(n, (ch == "1" for ch in bits))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        """Build a graph from 0-based vertex pairs."""
        adj = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            if i == j:
                raise GraphError(f"self-loop on vertex {i}")
            adj[i, j] = adj[j, i] = 1
        return cls(adj)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(np.ones((n, n), dtype=np.uint8) - np.eye(n, dtype=np.uint8))

    @classmethod
    def star(cls, n: int, center: int = 0) -> "Graph":
        return cls.from_edges(n, ((center, v) for v in range(n) if v != center))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, ((v, v + 1) for v in range(n - 1)))

    def relabel(self, permutation: np.ndarray) -> "Graph":
        """Graph with vertex ``permutation[i]`` renamed to ``i``."""
        perm = np.asarray(permutation)
        return Graph(self.adj[np.ix_(perm, perm)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True, eq=False)
class WeightedMatrix:
    """
    Real symmetric n x n matrix.

    With ``bounded=True`` (means, edge probabilities, network outputs) entries must lie in
    [0, 1] and the diagonal must be zero; Laplacians are created with ``bounded=False``.
    """
    w: np.ndarray
    bounded: bool = True

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise GraphError(f"matrix must be non-empty and square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphError("matrix entries must be finite")
        if not np.array_equal(w, w.T):
            raise GraphError("matrix must be symmetric")
        if self.bounded:
            if np.any(w < 0.0) or np.any(w > 1.0):
                raise GraphError("bounded matrix entries must lie in [0, 1]")
            if np.any(np.diag(w) != 0.0):
                raise GraphError("bounded matrix must have a zero diagonal")
        object.__setattr__(self, "w", _frozen(w.copy()))

    @property
    def n(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class DegreeHistogram:
    """Frequencies f[k] = n_k / n of vertex degrees k = 0..n."""
    n: int
    f: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if f.shape != (self.n + 1,):
            raise GraphError(f"histogram for n={self.n} needs {self.n + 1} bins, got {f.shape}")
        if np.any(f < 0.0) or abs(f.sum() - 1.0) > 1e-12:
            raise GraphError("histogram must be nonnegative and sum to 1")
        object.__setattr__(self, "f", _frozen(f.copy()))


@dataclass(frozen=True)
class SpectrumVector:
    """Sorted eigenvalues with their sort convention."""
    vals: np.ndarray
    convention: SpectrumConvention

    def __post_init__(self):
        vals = np.asarray(self.vals, dtype=np.float64)
        steps = np.diff(vals)
        if self.convention is SpectrumConvention.ADJACENCY_DESCENDING and np.any(steps > 0.0):
            raise GraphError("adjacency spectrum must be sorted descending")
        if self.convention is SpectrumConvention.LAPLACIAN_ASCENDING and np.any(steps < 0.0):
            raise GraphError("Laplacian spectrum must be sorted ascending")
        object.__setattr__(self, "vals", _frozen(vals.copy()))

    def __len__(self) -> int:
        return self.vals.shape[0]


def require_same_size(graphs: List[Graph]) -> int:
    """
    Check a sample is non-empty and of common size.

    Returns:
        int: The common vertex count
    """
    if not graphs:
        raise GraphError("sample is empty")
    n = graphs[0].n
    for index, graph in enumerate(graphs):
        if graph.n != n:
            raise GraphError(f"size mismatch: graph {index} has n={graph.n}, expected n={n}")
    return n
