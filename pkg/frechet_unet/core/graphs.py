"""
Graph-level operations: degrees, Laplacian, sample mean, thresholding and degree
histograms.

All functions are pure; inputs are immutable models and are never modified.
"""

import logging
from typing import List

import numpy as np

from frechet_unet.models.errors import GraphError
from frechet_unet.models.graph import DegreeHistogram, Graph, WeightedMatrix, require_same_size

logger = logging.getLogger('frechet_unet.graphs')

EPS_KL = 1e-6


def degrees(g: Graph) -> np.ndarray:
    """Row sums of the adjacency matrix."""
    return g.adj.sum(axis=1, dtype=np.int64)


def laplacian(g: Graph) -> WeightedMatrix:
    """Combinatorial Laplacian D - A."""
    adj = g.adj.astype(np.float64)
    return WeightedMatrix(np.diag(adj.sum(axis=1)) - adj, bounded=False)


def sample_mean(sample: List[Graph]) -> WeightedMatrix:
    """
    Entrywise mean (1/N) sum_k A^(k) of a sample of same-size graphs.

    Args:
        sample: Non-empty list of graphs on a common vertex set

    Returns:
        WeightedMatrix: Symmetric, zero diagonal, entries in [0, 1]
    """
    require_same_size(sample)
    total = np.zeros(sample[0].adj.shape, dtype=np.int64)
    for g in sample:
        total += g.adj
    return WeightedMatrix(total / len(sample))


def threshold_half(m: WeightedMatrix, threshold: float = 0.5) -> Graph:
    """Graph with an edge exactly where m[i][j] > threshold (strict)."""
    if not m.bounded:
        raise GraphError("thresholding needs a bounded matrix with entries in [0, 1]")
    adj = (m.w > threshold).astype(np.uint8)
    np.fill_diagonal(adj, 0)
    return Graph(adj)


def degree_histogram(g: Graph) -> DegreeHistogram:
    """Frequencies f[k] = (#vertices of degree k) / n over k = 0..n."""
    counts = np.bincount(degrees(g), minlength=g.n + 1)
    return DegreeHistogram(g.n, counts / g.n)


def kl_divergence(f: DegreeHistogram, g: DegreeHistogram, eps: float = EPS_KL) -> float:
    """
    Kullback-Leibler divergence D(f || g) with natural logarithm.

    Bins with f[k] = 0 contribute nothing; denominators are clamped at ``eps`` so the
    divergence stays finite when g misses a degree present in f.
    """
    if f.n != g.n:
        raise GraphError(f"histograms over different sizes: {f.n} vs {g.n}")
    support = f.f > 0.0
    p = f.f[support]
    q = np.maximum(g.f[support], eps)
    return float(np.sum(p * np.log(p / q)))
