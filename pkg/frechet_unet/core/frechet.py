"""
Exact and baseline sample Fréchet means.

The sample Fréchet mean of graphs G^(1..N) under a metric d minimizes
(1/N) sum_k d^2(G, G^(k)) over graphs G on the common vertex set. This module
provides the closed form for inhomogeneous Erdős–Rényi samples, the naive thresholded
mean, the minimizer restricted to the sample (medoid), and an exhaustive search for
graphs small enough to enumerate.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

import numpy as np

from frechet_unet.core.graphs import sample_mean, threshold_half
from frechet_unet.core.spectra import distance, embed, sym_eigenvalues
from frechet_unet.models.enums import FrechetMethod, Metric
from frechet_unet.models.errors import SearchSpaceTooLarge
from frechet_unet.models.graph import Graph, WeightedMatrix, require_same_size
from frechet_unet.models.results import FrechetResult

logger = logging.getLogger('frechet_unet.frechet')

EXHAUSTIVE_MAX_N = 6
TIE_TOLERANCE = 1e-9


def frechet_objective(candidate: Graph, sample: List[Graph], metric: Metric) -> float:
    """Mean squared distance from ``candidate`` to the sample members."""
    require_same_size(sample)
    return float(np.mean([distance(candidate, g, metric) ** 2 for g in sample]))


def pairwise_squared_distances(sample: List[Graph], metric: Metric) -> np.ndarray:
    """
    N x N matrix of squared distances between sample members.

    Returns:
        np.ndarray: Symmetric matrix with zero diagonal
    """
    require_same_size(sample)
    rows = embed(sample, metric)
    diff = rows[:, None, :] - rows[None, :, :]
    if Metric(metric) is Metric.HAMMING:
        return np.abs(diff).sum(axis=2) ** 2
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return dist * dist


def closed_form_ier_mean(P_or_mean: WeightedMatrix) -> Graph:
    """
    Fréchet mean of an IER sample under the Hamming distance.

    Accepts the population edge probabilities P or a sample mean matrix; either way the
    mean is the strict threshold at 1/2.
    """
    return threshold_half(P_or_mean)


def naive_frechet_mean(sample: List[Graph], metric: Metric = Metric.HAMMING) -> FrechetResult:
    """Threshold of the sample mean adjacency matrix, scored under ``metric``."""
    mean = threshold_half(sample_mean(sample))
    return FrechetResult(
        mean=mean,
        objective=frechet_objective(mean, sample, metric),
        method=FrechetMethod.NAIVE_THRESHOLD,
        metric=Metric(metric),
    )


def sample_medoid(sample: List[Graph], metric: Metric) -> FrechetResult:
    """
    Sample member minimizing the Fréchet objective; ties go to the lowest index.
    """
    require_same_size(sample)
    objectives = pairwise_squared_distances(sample, metric).mean(axis=1)
    best = _first_minimum(objectives)
    return FrechetResult(
        mean=sample[best],
        objective=float(objectives[best]),
        method=FrechetMethod.SAMPLE_MEDOID,
        metric=Metric(metric),
        index=best,
    )


def _first_minimum(objectives: np.ndarray) -> int:
    """Lowest index whose objective is within the tie tolerance of the minimum."""
    lowest = float(np.min(objectives))
    tolerance = TIE_TOLERANCE * max(1.0, abs(lowest))
    return int(np.flatnonzero(objectives <= lowest + tolerance)[0])


def _candidate_bits(n: int, start: int, stop: int) -> np.ndarray:
    """Upper-triangle bit rows of candidates ``start..stop-1`` (MSB = first pair)."""
    m = n * (n - 1) // 2
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _chunk_objectives(n: int, sample: List[Graph], metric: Metric, start: int, stop: int) -> np.ndarray:
    bits = _candidate_bits(n, start, stop)
    if metric is Metric.HAMMING:
        members = embed(sample, metric)
        hamming = np.abs(bits[:, None, :].astype(np.float64) - members[None, :, :]).sum(axis=2)
        return (hamming ** 2).mean(axis=1)

    members = embed(sample, metric)
    rows, cols = np.triu_indices(n, k=1)
    objectives = np.empty(bits.shape[0])
    for index, row in enumerate(bits):
        adj = np.zeros((n, n))
        adj[rows, cols] = row
        adj += adj.T
        if metric is Metric.ADJACENCY_SPECTRAL:
            vals = np.sort(sym_eigenvalues(adj))[::-1]
        else:
            vals = np.sort(sym_eigenvalues(np.diag(adj.sum(axis=1)) - adj))
        diff = members - vals[None, :]
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        objectives[index] = np.mean(dist * dist)
    return objectives


def exhaustive_frechet_mean(sample: List[Graph], metric: Metric, workers: int = 1) -> FrechetResult:
    """
    Global minimizer of the Fréchet objective over every graph on n labeled vertices.

    Ties are broken by the lexicographically smallest upper-triangle bit string. The
    candidate space may be split across ``workers`` threads; chunk results are merged
    in candidate order, so the answer does not depend on the worker count.

    Raises:
        SearchSpaceTooLarge: n above 6
    """
    n = require_same_size(sample)
    if n > EXHAUSTIVE_MAX_N:
        raise SearchSpaceTooLarge(n, EXHAUSTIVE_MAX_N)
    metric = Metric(metric)
    total = 2 ** (n * (n - 1) // 2)
    chunks = max(1, min(workers, total))
    bounds = np.linspace(0, total, chunks + 1, dtype=np.int64)
    spans: List[Tuple[int, int]] = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    logger.debug(f"exhaustive search over {total} graphs on {n} vertices in {len(spans)} chunks")

    if chunks == 1:
        parts = [_chunk_objectives(n, sample, metric, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            parts = list(pool.map(lambda span: _chunk_objectives(n, sample, metric, *span), spans))
    objectives = np.concatenate(parts)
    best = _first_minimum(objectives)
    mean = Graph.from_upper(n, _candidate_bits(n, best, best + 1)[0])
    return FrechetResult(
        mean=mean,
        objective=frechet_objective(mean, sample, metric),
        method=FrechetMethod.EXHAUSTIVE,
        metric=metric,
    )
