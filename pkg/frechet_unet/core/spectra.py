"""
Dense symmetric eigenvalues and the spectral graph (pseudo)distances.

Eigenvalues are computed by Householder reduction to tridiagonal form followed by the
implicit-shift QL iteration. Spectra of graphs are cached by graph value, since
Fréchet-mean computations compare the same graphs many times.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Dict, List

import numpy as np

from frechet_unet.core.graphs import laplacian
from frechet_unet.models.enums import Metric, SpectrumConvention
from frechet_unet.models.errors import ConvergenceError, GraphError, SpectrumError
from frechet_unet.models.graph import Graph, SpectrumVector, WeightedMatrix

logger = logging.getLogger('frechet_unet.spectra')

SYMMETRY_TOLERANCE = 1e-12
MAX_QL_ITERATIONS = 60
_EPS = np.finfo(np.float64).eps


def householder_tridiagonal(a: np.ndarray):
    """
    Reduce a symmetric matrix to tridiagonal form by Householder reflections.

    Args:
        a: Symmetric matrix; it is copied, not modified

    Returns:
        Tuple[np.ndarray, np.ndarray]: Diagonal (n) and off-diagonal (n-1) entries
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    for k in range(n - 2):
        u = a[k + 1:, k].copy()
        u_mag = math.sqrt(float(np.dot(u, u)))
        if u_mag == 0.0:
            continue
        if u[0] < 0.0:
            u_mag = -u_mag
        u[0] += u_mag
        h = float(np.dot(u, u)) / 2.0
        v = a[k + 1:, k + 1:] @ u / h
        g = float(np.dot(u, v)) / (2.0 * h)
        v -= g * u
        a[k + 1:, k + 1:] -= np.outer(v, u) + np.outer(u, v)
        a[k, k + 1] = a[k + 1, k] = -u_mag
    return np.diagonal(a).copy(), np.diagonal(a, 1).copy()


def tridiagonal_ql(diagonal: np.ndarray, off_diagonal: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a symmetric tridiagonal matrix by QL with implicit Wilkinson shifts.

    ``off_diagonal[i]`` couples entries i and i+1.
    """
    d = [float(x) for x in diagonal]
    n = len(d)
    e = [float(x) for x in off_diagonal] + [0.0]
    for l in range(n):
        iterations = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            iterations += 1
            if iterations > MAX_QL_ITERATIONS:
                raise ConvergenceError(f"QL did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d)


def sym_eigenvalues(m) -> np.ndarray:
    """
    All eigenvalues of a real symmetric matrix, in no particular order.

    Args:
        m: WeightedMatrix or array; asymmetry up to 1e-12 (relative to the largest
           entry) is tolerated and symmetrized away

    Returns:
        np.ndarray: The n eigenvalues
    """
    a = np.asarray(m.w if isinstance(m, WeightedMatrix) else m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpectrumError(f"eigenvalues need a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise SpectrumError("eigenvalues of a 0 x 0 matrix requested")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOLERANCE * scale:
        raise SpectrumError("matrix is not symmetric")
    a = (a + a.T) / 2.0
    if a.shape[0] == 1:
        return a[0].copy()
    diagonal, off_diagonal = householder_tridiagonal(a)
    return tridiagonal_ql(diagonal, off_diagonal)


@lru_cache(maxsize=65536)
def _adjacency_values(g: Graph) -> np.ndarray:
    vals = np.sort(sym_eigenvalues(g.adj))[::-1].copy()
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=65536)
def _laplacian_values(g: Graph) -> np.ndarray:
    vals = np.sort(sym_eigenvalues(laplacian(g)))
    vals.setflags(write=False)
    return vals


def adjacency_spectrum(g: Graph) -> SpectrumVector:
    """Adjacency eigenvalues, descending."""
    return SpectrumVector(_adjacency_values(g), SpectrumConvention.ADJACENCY_DESCENDING)


def laplacian_spectrum(g: Graph) -> SpectrumVector:
    """Laplacian eigenvalues, ascending; the first is 0 up to rounding."""
    return SpectrumVector(_laplacian_values(g), SpectrumConvention.LAPLACIAN_ASCENDING)


def _check_sizes(g1: Graph, g2: Graph):
    if g1.n != g2.n:
        raise GraphError(f"size mismatch: n={g1.n} vs n={g2.n}")


def d_adjacency(g1: Graph, g2: Graph) -> float:
    """Adjacency spectral pseudometric."""
    _check_sizes(g1, g2)
    return float(np.linalg.norm(_adjacency_values(g1) - _adjacency_values(g2)))


def d_laplacian(g1: Graph, g2: Graph) -> float:
    """Combinatorial Laplacian spectral pseudometric."""
    _check_sizes(g1, g2)
    return float(np.linalg.norm(_laplacian_values(g1) - _laplacian_values(g2)))


def d_hamming(g1: Graph, g2: Graph) -> float:
    """Number of vertex pairs i < j on which the two graphs disagree."""
    _check_sizes(g1, g2)
    return float(np.count_nonzero(g1.upper() != g2.upper()))


DISTANCES: Dict[Metric, Callable[[Graph, Graph], float]] = {
    Metric.HAMMING: d_hamming,
    Metric.ADJACENCY_SPECTRAL: d_adjacency,
    Metric.LAPLACIAN_SPECTRAL: d_laplacian,
}


def distance(g1: Graph, g2: Graph, metric: Metric) -> float:
    return DISTANCES[Metric(metric)](g1, g2)


def embed(graphs: List[Graph], metric: Metric) -> np.ndarray:
    """
    Rows whose Euclidean (spectral metrics) or L1 (Hamming) distances are the metric.

    Used to vectorize pairwise distance computations.
    """
    metric = Metric(metric)
    if metric is Metric.HAMMING:
        return np.stack([g.upper().astype(np.float64) for g in graphs])
    values = _adjacency_values if metric is Metric.ADJACENCY_SPECTRAL else _laplacian_values
    return np.stack([values(g) for g in graphs])
