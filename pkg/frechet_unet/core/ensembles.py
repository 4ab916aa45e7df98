"""
Seeded samplers for the random graph ensembles: inhomogeneous Erdős–Rényi (IER),
stochastic block model (SBM) and preferential attachment (PA).

Every sampler takes its randomness explicitly (an RngSeed or a running numpy
Generator); there is no global random state.
"""

import logging
from collections import deque

import numpy as np

from frechet_unet.models.errors import ConnectivityTimeout, EnsembleParameterError
from frechet_unet.models.graph import Graph, WeightedMatrix
from frechet_unet.models.params import IerParams, PaParams, RandomSource, SbmParams, as_generator

logger = logging.getLogger('frechet_unet.ensembles')

DEFAULT_MAX_ATTEMPTS = 1000


def sample_beta_P(a: float, b: float, n: int, rng: RandomSource) -> IerParams:
    """
    Edge-probability matrix with i.i.d. Beta(a, b) entries above the diagonal.

    Beta draws are X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b); numpy's gamma sampler
    (Marsaglia-Tsang) is valid for shapes below 1 as well.
    """
    if not (a > 0.0 and b > 0.0):
        raise EnsembleParameterError(f"beta shape parameters must be positive, got a={a}, b={b}")
    generator = as_generator(rng)
    count = n * (n - 1) // 2
    x = generator.standard_gamma(a, size=count)
    y = generator.standard_gamma(b, size=count)
    total = x + y
    # both gammas can underflow to 0 for tiny shapes
    values = np.divide(x, total, out=np.full(count, a / (a + b)), where=total > 0.0)
    w = np.zeros((n, n))
    w[np.triu_indices(n, k=1)] = values
    return IerParams(WeightedMatrix(w + w.T))


def sample_ier(params: IerParams, rng: RandomSource) -> Graph:
    """Each pair i < j is an edge independently with probability P[i][j]."""
    generator = as_generator(rng)
    n = params.n
    rows, cols = np.triu_indices(n, k=1)
    draws = generator.random(rows.size)
    upper = (draws < params.P.w[rows, cols]).astype(np.uint8)
    adj = np.zeros((n, n), dtype=np.uint8)
    adj[rows, cols] = upper
    return Graph(adj + adj.T)


def is_connected(g: Graph) -> bool:
    """Breadth-first search from vertex 0 reaches every vertex."""
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in np.flatnonzero(g.adj[v]):
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return bool(seen.all())


def sample_sbm(params: SbmParams, rng: RandomSource, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Graph:
    """
    Stochastic block model sample, redrawn until connected.

    Raises:
        ConnectivityTimeout: No connected graph within ``max_attempts`` draws
    """
    if max_attempts < 1:
        raise EnsembleParameterError(f"max_attempts must be >= 1, got {max_attempts}")
    generator = as_generator(rng)
    ier = IerParams(params.probability_matrix())
    for attempt in range(1, max_attempts + 1):
        g = sample_ier(ier, generator)
        if is_connected(g):
            if attempt > 1:
                logger.debug(f"SBM {params} connected after {attempt} attempts")
            if attempt > max(1, max_attempts // 10):
                logger.warning(f"SBM {params} needed {attempt} of {max_attempts} attempts")
            return g
    raise ConnectivityTimeout(max_attempts, params)


def sample_pa(params: PaParams, rng: RandomSource) -> Graph:
    """
    Preferential attachment graph grown from a star on l+1 vertices.

    The star's center is vertex l. Each later vertex picks l distinct targets one at a
    time, with probability proportional to degree, from degrees frozen at the start of
    its step. The result has exactly l(n-l) edges. Requires n > l + 1.
    """
    l, n = params.l, params.n
    if n <= l + 1:
        raise EnsembleParameterError(f"PA needs n > l + 1, got l={l}, n={n}")
    generator = as_generator(rng)
    adj = np.zeros((n, n), dtype=np.uint8)
    adj[l, :l] = adj[:l, l] = 1
    deg = adj.sum(axis=1).astype(np.float64)
    for i in range(l + 1, n):
        weights = deg[:i].copy()
        targets = []
        for _ in range(l):
            j = int(generator.choice(i, p=weights / weights.sum()))
            targets.append(j)
            weights[j] = 0.0
        adj[i, targets] = adj[targets, i] = 1
        deg[targets] += 1.0
        deg[i] = l
    return Graph(adj)
