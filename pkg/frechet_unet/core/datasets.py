"""
Training and test data generation for the three ensembles.

Every batch draws from its own stream derived from the run seed, so batches can be
generated concurrently and still come back bit-identical and in index order.
"""

import logging
import math
import time
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

from frechet_unet.core.ensembles import DEFAULT_MAX_ATTEMPTS, sample_beta_P, sample_ier, sample_pa, sample_sbm
from frechet_unet.core.frechet import closed_form_ier_mean, sample_medoid
from frechet_unet.core.graphs import sample_mean
from frechet_unet.models.config import DEFAULT_L_VALUES, GenerationConfig
from frechet_unet.models.enums import Ensemble
from frechet_unet.models.errors import EnsembleParameterError
from frechet_unet.models.params import IerParams, PaParams, RngSeed, SbmParams
from frechet_unet.models.results import DatasetPair

logger = logging.getLogger('frechet_unet.datasets')

SeedLike = Union[int, RngSeed]


def _root(seed: SeedLike) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed), 0)


def _run_batches(jobs: Sequence[Tuple], build: Callable[..., DatasetPair], workers: int) -> List[DatasetPair]:
    """Build one pair per job, concurrently if asked, returned in job order."""
    started = time.monotonic()
    if workers <= 1 or len(jobs) <= 1:
        pairs = [build(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(lambda job: build(*job), jobs))
    logger.debug(f"built {len(pairs)} pairs in {time.monotonic() - started:.2f}s with {workers} workers")
    return pairs


def generate_ier_dataset(seed: SeedLike, count_params: int = 36, batches_per_param: int = 10,
                         N: int = 10, n: int = 28, shape_range: Tuple[float, float] = (0.5, 5.0),
                         constant_p: Optional[float] = None, workers: int = 1) -> List[DatasetPair]:
    """
    Inhomogeneous Erdős–Rényi pairs.

    For each of ``count_params`` draws of (a, b) ~ U[shape_range]^2, ``batches_per_param``
    batches each draw a fresh P ~ Beta(a, b) and N graphs from IER(P). The target is the
    population Fréchet mean, i.e. P thresholded at 1/2.

    Args:
        seed: Run seed or a stream derived from it
        count_params: Number of (a, b) draws
        batches_per_param: Batches per draw
        N: Graphs per batch
        n: Vertex count
        shape_range: Interval the beta shape parameters are drawn from
        constant_p: Replace every P by the constant matrix p (test hook)
        workers: Threads used for batch generation

    Returns:
        List[DatasetPair]: count_params * batches_per_param pairs
    """
    root = _root(seed).derive(Ensemble.IER.value)
    shapes = root.derive("shapes").generator().uniform(shape_range[0], shape_range[1], size=(count_params, 2))
    jobs = [(i, j, float(shapes[i, 0]), float(shapes[i, 1]))
            for i in range(count_params) for j in range(batches_per_param)]

    def build(i: int, j: int, a: float, b: float) -> DatasetPair:
        stream = root.derive(i, j)
        generator = stream.generator()
        params = IerParams.constant(n, constant_p) if constant_p is not None else sample_beta_P(a, b, n, generator)
        batch = [sample_ier(params, generator) for _ in range(N)]
        return DatasetPair(
            input=sample_mean(batch),
            target=closed_form_ier_mean(params.P),
            ensemble=Ensemble.IER,
            params={"a": a, "b": b, "draw": i, "batch": j, "constant_p": constant_p},
            seed=stream.seed,
            stream=stream.stream,
            batch=batch,
            P=params.P,
        )

    pairs = _run_batches(jobs, build, workers)
    logger.info(f"IER dataset: {len(pairs)} pairs from {len(pairs) * N} graphs (seed {root.seed})")
    return pairs


def generate_sbm_dataset(seed: SeedLike, count_params: int = 36, batches_per_param: int = 10,
                         N: int = 10, blocks_two: Sequence[int] = (14, 14),
                         blocks_three: Sequence[int] = (10, 10, 8),
                         p_range: Tuple[float, float] = (0.5, 0.9), q_range: Tuple[float, float] = (0.01, 0.5),
                         max_attempts: int = DEFAULT_MAX_ATTEMPTS, workers: int = 1) -> List[DatasetPair]:
    """
    Stochastic block model pairs.

    The first half of the parameter draws (rounded up) use ``blocks_two``, the rest
    ``blocks_three``. Each batch holds N connected SBM graphs; the target is the batch
    medoid under the adjacency spectral pseudometric.

    Raises:
        ConnectivityTimeout: A batch could not be filled with connected graphs
    """
    if sum(blocks_two) != sum(blocks_three):
        raise EnsembleParameterError(f"block layouts cover different vertex counts: {blocks_two} vs {blocks_three}")
    root = _root(seed).derive(Ensemble.SBM.value)
    draws = root.derive("pq").generator()
    p_values = draws.uniform(p_range[0], p_range[1], size=count_params)
    q_values = draws.uniform(q_range[0], q_range[1], size=count_params)
    two_block_draws = math.ceil(count_params / 2)
    layouts = [SbmParams(tuple(blocks_two if i < two_block_draws else blocks_three),
                         float(p_values[i]), float(q_values[i]))
               for i in range(count_params)]
    jobs = [(i, j, layouts[i]) for i in range(count_params) for j in range(batches_per_param)]

    def build(i: int, j: int, params: SbmParams) -> DatasetPair:
        stream = root.derive(i, j)
        generator = stream.generator()
        batch = [sample_sbm(params, generator, max_attempts) for _ in range(N)]
        return DatasetPair(
            input=sample_mean(batch),
            target=sample_medoid(batch, Ensemble.SBM.metric).mean,
            ensemble=Ensemble.SBM,
            params={"blocks": list(params.block_sizes), "p": params.p, "q": params.q, "draw": i, "batch": j},
            seed=stream.seed,
            stream=stream.stream,
            batch=batch,
        )

    pairs = _run_batches(jobs, build, workers)
    logger.info(f"SBM dataset: {len(pairs)} pairs from {len(pairs) * N} graphs (seed {root.seed})")
    return pairs


def generate_pa_dataset(seed: SeedLike, l_values: Sequence[int] = tuple(DEFAULT_L_VALUES),
                        batches_per_l: int = 40, N: int = 10, n: int = 28,
                        workers: int = 1) -> List[DatasetPair]:
    """
    Preferential attachment pairs: ``batches_per_l`` batches of N graphs per l value,
    target = batch medoid under the Laplacian spectral pseudometric.
    """
    root = _root(seed).derive(Ensemble.PA.value)
    jobs = [(PaParams(int(l), n), j) for l in l_values for j in range(batches_per_l)]

    def build(params: PaParams, j: int) -> DatasetPair:
        stream = root.derive(params.l, j)
        generator = stream.generator()
        batch = [sample_pa(params, generator) for _ in range(N)]
        return DatasetPair(
            input=sample_mean(batch),
            target=sample_medoid(batch, Ensemble.PA.metric).mean,
            ensemble=Ensemble.PA,
            params={"l": params.l, "batch": j},
            seed=stream.seed,
            stream=stream.stream,
            batch=batch,
        )

    pairs = _run_batches(jobs, build, workers)
    logger.info(f"PA dataset: {len(pairs)} pairs from {len(pairs) * N} graphs (seed {root.seed})")
    return pairs


def generate_dataset(ensemble: Ensemble, seed: SeedLike, config: GenerationConfig,
                     workers: int = 1) -> List[DatasetPair]:
    """Training dataset of one ensemble with the counts and ranges of ``config``."""
    ensemble = Ensemble(ensemble)
    if ensemble is Ensemble.IER:
        return generate_ier_dataset(
            seed, config.count_params, config.batches_per_param, config.sample_size, config.n,
            (config.beta_shape_min, config.beta_shape_max), config.ier_constant_p, workers)
    if ensemble is Ensemble.SBM:
        return generate_sbm_dataset(
            seed, config.count_params, config.batches_per_param, config.sample_size,
            config.sbm_blocks_two, config.sbm_blocks_three,
            (config.sbm_p_min, config.sbm_p_max), (config.sbm_q_min, config.sbm_q_max),
            config.sbm_max_attempts, workers)
    return generate_pa_dataset(seed, config.pa_l_values, config.pa_batches_per_l,
                               config.sample_size, config.n, workers)


def generate_test_set(ensemble: Ensemble, seed: SeedLike, config: GenerationConfig, trials: int,
                      workers: int = 1) -> List[DatasetPair]:
    """
    Held-out batches of one ensemble, drawn from the run's "test" stream.

    The parameter schedule of the training set is kept and the number of draws is
    scaled to cover ``trials`` batches (90 by default: 9 draws x 10 batches for IER
    and SBM, 9 l values x 10 batches for PA).
    """
    ensemble = Ensemble(ensemble)
    root = _root(seed).derive("test")
    if ensemble is Ensemble.PA:
        per_l = math.ceil(trials / len(config.pa_l_values))
        pairs = generate_pa_dataset(root, config.pa_l_values, per_l, config.sample_size, config.n, workers)
    else:
        draws = math.ceil(trials / config.batches_per_param)
        scaled = replace(config, count_params=draws)
        pairs = generate_dataset(ensemble, root, scaled, workers)
    return pairs[:trials]
