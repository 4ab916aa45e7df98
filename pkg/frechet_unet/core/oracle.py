"""
Exhaustive verification of the cheap Fréchet mean estimators on tiny graphs.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from frechet_unet.core.ensembles import sample_ier
from frechet_unet.core.frechet import (
    TIE_TOLERANCE,
    exhaustive_frechet_mean,
    naive_frechet_mean,
    pairwise_squared_distances,
    sample_medoid,
)
from frechet_unet.models.config import OracleConfig
from frechet_unet.models.enums import Metric
from frechet_unet.models.graph import Graph
from frechet_unet.models.params import IerParams, RngSeed
from frechet_unet.models.results import FrechetResult

logger = logging.getLogger('frechet_unet.frechet')


@dataclass
class OracleReport:
    """Agreement of naive and medoid estimates with the exhaustive minimizer."""
    n: int
    metric: Metric
    trials: int
    seed: int
    naive_agreement: float
    medoid_agreement: float
    naive_optimal: float
    mean_naive_gap: float
    max_naive_gap: float
    mean_medoid_gap: float
    max_medoid_gap: float
    ordering_violations: int


def _optimal(result: FrechetResult, best: FrechetResult) -> bool:
    return result.objective <= best.objective + TIE_TOLERANCE * max(1.0, best.objective)


def compare_estimators(sample: List[Graph], metric: Metric,
                       workers: int = 1) -> Tuple[FrechetResult, FrechetResult, FrechetResult, float]:
    """
    Exhaustive, naive and medoid estimates of one sample, plus the objective of the
    worst sample member.
    """
    exhaustive = exhaustive_frechet_mean(sample, metric, workers)
    naive = naive_frechet_mean(sample, metric)
    medoid = sample_medoid(sample, metric)
    worst = float(pairwise_squared_distances(sample, metric).mean(axis=1).max())
    return exhaustive, naive, medoid, worst


def run_oracle(config: OracleConfig, seed: Union[int, RngSeed], workers: int = 1) -> OracleReport:
    """
    Draw ``config.trials`` samples from IER with constant edge probability and compare
    every estimator against the exhaustive search.

    Raises:
        SearchSpaceTooLarge: ``config.n`` above the exhaustive cap
    """
    root = seed if isinstance(seed, RngSeed) else RngSeed(int(seed), 0)
    root = root.derive("oracle")
    metric = Metric(config.metric)
    params = IerParams.constant(config.n, config.p)
    naive_hits = medoid_hits = naive_optimal = violations = 0
    naive_gaps, medoid_gaps = [], []
    for trial in range(config.trials):
        generator = root.derive(trial).generator()
        sample = [sample_ier(params, generator) for _ in range(config.sample_size)]
        exhaustive, naive, medoid, worst = compare_estimators(sample, metric, workers)
        naive_hits += int(naive.mean == exhaustive.mean)
        medoid_hits += int(medoid.mean == exhaustive.mean)
        naive_optimal += int(_optimal(naive, exhaustive))
        naive_gaps.append(naive.objective - exhaustive.objective)
        medoid_gaps.append(medoid.objective - exhaustive.objective)
        slack = TIE_TOLERANCE * max(1.0, worst)
        if not (exhaustive.objective <= medoid.objective + slack and medoid.objective <= worst + slack):
            violations += 1
            logger.warning(f"trial {trial}: objective ordering violated "
                           f"({exhaustive.objective} / {medoid.objective} / {worst})")
    report = OracleReport(
        n=config.n,
        metric=metric,
        trials=config.trials,
        seed=root.seed,
        naive_agreement=naive_hits / config.trials,
        medoid_agreement=medoid_hits / config.trials,
        naive_optimal=naive_optimal / config.trials,
        mean_naive_gap=float(np.mean(naive_gaps)),
        max_naive_gap=float(np.max(naive_gaps)),
        mean_medoid_gap=float(np.mean(medoid_gaps)),
        max_medoid_gap=float(np.max(medoid_gaps)),
        ordering_violations=violations,
    )
    logger.info(f"oracle n={config.n} {metric.value}: naive agrees in {report.naive_agreement:.0%} "
                f"of {config.trials} trials")
    return report


def counterexample() -> Tuple[List[Graph], FrechetResult, FrechetResult]:
    """
    Three-vertex sample {K3, K3, empty} under the Hamming distance, where thresholding
    the mean (K3, objective 3) misses the true Fréchet mean (two edges, objective 2).

    Returns:
        Tuple[List[Graph], FrechetResult, FrechetResult]: Sample, exhaustive and naive results
    """
    sample = [Graph.complete(3), Graph.complete(3), Graph.empty(3)]
    return sample, exhaustive_frechet_mean(sample, Metric.HAMMING), naive_frechet_mean(sample, Metric.HAMMING)
