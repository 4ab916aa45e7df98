"""
Spectral and degree-distribution comparison of Fréchet mean estimates.

For every test batch the estimate is compared with the batch's true Fréchet mean and
with the sample mean spectrum (the average of the members' adjacency spectra). All
comparisons use adjacency spectra sorted descending.
"""

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from frechet_unet.core.graphs import EPS_KL, degree_histogram, kl_divergence
from frechet_unet.core.spectra import adjacency_spectrum
from frechet_unet.models.enums import Ensemble
from frechet_unet.models.errors import GraphError
from frechet_unet.models.graph import Graph, require_same_size
from frechet_unet.models.results import EvalRecord, EvalSummary

logger = logging.getLogger('frechet_unet.evaluation')

EPS_REL = 1e-8
REL_WINDOW = 10


def sample_mean_spectrum(sample: List[Graph]) -> np.ndarray:
    """Entrywise mean of the members' descending adjacency spectra."""
    require_same_size(sample)
    return np.mean([adjacency_spectrum(g).vals for g in sample], axis=0)


def spectral_gap(reference: np.ndarray, estimate: np.ndarray,
                 eps_rel: float = EPS_REL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Absolute and relative per-eigenvalue differences.

    Returns:
        Tuple[np.ndarray, np.ndarray]: |reference - estimate| and that divided entrywise
        by max(|reference|, eps_rel)
    """
    delta = np.abs(reference - estimate)
    return delta, delta / np.maximum(np.abs(reference), eps_rel)


def _trial(trial: int, estimate: Graph, truth: Graph, sample: List[Graph], model: str,
           ensemble: Ensemble, seed: int, eps_rel: float, eps_kl: float) -> EvalRecord:
    if estimate.n != truth.n or require_same_size(sample) != truth.n:
        raise GraphError(f"trial {trial}: estimate, truth and sample sizes differ")
    predicted = adjacency_spectrum(estimate).vals
    delta, delta_rel = spectral_gap(adjacency_spectrum(truth).vals, predicted, eps_rel)
    delta_sample, delta_sample_rel = spectral_gap(sample_mean_spectrum(sample), predicted, eps_rel)
    kl = kl_divergence(degree_histogram(truth), degree_histogram(estimate), eps_kl)
    return EvalRecord(
        model=model,
        ensemble=ensemble,
        trial=trial,
        delta=delta,
        delta_rel=delta_rel,
        delta_sample=delta_sample,
        delta_sample_rel=delta_sample_rel,
        kl=kl,
        seed=seed,
    )


def evaluate(model_outputs: Sequence[Graph], truths: Sequence[Graph], samples: Sequence[List[Graph]],
             model: str = "model", ensemble: Ensemble = Ensemble.IER, seeds: Optional[Sequence[int]] = None,
             eps_rel: float = EPS_REL, eps_kl: float = EPS_KL, workers: int = 1) -> List[EvalRecord]:
    """
    Per-trial evaluation records.

    Args:
        model_outputs: Estimated Fréchet means, one per trial
        truths: True sample Fréchet means under the ensemble's metric
        samples: The test batches, for the sample mean spectrum
        model: Model identifier stored in the records
        ensemble: Ensemble the test batches come from
        seeds: Per-trial provenance seeds
        eps_rel: Floor of the relative-difference denominator
        eps_kl: Denominator clamp of the KL divergence
        workers: Threads evaluating trials; records come back in trial order

    Returns:
        List[EvalRecord]: One record per trial
    """
    if not (len(model_outputs) == len(truths) == len(samples)):
        raise GraphError(
            f"misaligned inputs: {len(model_outputs)} outputs, {len(truths)} truths, {len(samples)} samples")
    seeds = list(seeds) if seeds is not None else [0] * len(truths)
    if len(seeds) != len(truths):
        raise GraphError(f"misaligned inputs: {len(seeds)} seeds for {len(truths)} trials")
    ensemble = Ensemble(ensemble)
    jobs = list(zip(range(len(truths)), model_outputs, truths, samples, seeds))

    def run(job) -> EvalRecord:
        trial, estimate, truth, sample, seed = job
        return _trial(trial, estimate, truth, sample, model, ensemble, seed, eps_rel, eps_kl)

    if workers <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def _mean_rows(rows: Sequence[np.ndarray]) -> np.ndarray:
    """Column means with correctly rounded sums, independent of row order."""
    stacked = np.stack(rows)
    return np.array([math.fsum(column) for column in stacked.T]) / stacked.shape[0]


def _extreme(values: np.ndarray, pick) -> Tuple[float, int]:
    """(value, 1-based index) of the first max or min entry."""
    index = int(pick(values))
    return float(values[index]), index + 1


def summarize(records: Sequence[EvalRecord], rel_window: int = REL_WINDOW) -> EvalSummary:
    """
    Average the records of one (model, ensemble) group.

    Relative extremes are taken over the first ``rel_window`` eigenvalues only. The KL
    variance is the population variance over trials.
    """
    if not records:
        raise GraphError("cannot summarize an empty group of records")
    groups = {(r.model, r.ensemble) for r in records}
    if len(groups) != 1:
        raise GraphError(f"records mix several (model, ensemble) groups: {sorted(groups)}")
    model, ensemble = groups.pop()
    mean_delta = _mean_rows([r.delta for r in records])
    mean_delta_rel = _mean_rows([r.delta_rel for r in records])
    window = mean_delta_rel[:rel_window]
    kls = np.array([r.kl for r in records])
    kl_mean = math.fsum(kls) / len(kls)
    kl_variance = math.fsum((kls - kl_mean) ** 2) / len(kls)
    return EvalSummary(
        model=model,
        ensemble=ensemble,
        trials=len(records),
        mean_delta=mean_delta,
        mean_delta_rel=mean_delta_rel,
        mean_delta_sample=_mean_rows([r.delta_sample for r in records]),
        mean_delta_sample_rel=_mean_rows([r.delta_sample_rel for r in records]),
        max_abs=_extreme(mean_delta, np.argmax),
        min_abs=_extreme(mean_delta, np.argmin),
        max_rel=_extreme(window, np.argmax),
        min_rel=_extreme(window, np.argmin),
        kl_mean=kl_mean,
        kl_variance=kl_variance,
    )


def summarize_all(records: Sequence[EvalRecord], rel_window: int = REL_WINDOW) -> Dict[Tuple[str, Ensemble], EvalSummary]:
    """Summaries of every (model, ensemble) group, in first-appearance order."""
    groups: Dict[Tuple[str, Ensemble], List[EvalRecord]] = defaultdict(list)
    for record in records:
        groups[(record.model, record.ensemble)].append(record)
    return {key: summarize(group, rel_window) for key, group in groups.items()}
