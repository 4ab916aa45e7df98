"""
Training of the U-Net variants and Fréchet mean prediction with a trained network.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from frechet_unet.core.adam import AdamState, adam_step
from frechet_unet.core.graphs import sample_mean, threshold_half
from frechet_unet.core.unet import Gradients, ModelParams, backward, bce_loss, forward, init_params
from frechet_unet.models.config import TrainingConfig
from frechet_unet.models.enums import Variant
from frechet_unet.models.errors import DatasetError, ShapeError
from frechet_unet.models.graph import Graph, WeightedMatrix, require_same_size
from frechet_unet.models.params import RngSeed
from frechet_unet.models.results import DatasetPair
from frechet_unet.utils.formatting import format_duration

logger = logging.getLogger('frechet_unet.training')

BINARIZE_THRESHOLD = 0.5


class Predictor(Protocol):
    def infer(self, x: np.ndarray) -> np.ndarray: ...


@dataclass
class TrainingRun:
    """Final parameters, optimizer state and the mean loss of every epoch."""
    params: ModelParams
    state: AdamState
    epoch_losses: List[float] = field(default_factory=list)


def _pair_gradients(params: ModelParams, pair: DatasetPair) -> Tuple[float, Gradients]:
    y, cache = forward(params, pair.input.w)
    loss, grad = bce_loss(y, pair.target.adj[:, :, None])
    return loss, backward(params, cache, grad)


def _batch_step(params: ModelParams, batch: Sequence[DatasetPair], pool: Optional[ThreadPoolExecutor]):
    if pool is None:
        results = [_pair_gradients(params, pair) for pair in batch]
    else:
        results = list(pool.map(lambda pair: _pair_gradients(params, pair), batch))
    losses = [loss for loss, _ in results]
    grads = Gradients.sum([g for _, g in results], scale=1.0 / len(batch))
    return losses, grads


def fit(params: ModelParams, data: Sequence[DatasetPair], seed: Union[int, RngSeed],
        config: Optional[TrainingConfig] = None, state: Optional[AdamState] = None,
        workers: int = 1) -> TrainingRun:
    """
    Adam / binary cross entropy training over shuffled mini-batches.

    Each step averages the per-pair gradients of one mini-batch; per-pair passes may
    run on ``workers`` threads, their gradients are summed in batch order.

    Args:
        params: Starting parameters
        data: Training pairs
        seed: Seed of the shuffling stream
        config: Epochs, batch size and Adam hyperparameters
        state: Optimizer state to resume from
        workers: Threads for per-pair forward/backward passes

    Returns:
        TrainingRun: Final parameters, optimizer state and per-epoch mean losses
    """
    if not data:
        raise DatasetError("cannot train on an empty dataset")
    size = params.input_size
    for pair in data:
        if pair.n != size:
            raise ShapeError(f"pair of size {pair.n} does not fit a network with input size {size}")
    config = config or TrainingConfig()
    if state is None:
        state = AdamState.for_params(params, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    root = seed if isinstance(seed, RngSeed) else RngSeed(int(seed), 0)
    shuffle = root.derive("shuffle")

    losses_per_epoch = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            started = time.monotonic()
            order = shuffle.derive(epoch).generator().permutation(len(data))
            epoch_losses = []
            for offset in range(0, len(order), config.batch_size):
                batch = [data[i] for i in order[offset:offset + config.batch_size]]
                losses, grads = _batch_step(params, batch, pool)
                params, state = adam_step(params, grads, state)
                epoch_losses.extend(losses)
            mean_loss = float(np.mean(epoch_losses))
            losses_per_epoch.append(mean_loss)
            logger.info(f"epoch {epoch}/{config.epochs}: mean loss {mean_loss:.6f} "
                        f"({format_duration(time.monotonic() - started)})")
    finally:
        if pool is not None:
            pool.shutdown()
    return TrainingRun(params=params, state=state, epoch_losses=losses_per_epoch)


def train_run(variant: Variant, data: Sequence[DatasetPair], seed: Union[int, RngSeed],
              config: Optional[TrainingConfig] = None, workers: int = 1) -> TrainingRun:
    """Initialize a variant from ``seed`` and train it; keeps the optimizer state and history."""
    variant = Variant(variant)
    if not data:
        raise DatasetError(f"no training data for {variant.label}")
    config = config or TrainingConfig()
    root = seed if isinstance(seed, RngSeed) else RngSeed(int(seed), 0)
    root = root.derive("train", variant.value)
    ensembles = {pair.ensemble for pair in data}
    if not ensembles <= set(variant.ensembles):
        raise DatasetError(f"{variant.label} does not train on {sorted(e.value for e in ensembles - set(variant.ensembles))}")
    params = init_params(root, base_channels=config.base_channels, input_size=data[0].n)
    logger.info(f"training {variant.label} on {len(data)} pairs, {params.size} parameters, "
                f"{config.epochs} epochs")
    return fit(params, data, root, config, workers=workers)


def train_variant(variant: Variant, data: Sequence[DatasetPair], seed: Union[int, RngSeed],
                  config: Optional[TrainingConfig] = None, workers: int = 1) -> ModelParams:
    """
    Train one model variant.

    GEN expects the concatenation of the IER, SBM and PA datasets.

    Returns:
        ModelParams: Final parameters
    """
    return train_run(variant, data, seed, config, workers).params


def predict_frechet(params: Predictor, sample: List[Graph],
                    threshold: float = BINARIZE_THRESHOLD) -> Graph:
    """
    Fréchet mean estimate of a sample from a trained network.

    The network output for the sample mean is symmetrized, its diagonal zeroed and the
    result thresholded strictly at ``threshold``.

    Args:
        params: Anything with ``infer(x)``, normally ModelParams
        sample: Graphs on a common vertex set

    Returns:
        Graph: The estimate
    """
    n = require_same_size(sample)
    return binarize_output(params.infer(sample_mean(sample).w), n, threshold)


def binarize_output(y: np.ndarray, n: int, threshold: float = BINARIZE_THRESHOLD) -> Graph:
    """Symmetrize, clear the diagonal and threshold a raw network output."""
    y = np.asarray(y, dtype=np.float64).reshape(n, n)
    symmetric = np.clip((y + y.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(symmetric, 0.0)
    return threshold_half(WeightedMatrix(symmetric), threshold)
