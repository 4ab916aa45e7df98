"""
Result models: Fréchet mean estimates, training pairs and evaluation records.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from frechet_unet.models.enums import Ensemble, FrechetMethod, Metric
from frechet_unet.models.errors import GraphError
from frechet_unet.models.graph import Graph, WeightedMatrix


@dataclass(frozen=True)
class FrechetResult:
    """A Fréchet mean estimate together with the value of the objective it attains."""
    mean: Graph
    objective: float
    method: FrechetMethod
    metric: Metric
    index: Optional[int] = None  # sample position, for medoids

    def __post_init__(self):
        if not self.objective >= 0.0:
            raise GraphError(f"objective must be nonnegative, got {self.objective}")


@dataclass
class DatasetPair:
    """
    One training (or test) example: the batch mean and its Fréchet-mean target.

    ``batch`` keeps the member graphs for provenance; ``P`` is kept for IER pairs
    whose target is the population mean.
    """
    input: WeightedMatrix
    target: Graph
    ensemble: Ensemble
    params: Dict[str, Any]
    seed: int
    stream: int
    batch: List[Graph] = field(default_factory=list, repr=False)
    P: Optional[WeightedMatrix] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.target.n

    def meta(self) -> Dict[str, Any]:
        return {
            "ensemble": self.ensemble.value,
            "params": self.params,
            "seed": self.seed,
            "stream": self.stream,
        }


@dataclass
class EvalRecord:
    """
    Per-trial evaluation of one model on one test batch.

    ``delta``/``delta_rel`` compare the estimate with the true sample Fréchet mean;
    ``delta_sample``/``delta_sample_rel`` compare it with the sample mean spectrum.
    """
    model: str
    ensemble: Ensemble
    trial: int
    delta: np.ndarray
    delta_rel: np.ndarray
    delta_sample: np.ndarray
    delta_sample_rel: np.ndarray
    kl: float
    seed: int

    def __post_init__(self):
        for name in ("delta", "delta_rel", "delta_sample", "delta_sample_rel"):
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(values)) or np.any(values < 0.0):
                raise GraphError(f"{name} entries must be finite and nonnegative")
            setattr(self, name, values)
        if not (np.isfinite(self.kl) and self.kl >= -1e-9):
            raise GraphError(f"kl must be finite and nonnegative, got {self.kl}")

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["ensemble"] = self.ensemble.value
        for name in ("delta", "delta_rel", "delta_sample", "delta_sample_rel"):
            record[name] = [float(v) for v in getattr(self, name)]
        record["kl"] = float(self.kl)
        return record

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalRecord":
        data = dict(data)
        data["ensemble"] = Ensemble(data["ensemble"])
        return cls(**data)


@dataclass
class EvalSummary:
    """Averages over the records of one (model, ensemble) group."""
    model: str
    ensemble: Ensemble
    trials: int
    mean_delta: np.ndarray
    mean_delta_rel: np.ndarray
    mean_delta_sample: np.ndarray
    mean_delta_sample_rel: np.ndarray
    max_abs: Tuple[float, int]
    min_abs: Tuple[float, int]
    max_rel: Tuple[float, int]
    min_rel: Tuple[float, int]
    kl_mean: float
    kl_variance: float
