"""
Random graph ensemble parameters and seeded random streams.
"""

import hashlib
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from frechet_unet.models.errors import EnsembleParameterError
from frechet_unet.models.graph import WeightedMatrix

UINT64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class RngSeed:
    """
    A (seed, stream) pair that fully determines sampler output.

    Streams are backed by numpy's counter-based Philox generator; ``derive`` splits
    off independent child streams for batches, so generation can run in any order
    and still reproduce bit-for-bit.
    """
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not 0 <= value <= UINT64_MAX:
                raise EnsembleParameterError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(sequence))

    def derive(self, *labels: Union[int, str]) -> "RngSeed":
        """Child stream identified by ``labels`` under this stream."""
        digest = hashlib.blake2b(digest_size=8)
        digest.update(self.stream.to_bytes(8, "little"))
        for label in labels:
            digest.update(b"\x1f" + str(label).encode("utf-8"))
        return RngSeed(self.seed, int.from_bytes(digest.digest(), "little"))


RandomSource = Union[RngSeed, np.random.Generator]


def as_generator(rng: RandomSource) -> np.random.Generator:
    """Accept either a seed pair or an already-running generator."""
    if isinstance(rng, RngSeed):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class IerParams:
    """Inhomogeneous Erdős–Rényi model: independent edges with probabilities P."""
    P: WeightedMatrix

    def __post_init__(self):
        if not self.P.bounded:
            raise EnsembleParameterError("edge probabilities must be a bounded matrix")

    @property
    def n(self) -> int:
        return self.P.n

    @classmethod
    def constant(cls, n: int, p: float) -> "IerParams":
        w = np.full((n, n), float(p))
        np.fill_diagonal(w, 0.0)
        return cls(WeightedMatrix(w))


@dataclass(frozen=True)
class SbmParams:
    """Stochastic block model: probability p inside blocks, q across blocks."""
    block_sizes: Tuple[int, ...]
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if not self.block_sizes or any(b <= 0 for b in self.block_sizes):
            raise EnsembleParameterError(f"block sizes must be positive, got {self.block_sizes}")
        if not 0.0 <= self.q <= self.p <= 1.0:
            raise EnsembleParameterError(f"need 0 <= q <= p <= 1, got p={self.p}, q={self.q}")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    def labels(self) -> np.ndarray:
        """Block index of every vertex."""
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)

    def probability_matrix(self) -> WeightedMatrix:
        labels = self.labels()
        w = np.where(labels[:, None] == labels[None, :], self.p, self.q).astype(np.float64)
        np.fill_diagonal(w, 0.0)
        return WeightedMatrix(w)


@dataclass(frozen=True)
class PaParams:
    """Preferential attachment growth: l attachments per newcomer, final size n."""
    l: int
    n: int

    def __post_init__(self):
        if not 1 <= self.l <= self.n - 1:
            raise EnsembleParameterError(f"need 1 <= l <= n - 1, got l={self.l}, n={self.n}")

    @property
    def edge_count(self) -> int:
        return self.l * (self.n - self.l)
