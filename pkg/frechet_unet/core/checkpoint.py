"""
Binary checkpoints of network parameters and optimizer state.

Layout (little-endian):
    magic       b"FGL1"
    descriptor  uint32 layer count, then per layer uint32 kind, kh, kw, c_in, c_out
    parameters  float32 weights then biases of each layer, in descriptor order
    optimizer   int64 t; float32 m and v in parameter order; float64 lr, beta1, beta2, eps
"""

import hashlib
import logging
import os
import struct
import tempfile
from typing import Optional, Tuple

import numpy as np

from frechet_unet.core.adam import AdamState
from frechet_unet.core.unet import INPUT_SIZE, LayerSpec, ModelParams
from frechet_unet.models.enums import LayerKind
from frechet_unet.models.errors import (
    CheckpointError,
    CheckpointVersionError,
    ShapeChainError,
    TruncatedCheckpointError,
)

logger = logging.getLogger('frechet_unet.checkpoint')

MAGIC = b"FGL1"
_F32 = np.dtype("<f4")


def _encode(params: ModelParams, state: AdamState) -> bytes:
    chunks = [MAGIC, struct.pack("<I", len(params.descriptor))]
    for spec in params.descriptor:
        chunks.append(struct.pack("<5I", int(spec.kind), spec.kh, spec.kw, spec.c_in, spec.c_out))
    for w, b in zip(params.weights, params.biases):
        chunks.append(np.ascontiguousarray(w, dtype=_F32).tobytes())
        chunks.append(np.ascontiguousarray(b, dtype=_F32).tobytes())
    chunks.append(struct.pack("<q", state.t))
    for moments in (state.m, state.v):
        for array in moments:
            chunks.append(np.ascontiguousarray(array, dtype=_F32).tobytes())
    chunks.append(struct.pack("<4d", state.lr, state.beta1, state.beta2, state.eps))
    return b"".join(chunks)


def save_checkpoint(params: ModelParams, state: Optional[AdamState], path: str) -> str:
    """
    Write a checkpoint atomically.

    Args:
        params: Network parameters
        state: Optimizer state; a fresh zero state is written when None
        path: Destination file

    Returns:
        str: SHA-256 digest of the written bytes
    """
    if state is None:
        state = AdamState.for_params(params)
    if len(state.m) != len(params.arrays()):
        raise CheckpointError("optimizer state does not match the parameters")
    payload = _encode(params, state)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    digest = hashlib.sha256(payload).hexdigest()
    logger.info(f"Saved checkpoint {path} ({params.size} parameters, sha256 {digest[:16]})")
    return digest


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise TruncatedCheckpointError(
                f"{self.path}: truncated at byte {len(self.data)}, needed {self.offset + size}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.take(count * _F32.itemsize), dtype=_F32).astype(np.float32).reshape(shape)


def load_checkpoint(path: str, base_channels: Optional[int] = None,
                    input_size: int = INPUT_SIZE) -> Tuple[ModelParams, AdamState]:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Args:
        path: Checkpoint file
        base_channels: Expected architecture width; a checkpoint of another width is rejected
        input_size: Spatial input size the parameters are used with

    Returns:
        Tuple[ModelParams, AdamState]: Parameters and optimizer state, bit-exact
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    reader = _Reader(data, path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointVersionError(f"{path}: not a {MAGIC.decode()} checkpoint")

    (count,) = reader.unpack("<I")
    descriptor = []
    for _ in range(count):
        kind, kh, kw, c_in, c_out = reader.unpack("<5I")
        try:
            descriptor.append(LayerSpec(LayerKind(kind), kh, kw, c_in, c_out))
        except ValueError:
            raise ShapeChainError(f"{path}: unknown layer kind tag {kind}")
    if descriptor and base_channels is not None and descriptor[0].c_out != base_channels:
        raise ShapeChainError(
            f"{path}: checkpoint has base width {descriptor[0].c_out}, expected {base_channels}")

    weights, biases = [], []
    for spec in descriptor:
        weights.append(reader.array(spec.weight_shape))
        biases.append(reader.array((spec.c_out,)))
    params = ModelParams(tuple(descriptor), tuple(weights), tuple(biases), input_size)

    (t,) = reader.unpack("<q")
    shapes = [a.shape for a in params.arrays()]
    m = [reader.array(shape) for shape in shapes]
    v = [reader.array(shape) for shape in shapes]
    lr, beta1, beta2, eps = reader.unpack("<4d")
    if reader.offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - reader.offset} unexpected trailing bytes")
    return params, AdamState(t=t, m=m, v=v, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()
