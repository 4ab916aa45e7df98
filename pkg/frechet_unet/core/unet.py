"""
The miniature U-Net: parameters, initialization, forward pass, loss and backward pass.

Architecture for base width c (c = 16 for the shipped model, input 28 x 28 x 1):

    down1:      [conv3x3 + relu] x 2 at c      -> maxpool
    down2:      [conv3x3 + relu] x 2 at 2c     -> maxpool
    bottleneck: [conv3x3 + relu] x 2 at 4c
    up2:        upsample, concat(down2), [conv3x3 + relu] x 2 at 2c
    up1:        upsample, concat(down1), [conv3x3 + relu] x 2 at c
    output:     conv1x1 + sigmoid -> 1 channel

Gradients are derived by hand for exactly this layout.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from frechet_unet.core.layers import (
    concat_channels,
    concat_channels_backward,
    conv1x1_sigmoid,
    conv1x1_sigmoid_backward,
    conv3x3_backward,
    conv3x3_forward,
    maxpool2x2,
    maxpool2x2_backward,
    relu,
    relu_backward,
    upsample2x,
    upsample2x_backward,
)
from frechet_unet.models.enums import LayerKind
from frechet_unet.models.errors import ShapeChainError, ShapeError, StaleCacheError
from frechet_unet.models.params import RngSeed

logger = logging.getLogger('frechet_unet.minicnn')

INPUT_SIZE = 28
BASE_CHANNELS = 16
BCE_CLAMP = 1e-7
STAGES = 2
CONVS_PER_STAGE = 2


@dataclass(frozen=True)
class LayerSpec:
    """Descriptor of one parameterized layer."""
    kind: LayerKind
    kh: int
    kw: int
    c_in: int
    c_out: int

    @property
    def weight_shape(self) -> Tuple[int, int, int, int]:
        return (self.kh, self.kw, self.c_in, self.c_out)


def unet_descriptor(base_channels: int = BASE_CHANNELS) -> Tuple[LayerSpec, ...]:
    """Layer descriptors of the U-Net with the given base width."""
    c1, c2, c3 = base_channels, 2 * base_channels, 4 * base_channels

    def conv(c_in: int, c_out: int) -> LayerSpec:
        return LayerSpec(LayerKind.CONV3X3_RELU, 3, 3, c_in, c_out)

    return (
        conv(1, c1), conv(c1, c1),
        conv(c1, c2), conv(c2, c2),
        conv(c2, c3), conv(c3, c3),
        conv(c3 + c2, c2), conv(c2, c2),
        conv(c2 + c1, c1), conv(c1, c1),
        LayerSpec(LayerKind.CONV1X1_SIGMOID, 1, 1, c1, 1),
    )


def check_shape_chain(descriptor: Sequence[LayerSpec]) -> int:
    """
    Verify the descriptors chain into the U-Net layout.

    Returns:
        int: The base width the descriptors correspond to
    """
    if not descriptor:
        raise ShapeChainError("empty layer descriptor")
    base = descriptor[0].c_out
    expected = unet_descriptor(base)
    if len(descriptor) != len(expected):
        raise ShapeChainError(f"expected {len(expected)} layers, found {len(descriptor)}")
    for index, (found, wanted) in enumerate(zip(descriptor, expected)):
        if found != wanted:
            raise ShapeChainError(f"layer {index}: found {found}, the chain requires {wanted}")
    return base


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    All weights and biases of the network, in descriptor order.

    Instances are never modified; optimizer steps produce new ones, so parameters can
    be shared freely across threads during inference.
    """
    descriptor: Tuple[LayerSpec, ...]
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    input_size: int = INPUT_SIZE

    def __post_init__(self):
        object.__setattr__(self, "descriptor", tuple(self.descriptor))
        check_shape_chain(self.descriptor)
        if len(self.weights) != len(self.descriptor) or len(self.biases) != len(self.descriptor):
            raise ShapeChainError("one weight and one bias array per layer required")
        if self.input_size < 4 or self.input_size % 4:
            raise ShapeError(f"input size must be a positive multiple of 4, got {self.input_size}")
        weights, biases = [], []
        for spec, w, b in zip(self.descriptor, self.weights, self.biases):
            w, b = np.array(w, copy=True), np.array(b, copy=True)
            if w.shape != spec.weight_shape or b.shape != (spec.c_out,):
                raise ShapeChainError(f"arrays {w.shape}/{b.shape} do not match {spec}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeError("parameters must be finite")
            w.setflags(write=False)
            b.setflags(write=False)
            weights.append(w)
            biases.append(b)
        object.__setattr__(self, "weights", tuple(weights))
        object.__setattr__(self, "biases", tuple(biases))

    @property
    def base_channels(self) -> int:
        return self.descriptor[0].c_out

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @property
    def size(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def arrays(self) -> List[np.ndarray]:
        """Weights and biases interleaved: w0, b0, w1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "ModelParams":
        return ModelParams(self.descriptor, tuple(arrays[0::2]), tuple(arrays[1::2]), self.input_size)

    def astype(self, dtype) -> "ModelParams":
        return self.with_arrays([a.astype(dtype) for a in self.arrays()])

    def infer(self, x: np.ndarray) -> np.ndarray:
        """Network output for one input, without keeping the cache."""
        y, _ = forward(self, x)
        return y


@dataclass
class Gradients:
    """Parameter gradients, shaped like ModelParams."""
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def arrays(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def sum(cls, items: Sequence["Gradients"], scale: float = 1.0) -> "Gradients":
        """Sum in sequence order, so the result does not depend on how items were produced."""
        weights = [np.array(w, copy=True) for w in items[0].weights]
        biases = [np.array(b, copy=True) for b in items[0].biases]
        for item in items[1:]:
            for acc, w in zip(weights, item.weights):
                acc += w
            for acc, b in zip(biases, item.biases):
                acc += b
        if scale != 1.0:
            weights = [w * scale for w in weights]
            biases = [b * scale for b in biases]
        return cls(weights, biases)


@dataclass
class ForwardCache:
    """Intermediate activations of one forward pass."""
    params: ModelParams
    conv_cols: List[np.ndarray] = field(default_factory=list)
    conv_outputs: List[np.ndarray] = field(default_factory=list)
    pool_indices: List[np.ndarray] = field(default_factory=list)
    concat_splits: List[int] = field(default_factory=list)
    head_input: Optional[np.ndarray] = None
    output: Optional[np.ndarray] = None


def init_params(seed: Union[RngSeed, int] = 0, base_channels: int = BASE_CHANNELS,
                input_size: int = INPUT_SIZE, dtype=np.float32) -> ModelParams:
    """
    Freshly initialized parameters: weights uniform on +-sqrt(6 / (fan_in + fan_out)),
    biases zero.
    """
    rng = seed if isinstance(seed, RngSeed) else RngSeed(int(seed), 0)
    generator = rng.derive("init").generator()
    descriptor = unet_descriptor(base_channels)
    weights, biases = [], []
    for spec in descriptor:
        fan_in = spec.kh * spec.kw * spec.c_in
        fan_out = spec.kh * spec.kw * spec.c_out
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(generator.uniform(-limit, limit, size=spec.weight_shape).astype(dtype))
        biases.append(np.zeros(spec.c_out, dtype=dtype))
    return ModelParams(descriptor, tuple(weights), tuple(biases), input_size)


def _conv_relu(params: ModelParams, cache: ForwardCache, layer: int, h: np.ndarray) -> np.ndarray:
    out, cols = conv3x3_forward(h, params.weights[layer], params.biases[layer])
    out = relu(out)
    cache.conv_cols.append(cols)
    cache.conv_outputs.append(out)
    return out


def forward(params: ModelParams, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """
    Run the network on one input.

    Args:
        params: Network parameters
        x: Input of shape (S, S, 1) or (S, S), S = params.input_size, entries in [0, 1]

    Returns:
        Tuple[np.ndarray, ForwardCache]: Output of shape (S, S, 1) with entries in (0, 1)
        and the activations needed by ``backward``
    """
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[:, :, None]
    size = params.input_size
    if x.shape != (size, size, 1):
        raise ShapeError(f"expected input of shape ({size}, {size}, 1), got {x.shape}")
    h = x.astype(params.dtype, copy=False)
    cache = ForwardCache(params=params)
    layer = 0
    skips = []
    for _ in range(STAGES):
        for _ in range(CONVS_PER_STAGE):
            h = _conv_relu(params, cache, layer, h)
            layer += 1
        skips.append(h)
        h, indices = maxpool2x2(h, return_indices=True)
        cache.pool_indices.append(indices)
    for _ in range(CONVS_PER_STAGE):
        h = _conv_relu(params, cache, layer, h)
        layer += 1
    for _ in range(STAGES):
        h = upsample2x(h)
        cache.concat_splits.append(h.shape[2])
        h = concat_channels(h, skips.pop())
        for _ in range(CONVS_PER_STAGE):
            h = _conv_relu(params, cache, layer, h)
            layer += 1
    cache.head_input = h
    y = conv1x1_sigmoid(h, params.weights[layer], params.biases[layer])
    cache.output = y
    return y, cache


def backward(params: ModelParams, cache: ForwardCache, loss_grad: np.ndarray) -> Gradients:
    """
    Exact gradients of every weight and bias, by reverse traversal of the forward pass.

    Args:
        params: The parameters the cache was produced with
        cache: Cache returned by ``forward``
        loss_grad: Gradient of the loss with respect to the network output

    Returns:
        Gradients: One array per weight and bias
    """
    if cache.params is not params or cache.output is None:
        raise StaleCacheError("forward cache was produced with different parameters")
    loss_grad = np.asarray(loss_grad, dtype=params.dtype)
    if loss_grad.ndim == 2:
        loss_grad = loss_grad[:, :, None]
    if loss_grad.shape != cache.output.shape:
        raise ShapeError(f"loss gradient shape {loss_grad.shape} != output shape {cache.output.shape}")

    count = len(params.descriptor)
    dweights: List[Optional[np.ndarray]] = [None] * count
    dbiases: List[Optional[np.ndarray]] = [None] * count

    layer = count - 1
    dh, dweights[layer], dbiases[layer] = conv1x1_sigmoid_backward(
        loss_grad, cache.head_input, cache.output, params.weights[layer])
    conv = len(cache.conv_outputs) - 1

    def conv_relu_back(dh):
        nonlocal layer, conv
        layer -= 1
        dh = relu_backward(dh, cache.conv_outputs[conv])
        dh, dweights[layer], dbiases[layer] = conv3x3_backward(dh, cache.conv_cols[conv], params.weights[layer])
        conv -= 1
        return dh

    skip_grads = []
    for stage in reversed(range(STAGES)):
        for _ in range(CONVS_PER_STAGE):
            dh = conv_relu_back(dh)
        d_up, d_skip = concat_channels_backward(dh, cache.concat_splits[stage])
        skip_grads.append(d_skip)
        dh = upsample2x_backward(d_up)
    for _ in range(CONVS_PER_STAGE):
        dh = conv_relu_back(dh)
    for stage in reversed(range(STAGES)):
        dh = maxpool2x2_backward(dh, cache.pool_indices[stage])
        dh = dh + skip_grads.pop()
        for _ in range(CONVS_PER_STAGE):
            dh = conv_relu_back(dh)
    return Gradients(dweights, dbiases)


def bce_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean binary cross entropy and its gradient with respect to ``pred``.

    Predictions are clamped to [1e-7, 1 - 1e-7] before taking logarithms.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    p = np.clip(pred.astype(np.float64), BCE_CLAMP, 1.0 - BCE_CLAMP)
    y = target.astype(np.float64)
    loss = float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
    grad = (p - y) / (p * (1.0 - p)) / p.size
    return loss, grad.astype(pred.dtype if np.issubdtype(pred.dtype, np.floating) else np.float64)
