"""
Layer operations of the miniature U-Net and their exact gradients.

Tensors are numpy arrays of shape (h, w, c) in row, column, channel order. Each
forward operation has a matching ``*_backward`` that maps the gradient of the output
to gradients of the input and parameters.
"""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from frechet_unet.models.errors import ShapeError

Tensor3 = np.ndarray


def _require_tensor3(x: Tensor3, name: str = "input"):
    if x.ndim != 3:
        raise ShapeError(f"{name} must have shape (h, w, c), got {x.shape}")


def _im2col(x: Tensor3) -> np.ndarray:
    """(h*w, c*9) matrix of zero-padded 3x3 neighbourhoods, ordered (channel, row, col)."""
    h, w, c = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    windows = sliding_window_view(padded, (3, 3), axis=(0, 1))
    return windows.reshape(h * w, c * 9)


def _kernel_matrix(kernel: np.ndarray) -> np.ndarray:
    kh, kw, c_in, c_out = kernel.shape
    return kernel.transpose(2, 0, 1, 3).reshape(c_in * kh * kw, c_out)


def conv3x3_same(x: Tensor3, kernel: np.ndarray, bias: np.ndarray) -> Tensor3:
    """
    3x3 cross-correlation with one pixel of zero padding on each border.

    Args:
        x: Input of shape (h, w, c_in)
        kernel: Weights of shape (3, 3, c_in, c_out)
        bias: c_out biases

    Returns:
        Tensor3: Output of shape (h, w, c_out)
    """
    out, _ = conv3x3_forward(x, kernel, bias)
    return out


def conv3x3_forward(x: Tensor3, kernel: np.ndarray, bias: np.ndarray) -> Tuple[Tensor3, np.ndarray]:
    """Convolution output plus the im2col matrix the backward pass needs."""
    _require_tensor3(x)
    if kernel.ndim != 4 or kernel.shape[:2] != (3, 3):
        raise ShapeError(f"kernel must have shape (3, 3, c_in, c_out), got {kernel.shape}")
    if kernel.shape[2] != x.shape[2]:
        raise ShapeError(f"channel mismatch: input has {x.shape[2]}, kernel expects {kernel.shape[2]}")
    h, w, _ = x.shape
    cols = _im2col(x)
    out = cols @ _kernel_matrix(kernel) + bias
    return out.reshape(h, w, kernel.shape[3]), cols


def conv3x3_backward(dy: Tensor3, cols: np.ndarray, kernel: np.ndarray):
    """
    Gradients of a same-padded 3x3 convolution.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: Input, kernel and bias gradients
    """
    h, w, c_out = dy.shape
    c_in = kernel.shape[2]
    dy_flat = dy.reshape(h * w, c_out)
    dkernel = (cols.T @ dy_flat).reshape(c_in, 3, 3, c_out).transpose(1, 2, 0, 3)
    dbias = dy_flat.sum(axis=0)
    flipped = kernel[::-1, ::-1].transpose(3, 0, 1, 2).reshape(c_out * 9, c_in)
    dx = (_im2col(dy) @ flipped).reshape(h, w, c_in)
    return dx, np.ascontiguousarray(dkernel), dbias


def relu(x: Tensor3) -> Tensor3:
    return np.maximum(x, 0)


def relu_backward(dy: Tensor3, out: Tensor3) -> Tensor3:
    return dy * (out > 0)


def maxpool2x2(x: Tensor3, return_indices: bool = False):
    """
    Per-channel max over disjoint 2x2 blocks.

    With ``return_indices`` the position of each maximum inside its block (0..3, row
    major, first one on ties) is returned as well, for the backward pass.
    """
    _require_tensor3(x)
    h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"max pooling needs even spatial dimensions, got {h}x{w}")
    blocks = x.reshape(h // 2, 2, w // 2, 2, c).transpose(0, 2, 4, 1, 3).reshape(h // 2, w // 2, c, 4)
    indices = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, indices[..., None], axis=3)[..., 0]
    if return_indices:
        return out, indices
    return out


def maxpool2x2_backward(dy: Tensor3, indices: np.ndarray) -> Tensor3:
    """Route each output gradient to the recorded argmax of its block."""
    hh, ww, c = dy.shape
    blocks = np.zeros((hh, ww, c, 4), dtype=dy.dtype)
    np.put_along_axis(blocks, indices[..., None], dy[..., None], axis=3)
    return blocks.reshape(hh, ww, c, 2, 2).transpose(0, 3, 1, 4, 2).reshape(hh * 2, ww * 2, c)


def upsample2x(x: Tensor3) -> Tensor3:
    """Nearest-neighbour upsampling: every value becomes a 2x2 block."""
    _require_tensor3(x)
    return x.repeat(2, axis=0).repeat(2, axis=1)


def upsample2x_backward(dy: Tensor3) -> Tensor3:
    h, w, c = dy.shape
    return dy.reshape(h // 2, 2, w // 2, 2, c).sum(axis=(1, 3))


def concat_channels(a: Tensor3, b: Tensor3) -> Tensor3:
    """Channels of ``a`` followed by channels of ``b``."""
    _require_tensor3(a, "first input")
    _require_tensor3(b, "second input")
    if a.shape[:2] != b.shape[:2]:
        raise ShapeError(f"spatial mismatch in concatenation: {a.shape[:2]} vs {b.shape[:2]}")
    return np.concatenate([a, b], axis=2)


def concat_channels_backward(dy: Tensor3, split: int) -> Tuple[Tensor3, Tensor3]:
    return dy[:, :, :split], dy[:, :, split:]


def sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(z.dtype, copy=False)


def conv1x1_sigmoid(x: Tensor3, kernel: np.ndarray, bias) -> Tensor3:
    """
    Per-pixel linear combination of channels followed by the logistic sigmoid.

    Args:
        x: Input of shape (h, w, c_in)
        kernel: Weights of shape (1, 1, c_in, 1)
        bias: Scalar bias (or a one-element array)

    Returns:
        Tensor3: Output of shape (h, w, 1) with entries in (0, 1)
    """
    _require_tensor3(x)
    h, w, c_in = x.shape
    weights = np.asarray(kernel).reshape(-1, 1)
    if weights.shape[0] != c_in:
        raise ShapeError(f"channel mismatch: input has {c_in}, kernel expects {weights.shape[0]}")
    z = x.reshape(h * w, c_in) @ weights.astype(x.dtype, copy=False) + np.asarray(bias, dtype=x.dtype).reshape(-1)
    return sigmoid(z).reshape(h, w, 1)


def conv1x1_sigmoid_backward(dy: Tensor3, x: Tensor3, y: Tensor3, kernel: np.ndarray):
    """
    Gradients of the final 1x1 convolution + sigmoid.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: Input, kernel and bias gradients
    """
    h, w, c_in = x.shape
    dz = (dy * y * (1 - y)).reshape(h * w, 1)
    dkernel = (x.reshape(h * w, c_in).T @ dz).reshape(kernel.shape)
    dbias = dz.sum(axis=0)
    dx = (dz @ kernel.reshape(c_in, 1).T).reshape(h, w, c_in)
    return dx, dkernel, dbias
