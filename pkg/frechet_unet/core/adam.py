"""
Adam optimizer with bias-corrected moment estimates.
"""

from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from frechet_unet.core.unet import Gradients, ModelParams
from frechet_unet.models.errors import ShapeError


@dataclass
class AdamState:
    """Step count, first/second moment estimates (parameter-shaped) and hyperparameters."""
    t: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, arrays: Sequence[np.ndarray], **hyperparameters) -> "AdamState":
        return cls(
            t=0,
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
            **hyperparameters,
        )

    @classmethod
    def for_params(cls, params: ModelParams, **hyperparameters) -> "AdamState":
        return cls.zeros(params.arrays(), **hyperparameters)


def adam_update(arrays: Sequence[np.ndarray], grads: Sequence[np.ndarray],
                state: AdamState) -> Tuple[List[np.ndarray], AdamState]:
    """
    One Adam step on plain arrays.

    Returns:
        Tuple[List[np.ndarray], AdamState]: New arrays and new state; inputs are left untouched
    """
    if not (len(arrays) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError("parameters, gradients and optimizer moments differ in length")
    t = state.t + 1
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    new_arrays, new_m, new_v = [], [], []
    for theta, g, m, v in zip(arrays, grads, state.m, state.v):
        if theta.shape != g.shape or theta.shape != m.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter shape {theta.shape}")
        g = g.astype(theta.dtype, copy=False)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        new_arrays.append((theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(theta.dtype, copy=False))
        new_m.append(m.astype(theta.dtype, copy=False))
        new_v.append(v.astype(theta.dtype, copy=False))
    return new_arrays, replace(state, t=t, m=new_m, v=new_v)


def adam_step(params: ModelParams, grads: Gradients, state: AdamState) -> Tuple[ModelParams, AdamState]:
    """One Adam step on the network parameters."""
    arrays, state = adam_update(params.arrays(), grads.arrays(), state)
    return params.with_arrays(arrays), state
