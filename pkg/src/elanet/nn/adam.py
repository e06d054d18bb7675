"""Adam optimizer with bias correction.

Update per step t (per parameter tensor, elementwise):

    m = b1*m + (1-b1)*g          mhat = m / (1 - b1^t)
    v = b2*v + (1-b2)*g^2        vhat = v / (1 - b2^t)
    p = p - lr * mhat / (sqrt(vhat) + eps)

Defaults: lr 1e-4, b1 0.9, b2 0.999, eps 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .network import Params


@dataclass
class AdamState:
    m: Params
    v: Params
    t: int = 0
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    params: Params,
    learning_rate: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        t=0,
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(params: Params, grads: Params, state: AdamState) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update. Pure: returns fresh params and state.

    A parameter with zero gradient and zero moments is left bit-identical.
    """
    if set(grads) != set(params):
        raise ShapeMismatch("grads keys do not match params")
    for k in params:
        if grads[k].shape != params[k].shape or state.m[k].shape != params[k].shape:
            raise ShapeMismatch(f"{k}: shape mismatch between params/grads/state")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for k, p in params.items():
        g = grads[k]
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * np.square(g)
        mhat = m / (1.0 - b1**t)
        vhat = v / (1.0 - b2**t)
        # Zero gradient with zero moments gives mhat = 0 exactly, so the
        # parameter comes back bit-identical.
        new_params[k] = (p - state.learning_rate * mhat / (np.sqrt(vhat) + state.epsilon)).astype(
            p.dtype
        )
        new_m[k] = m.astype(p.dtype)
        new_v[k] = v.astype(p.dtype)
    return new_params, AdamState(
        m=new_m,
        v=new_v,
        t=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
