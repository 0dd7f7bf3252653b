"""Adam optimizer with the step-decayed learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "Adam"]


@dataclass
class AdamState:
    """Per-parameter first/second moment estimates and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def like(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param))


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """One in-place Adam update with L2 weight decay added to the gradient."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ValueError(
            f"adam_step: mismatched shapes param={param.shape} grad={grad.shape} state={state.m.shape}"
        )
    g = grad + weight_decay * param if weight_decay else grad
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * g
    state.v *= beta2
    state.v += (1.0 - beta2) * (g * g)
    mhat = state.m / (1.0 - beta1 ** state.t)
    vhat = state.v / (1.0 - beta2 ** state.t)
    param -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(param.dtype, copy=False)


class Adam:
    """Adam over a set of named parameters.

    The learning rate starts at ``lr`` and is multiplied by ``lr_decay``
    once per ``lr_decay_every`` completed steps.
    """

    def __init__(
        self,
        params: Dict[str, Tensor],
        lr: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        lr_decay: float = 0.999,
        lr_decay_every: int = 2000,
    ):
        self.params = dict(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.lr_decay = float(lr_decay)
        self.lr_decay_every = int(lr_decay_every)
        self.steps_done = 0
        self.state = {name: AdamState.like(p.data) for name, p in self.params.items()}

    @property
    def effective_lr(self) -> float:
        return self.lr * self.lr_decay ** (self.steps_done // self.lr_decay_every)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        lr = self.effective_lr
        for name, p in self.params.items():
            if p.grad is None:
                continue
            adam_step(
                p.data,
                p.grad,
                self.state[name],
                lr,
                self.beta1,
                self.beta2,
                self.eps,
                self.weight_decay,
            )
        self.steps_done += 1
