"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogload.errors import ShapeMismatch
from cogload.nn.params import ModelParams


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, p: ModelParams, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        return cls(p.zeros_like(), p.zeros_like(), 0, lr, beta1, beta2, eps)


def adam_step(p: ModelParams, grads: ModelParams, s: AdamState) -> tuple[ModelParams, AdamState]:
    """One Adam update; returns new parameters and state, inputs untouched."""
    shapes = [t.shape for _, t in p.named_tensors()]
    if shapes != [t.shape for _, t in grads.named_tensors()] or shapes != [t.shape for _, t in s.m.named_tensors()]:
        raise ShapeMismatch("parameter, gradient and moment shapes differ")
    t = s.t + 1
    m = s.m.zip_map(grads, lambda m_, g: s.beta1 * m_ + (1.0 - s.beta1) * g)
    v = s.v.zip_map(grads, lambda v_, g: s.beta2 * v_ + (1.0 - s.beta2) * g * g)
    c1 = 1.0 - s.beta1**t
    c2 = 1.0 - s.beta2**t
    step = m.zip_map(v, lambda m_, v_: (m_ / c1) / (np.sqrt(v_ / c2) + s.eps))
    new_p = p.zip_map(step, lambda w, d: w - s.lr * d)
    return new_p, AdamState(m, v, t, s.lr, s.beta1, s.beta2, s.eps)
