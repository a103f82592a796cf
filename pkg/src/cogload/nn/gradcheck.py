"""Central finite-difference check of the analytic CNN-LSTM gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from cogload.nn.model import backward, loss_only
from cogload.nn.params import ModelConfig, ModelParams, init_params
from cogload.rng import Xoshiro256

TINY_CONFIG = ModelConfig(n_features=2, window_len=4, conv_channels=(3, 4), hidden=3, fc_sizes=(8, 6))

# Denominator floor: keeps both-near-zero entries from dividing by ~0.
_REL_FLOOR = 1e-6


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    tolerance: float
    n_checked: int
    per_tensor: dict[str, float]
    dead_tensors: tuple[str, ...] = ()  # tensors whose analytic and numeric gradients are all zero

    @property
    def passed(self) -> bool:
        # A tensor with an all-zero gradient was never actually checked.
        return self.max_rel_error <= self.tolerance and not self.dead_tensors


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(|a|, |n|, 1e-6), elementwise."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), _REL_FLOOR)
    return np.abs(analytic - numeric) / denom


def numeric_gradient(x, targets, p: ModelParams, h: float = 1e-5) -> np.ndarray:
    theta = p.flatten()
    grad = np.empty_like(theta)
    for j in range(theta.size):
        old = theta[j]
        theta[j] = old + h
        up = loss_only(x, targets, p.unflatten(theta))
        theta[j] = old - h
        down = loss_only(x, targets, p.unflatten(theta))
        theta[j] = old
        grad[j] = (up - down) / (2.0 * h)
    return grad


def grad_check(
    config: ModelConfig = TINY_CONFIG,
    tolerance: float = 1e-4,
    seed: int = 0,
    batch: int = 3,
    h: float = 1e-5,
    backward_fn: Callable = backward,
) -> GradCheckReport:
    """Compare ``backward_fn`` against central differences over every parameter.

    ``backward_fn(x, targets, params) -> (loss, grads)``; swapping it lets a
    test feed in a deliberately broken gradient.
    """
    rng = Xoshiro256(seed)
    p = init_params(config, seed)
    # Nonzero biases so every bias gradient path is exercised.
    p = p.map(lambda t: t + 0.1 * rng.normal(t.shape))
    # Positive pre-activation offsets keep ReLU units live (and away from their kink)
    # so gradients reach every tensor.
    for layer in (p.conv1, p.conv2, p.fc1, p.fc2):
        layer.b += 0.5
    x = rng.normal((batch, config.n_features, config.window_len))
    targets = np.arange(batch) % config.n_classes

    _, grads = backward_fn(x, targets, p)
    analytic = grads.flatten()
    numeric = numeric_gradient(x, targets, p, h)
    err = relative_error(analytic, numeric)

    per_tensor = {}
    dead = []
    offset = 0
    worst_name, worst = "", -1.0
    for name, t in p.named_tensors():
        sl = slice(offset, offset + t.size)
        e = float(err[sl].max())
        per_tensor[name] = e
        if not (np.any(analytic[sl]) or np.any(numeric[sl])):
            dead.append(name)
        if e > worst:
            worst_name, worst = name, e
        offset += t.size
    return GradCheckReport(worst, worst_name, tolerance, int(err.size), per_tensor, tuple(dead))
