"""Mini-batch Adam training of the CNN-LSTM."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from cogload.errors import EmptyDataset, MissingClass
from cogload.nn.adam import AdamState, adam_step
from cogload.nn.model import backward
from cogload.nn.params import ModelConfig, ModelParams, init_params
from cogload.rng import Xoshiro256, derive_seed
from cogload.signal_core.types import WindowedDataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 32
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    conv_channels: tuple[int, int] = (16, 32)
    hidden: int = 64
    lstm_layers: int = 2
    fc_sizes: tuple[int, int] = (64, 128)
    peephole: bool = True
    pool: bool = False

    def model_config(self, n_features: int, window_len: int) -> ModelConfig:
        return ModelConfig(
            n_features=n_features, window_len=window_len, conv_channels=self.conv_channels,
            hidden=self.hidden, lstm_layers=self.lstm_layers, fc_sizes=self.fc_sizes,
            peephole=self.peephole, pool=self.pool,
        )


@dataclass
class TrainResult:
    params: ModelParams
    loss_history: list[float]
    adam: AdamState


def train(ds: WindowedDataset, cfg: TrainConfig, seed: int, n_classes: int = 3) -> TrainResult:
    """Train from a seeded initialization; returns parameters and per-epoch mean loss.

    Initialization and every epoch's shuffle derive from ``seed``, so equal
    inputs give bit-identical results.
    """
    if len(ds) == 0:
        raise EmptyDataset("training set has no windows")
    counts = np.bincount(ds.labels, minlength=n_classes)
    if np.any(counts[:n_classes] == 0):
        raise MissingClass(f"training set lacks classes {np.flatnonzero(counts[:n_classes] == 0).tolist()}")

    mcfg = cfg.model_config(len(ds.feature_names), ds.window_len)
    params = init_params(mcfg, derive_seed(seed, 1))
    state = AdamState.init(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    shuffler = Xoshiro256(derive_seed(seed, 2))
    x_all = ds.as_tensor()
    y_all = ds.labels
    n = len(ds)
    history = []
    for epoch in range(cfg.epochs):
        order = shuffler.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = backward(x_all[idx], y_all[idx], params)
            params, state = adam_step(params, grads, state)
            total += loss * len(idx)
        history.append(total / n)
        if epoch % 50 == 0 or epoch == cfg.epochs - 1:
            log.info("epoch %d loss %.6f", epoch + 1, history[-1])
    return TrainResult(params, history, state)
