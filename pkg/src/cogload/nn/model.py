"""CNN-LSTM forward pass, loss, reverse-mode gradients and prediction.

conv1 -> ReLU -> conv2 -> ReLU [-> maxpool(2)] -> LSTM x L -> flatten(time, hidden)
-> fc1 -> ReLU -> fc2 -> ReLU -> head (raw logits)
"""

from __future__ import annotations

import numpy as np

from cogload.errors import InvalidClass, ShapeMismatch
from cogload.nn import layers as L
from cogload.nn.lstm import lstm_layer_backward, lstm_layer_forward
from cogload.nn.params import ModelParams


def _check_input(x: np.ndarray, p: ModelParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    cfg = p.config
    if x.ndim != 3 or x.shape[1] != cfg.n_features or x.shape[2] != cfg.window_len:
        raise ShapeMismatch(
            f"expected input (batch, {cfg.n_features}, {cfg.window_len}), got {x.shape}"
        )
    return x


def _forward(x: np.ndarray, p: ModelParams):
    cfg = p.config
    cache = {}
    a1, cache["conv1"] = L.conv1d_forward(x, p.conv1, cfg.padding)
    r1 = L.relu(a1)
    a2, cache["conv2"] = L.conv1d_forward(r1, p.conv2, cfg.padding)
    r2 = L.relu(a2)
    cache["a1"], cache["a2"] = a1, a2
    if cfg.pool:
        r2, cache["pool"] = L.maxpool1d_forward(r2, 2)
    seq = r2.transpose(0, 2, 1)
    cache["lstm"] = []
    for layer in p.lstm:
        seq, lc = lstm_layer_forward(seq, layer)
        cache["lstm"].append(lc)
    flat = seq.reshape(seq.shape[0], -1)
    z1 = L.dense_forward(flat, p.fc1)
    h1 = L.relu(z1)
    z2 = L.dense_forward(h1, p.fc2)
    h2 = L.relu(z2)
    logits = L.dense_forward(h2, p.head)
    cache.update(flat=flat, z1=z1, h1=h1, z2=z2, h2=h2, seq_shape=seq.shape)
    return logits, cache


def forward(x: np.ndarray, p: ModelParams) -> np.ndarray:
    """Raw logits of shape (batch, n_classes) for input (batch, features, time)."""
    logits, _ = _forward(_check_input(x, p), p)
    return logits


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    n, k = logits.shape
    if targets.shape != (n,) or np.any((targets < 0) | (targets >= k)):
        raise InvalidClass(f"targets must be {n} class indices in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z - log_norm[:, None]
    loss = float(-log_p[np.arange(n), targets].mean())
    grad = np.exp(log_p)
    grad[np.arange(n), targets] -= 1.0
    return loss, grad / n


def backward(x: np.ndarray, targets, p: ModelParams) -> tuple[float, ModelParams]:
    """Mean cross-entropy loss and exact gradients for every parameter."""
    x = _check_input(x, p)
    cfg = p.config
    logits, cache = _forward(x, p)
    loss, dlogits = softmax_cross_entropy(logits, targets)

    dh2, g_head = L.dense_backward(dlogits, cache["h2"], p.head)
    dz2 = L.relu_backward(dh2, cache["z2"])
    dh1, g_fc2 = L.dense_backward(dz2, cache["h1"], p.fc2)
    dz1 = L.relu_backward(dh1, cache["z1"])
    dflat, g_fc1 = L.dense_backward(dz1, cache["flat"], p.fc1)

    dseq = dflat.reshape(cache["seq_shape"])
    g_lstm = [None] * len(p.lstm)
    for li in range(len(p.lstm) - 1, -1, -1):
        dseq, g_lstm[li] = lstm_layer_backward(dseq, cache["lstm"][li])

    dr2 = dseq.transpose(0, 2, 1)
    if cfg.pool:
        dr2 = L.maxpool1d_backward(dr2, cache["pool"])
    da2 = L.relu_backward(dr2, cache["a2"])
    dr1, g_conv2 = L.conv1d_backward(da2, cache["conv2"])
    da1 = L.relu_backward(dr1, cache["a1"])
    _, g_conv1 = L.conv1d_backward(da1, cache["conv1"])

    return loss, ModelParams(cfg, g_conv1, g_conv2, g_lstm, g_fc1, g_fc2, g_head)


def loss_only(x: np.ndarray, targets, p: ModelParams) -> float:
    loss, _ = softmax_cross_entropy(forward(x, p), targets)
    return loss


def predict(p: ModelParams, windows: np.ndarray, batch_size: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Class predictions (argmax, lowest index on ties) and probability rows."""
    x = _check_input(windows, p)
    probs = np.concatenate(
        [softmax(forward(x[i : i + batch_size], p)) for i in range(0, max(len(x), 1), batch_size)]
    ) if len(x) else np.zeros((0, p.config.n_classes))
    return probs.argmax(axis=1), probs
