"""Convolution, activation, pooling and dense primitives with hand-written backward passes.

Tensors use the (batch, channels, time) layout in float64.
"""

from __future__ import annotations

import numpy as np

from cogload.errors import ShapeMismatch
from cogload.nn.params import ConvLayerParams, DenseParams


def _im2col(xp: np.ndarray, kernel: int, t_out: int) -> np.ndarray:
    # (B, C, Tp) -> (B, t_out, C*kernel), column order (c, k)
    cols = np.stack([xp[:, :, k : k + t_out] for k in range(kernel)], axis=-1)  # (B, C, t_out, K)
    return cols.transpose(0, 2, 1, 3).reshape(xp.shape[0], t_out, -1)


def conv1d_forward(x: np.ndarray, p: ConvLayerParams, padding: int = 1):
    """Valid cross-correlation over time after symmetric zero padding.

    out[b, o, t] = sum_{c,k} W[o, c, k] * xpad[b, c, t + k] + b[o]
    Returns (out, cache). The activation is applied separately.
    """
    if x.ndim != 3:
        raise ShapeMismatch(f"conv input must be (batch, channels, time), got {x.shape}")
    out_ch, in_ch, kernel = p.W.shape
    if x.shape[1] != in_ch:
        raise ShapeMismatch(f"conv expects {in_ch} input channels, got {x.shape[1]}")
    t_out = x.shape[2] + 2 * padding - kernel + 1
    if t_out < 1:
        raise ShapeMismatch("convolution output would be empty")
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    cols = _im2col(xp, kernel, t_out)
    out = cols @ p.W.reshape(out_ch, -1).T + p.b  # (B, t_out, O)
    return out.transpose(0, 2, 1), (cols, x.shape, padding, p.W)


def conv1d_backward(dout: np.ndarray, cache):
    cols, x_shape, padding, W = cache
    out_ch, in_ch, kernel = W.shape
    batch, _, t_in = x_shape
    d = dout.transpose(0, 2, 1)  # (B, t_out, O)
    t_out = d.shape[1]
    dW = (d.reshape(-1, out_ch).T @ cols.reshape(-1, in_ch * kernel)).reshape(W.shape)
    db = d.sum(axis=(0, 1))
    dcols = (d @ W.reshape(out_ch, -1)).reshape(batch, t_out, in_ch, kernel)
    dxp = np.zeros((batch, in_ch, t_in + 2 * padding))
    for k in range(kernel):
        dxp[:, :, k : k + t_out] += dcols[:, :, :, k].transpose(0, 2, 1)
    dx = dxp[:, :, padding : padding + t_in] if padding else dxp
    return dx, ConvLayerParams(dW, db)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def maxpool1d_forward(x: np.ndarray, size: int = 2):
    """Non-overlapping max pool over time; a trailing partial window is dropped."""
    batch, ch, t = x.shape
    t_out = t // size
    if t_out < 1:
        raise ShapeMismatch("pooling window longer than sequence")
    blocks = x[:, :, : t_out * size].reshape(batch, ch, t_out, size)
    arg = blocks.argmax(axis=-1)  # first maximum wins
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, (arg, x.shape, size)


def maxpool1d_backward(dout: np.ndarray, cache) -> np.ndarray:
    arg, x_shape, size = cache
    batch, ch, t = x_shape
    t_out = dout.shape[2]
    dblocks = np.zeros((batch, ch, t_out, size))
    np.put_along_axis(dblocks, arg[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape)
    dx[:, :, : t_out * size] = dblocks.reshape(batch, ch, t_out * size)
    return dx


def dense_forward(x: np.ndarray, p: DenseParams) -> np.ndarray:
    if x.shape[-1] != p.W.shape[1]:
        raise ShapeMismatch(f"dense layer expects {p.W.shape[1]} inputs, got {x.shape[-1]}")
    return x @ p.W.T + p.b


def dense_backward(dout: np.ndarray, x: np.ndarray, p: DenseParams):
    return dout @ p.W, DenseParams(dout.T @ x, dout.sum(axis=0))
