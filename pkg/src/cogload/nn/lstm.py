"""Peephole LSTM with dense gate weights and elementwise cell-state peepholes.

    i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + W_ci * c_{t-1} + b_i)
    f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + W_cf * c_{t-1} + b_f)
    o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + W_co * c_{t-1} + b_o)
    g_t = tanh(W_xc x_t + W_hc h_{t-1} + b_c)
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)

``*`` is elementwise. Every gate, the output gate included, peeks at the
previous cell state.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from cogload.errors import ShapeMismatch
from cogload.nn.params import GATES, PEEPHOLE_GATES, LstmLayerParams


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form cannot overflow
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_step(x_t, h_prev, c_prev, p: LstmLayerParams):
    """One time step; accepts vectors or (batch, dim) arrays. Returns (h_t, c_t)."""
    x_t, h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in (x_t, h_prev, c_prev))
    if x_t.shape[-1] != p.input_size or h_prev.shape[-1] != p.hidden or c_prev.shape[-1] != p.hidden:
        raise ShapeMismatch("lstm_step dimensions do not match layer parameters")
    h_t, c_t, _ = _step(x_t @ p.stacked_input().T + p.stacked_bias(), h_prev, c_prev, p, p.stacked_recurrent())
    return h_t, c_t


def _step(xproj, h_prev, c_prev, p: LstmLayerParams, w_h):
    hid = p.hidden
    a = xproj + h_prev @ w_h.T
    a_i, a_f, a_o, a_c = (a[..., k * hid : (k + 1) * hid] for k in range(4))
    if p.peephole:
        a_i = a_i + p.W_ci * c_prev
        a_f = a_f + p.W_cf * c_prev
        a_o = a_o + p.W_co * c_prev
    i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o)
    g = np.tanh(a_c)
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (i, f, o, g, tc)


def lstm_layer_forward(seq: np.ndarray, p: LstmLayerParams):
    """seq: (batch, time, input). Returns (hidden states (batch, time, hidden), cache)."""
    if seq.ndim != 3 or seq.shape[2] != p.input_size:
        raise ShapeMismatch(f"LSTM layer expects input size {p.input_size}, got shape {seq.shape}")
    batch, steps, _ = seq.shape
    hid = p.hidden
    w_h = p.stacked_recurrent()
    xproj = seq @ p.stacked_input().T + p.stacked_bias()
    h = np.zeros((batch, hid))
    c = np.zeros((batch, hid))
    hs = np.empty((batch, steps, hid))
    h_prevs = np.empty((batch, steps, hid))
    c_prevs = np.empty((batch, steps, hid))
    gates = np.empty((5, batch, steps, hid))  # i, f, o, g, tanh(c)
    for t in range(steps):
        h_prevs[:, t] = h
        c_prevs[:, t] = c
        h, c, acts = _step(xproj[:, t], h, c, p, w_h)
        for k, a in enumerate(acts):
            gates[k, :, t] = a
        hs[:, t] = h
    return hs, (seq, h_prevs, c_prevs, gates, p)


def lstm_layer_backward(dhs: np.ndarray, cache):
    """Backpropagation through time. Returns (dseq, gradient LstmLayerParams)."""
    seq, h_prevs, c_prevs, gates, p = cache
    batch, steps, hid = dhs.shape
    w_h = p.stacked_recurrent()
    i_all, f_all, o_all, g_all, tc_all = gates
    da = np.empty((batch, steps, 4 * hid))
    dh_next = np.zeros((batch, hid))
    dc_next = np.zeros((batch, hid))
    for t in range(steps - 1, -1, -1):
        i, f, o, g, tc = i_all[:, t], f_all[:, t], o_all[:, t], g_all[:, t], tc_all[:, t]
        c_prev = c_prevs[:, t]
        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        da_i = dc * g * i * (1.0 - i)
        da_f = dc * c_prev * f * (1.0 - f)
        da_o = do * o * (1.0 - o)
        da_c = dc * i * (1.0 - g * g)
        da_t = np.concatenate([da_i, da_f, da_o, da_c], axis=1)
        da[:, t] = da_t
        dc_next = dc * f
        if p.peephole:
            dc_next = dc_next + da_i * p.W_ci + da_f * p.W_cf + da_o * p.W_co
        dh_next = da_t @ w_h

    flat_da = da.reshape(-1, 4 * hid)
    dWx = flat_da.T @ seq.reshape(-1, seq.shape[2])
    dWh = flat_da.T @ h_prevs.reshape(-1, hid)
    db = flat_da.sum(axis=0)
    dseq = da @ p.stacked_input()

    kw = {}
    for k, gname in enumerate(GATES):
        rows = slice(k * hid, (k + 1) * hid)
        kw[f"W_x{gname}"] = dWx[rows]
        kw[f"W_h{gname}"] = dWh[rows]
        kw[f"b_{gname}"] = db[rows]
    if p.peephole:
        for k, gname in enumerate(PEEPHOLE_GATES):
            kw[f"W_c{gname}"] = (da[:, :, k * hid : (k + 1) * hid] * c_prevs).sum(axis=(0, 1))
    return dseq, LstmLayerParams(**kw)


def lstm_forward(x: np.ndarray, layers: Sequence[LstmLayerParams]) -> np.ndarray:
    """Stacked LSTM over a (batch, channels, time) tensor, zero initial states.

    Returns the final layer's hidden states as (batch, hidden, time).
    """
    if x.ndim != 3:
        raise ShapeMismatch("lstm_forward expects (batch, channels, time)")
    seq = x.transpose(0, 2, 1)
    for layer in layers:
        seq, _ = lstm_layer_forward(seq, layer)
    return seq.transpose(0, 2, 1)
