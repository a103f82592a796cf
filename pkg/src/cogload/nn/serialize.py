"""Binary weight file.

Layout (all integers little-endian):

    magic      4 bytes  b"CLF1"
    version    uint32   format version (1)
    hdr_len    uint32   length of the JSON header
    header     UTF-8 JSON, sorted keys: {"config": ModelConfig, "tensors": [[name, shape], ...],
               "adam": null | {"t", "lr", "beta1", "beta2", "eps"}}
    payload    float64 LE for each tensor in header order (ModelParams.named_tensors order);
               when "adam" is present, the first-moment tensors then the second-moment
               tensors follow in the same order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from cogload.errors import CogloadError
from cogload.nn.adam import AdamState
from cogload.nn.params import ModelConfig, ModelParams, zero_params

MAGIC = b"CLF1"
VERSION = 1


def dumps(p: ModelParams, adam: AdamState | None = None) -> bytes:
    header = {
        "config": p.config.to_dict(),
        "tensors": [[name, list(t.shape)] for name, t in p.named_tensors()],
        "adam": None if adam is None else {
            "t": adam.t, "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps,
        },
    }
    hdr = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, struct.pack("<II", VERSION, len(hdr)), hdr]
    sources = [p] if adam is None else [p, adam.m, adam.v]
    for src in sources:
        for _, t in src.named_tensors():
            parts.append(np.ascontiguousarray(t, dtype="<f8").tobytes())
    return b"".join(parts)


def loads(data: bytes) -> tuple[ModelParams, AdamState | None]:
    if data[:4] != MAGIC:
        raise CogloadError("not a CLF1 weight file")
    version, hdr_len = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise CogloadError(f"unsupported weight file version {version}")
    header = json.loads(data[12 : 12 + hdr_len].decode())
    cfg = ModelConfig.from_dict(header["config"])
    template = zero_params(cfg)
    expected = [[name, list(t.shape)] for name, t in template.named_tensors()]
    if header["tensors"] != expected:
        raise CogloadError("tensor table does not match the architecture config")
    n = template.n_params()
    payload = np.frombuffer(data, dtype="<f8", offset=12 + hdr_len).astype(np.float64)
    blocks = 1 if header["adam"] is None else 3
    if payload.size != blocks * n:
        raise CogloadError(f"payload holds {payload.size} values, expected {blocks * n}")
    params = template.unflatten(payload[:n])
    if header["adam"] is None:
        return params, None
    a = header["adam"]
    state = AdamState(
        template.unflatten(payload[n : 2 * n]), template.unflatten(payload[2 * n :]),
        a["t"], a["lr"], a["beta1"], a["beta2"], a["eps"],
    )
    return params, state


def save_model(path: Path, p: ModelParams, adam: AdamState | None = None) -> None:
    Path(path).write_bytes(dumps(p, adam))


def load_model(path: Path) -> tuple[ModelParams, AdamState | None]:
    return loads(Path(path).read_bytes())
