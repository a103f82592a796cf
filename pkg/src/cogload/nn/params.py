"""Architecture configuration and parameter containers for the CNN-LSTM."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from cogload.errors import ShapeMismatch
from cogload.rng import Xoshiro256

GATES = ("i", "f", "o", "c")
PEEPHOLE_GATES = ("i", "f", "o")


@dataclass(frozen=True)
class ModelConfig:
    n_features: int
    window_len: int
    conv_channels: tuple[int, int] = (16, 32)
    kernel: int = 3
    padding: int = 1
    hidden: int = 64
    lstm_layers: int = 2
    fc_sizes: tuple[int, int] = (64, 128)
    n_classes: int = 3
    peephole: bool = True
    pool: bool = False

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "fc_sizes", tuple(int(c) for c in self.fc_sizes))
        if len(self.conv_channels) != 2 or len(self.fc_sizes) != 2:
            raise ShapeMismatch("architecture has exactly two conv and two fully connected layers")
        if self.lstm_layers < 1:
            raise ShapeMismatch("need at least one LSTM layer")
        if self.seq_len < 1:
            raise ShapeMismatch(f"window_len={self.window_len} leaves no time steps after convolution")

    @property
    def seq_len(self) -> int:
        """Time steps reaching the LSTM."""
        t = self.window_len
        for _ in range(2):
            t = t + 2 * self.padding - self.kernel + 1
        return t // 2 if self.pool else t

    @property
    def flat_size(self) -> int:
        return self.seq_len * self.hidden

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        d["fc_sizes"] = list(self.fc_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        return cls(**d)


@dataclass
class ConvLayerParams:
    W: np.ndarray  # (out_ch, in_ch, kernel)
    b: np.ndarray  # (out_ch,)


@dataclass
class DenseParams:
    W: np.ndarray  # (out, in)
    b: np.ndarray


@dataclass
class LstmLayerParams:
    W_xi: np.ndarray
    W_xf: np.ndarray
    W_xo: np.ndarray
    W_xc: np.ndarray
    W_hi: np.ndarray
    W_hf: np.ndarray
    W_ho: np.ndarray
    W_hc: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    # Elementwise peephole weights; None when peepholes are disabled.
    W_ci: np.ndarray | None = None
    W_cf: np.ndarray | None = None
    W_co: np.ndarray | None = None

    @property
    def hidden(self) -> int:
        return self.b_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xi.shape[1]

    @property
    def peephole(self) -> bool:
        return self.W_ci is not None

    def field_names(self) -> list[str]:
        names = [f"W_x{g}" for g in GATES] + [f"W_h{g}" for g in GATES]
        if self.peephole:
            names += [f"W_c{g}" for g in PEEPHOLE_GATES]
        return names + [f"b_{g}" for g in GATES]

    def stacked_input(self) -> np.ndarray:
        return np.concatenate([self.W_xi, self.W_xf, self.W_xo, self.W_xc])

    def stacked_recurrent(self) -> np.ndarray:
        return np.concatenate([self.W_hi, self.W_hf, self.W_ho, self.W_hc])

    def stacked_bias(self) -> np.ndarray:
        return np.concatenate([self.b_i, self.b_f, self.b_o, self.b_c])


@dataclass
class ModelParams:
    config: ModelConfig
    conv1: ConvLayerParams
    conv2: ConvLayerParams
    lstm: list[LstmLayerParams]
    fc1: DenseParams
    fc2: DenseParams
    head: DenseParams

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        """All tensors in the fixed serialization order."""
        for lname in ("conv1", "conv2"):
            layer = getattr(self, lname)
            yield f"{lname}.W", layer.W
            yield f"{lname}.b", layer.b
        for li, layer in enumerate(self.lstm):
            for fname in layer.field_names():
                yield f"lstm{li}.{fname}", getattr(layer, fname)
        for lname in ("fc1", "fc2", "head"):
            layer = getattr(self, lname)
            yield f"{lname}.W", layer.W
            yield f"{lname}.b", layer.b

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> ModelParams:
        def conv(p):
            return ConvLayerParams(fn(p.W), fn(p.b))

        def dense(p):
            return DenseParams(fn(p.W), fn(p.b))

        def lstm(p):
            kw = {f.name: (None if getattr(p, f.name) is None else fn(getattr(p, f.name)))
                  for f in dataclasses.fields(p)}
            return LstmLayerParams(**kw)

        return ModelParams(
            self.config, conv(self.conv1), conv(self.conv2), [lstm(p) for p in self.lstm],
            dense(self.fc1), dense(self.fc2), dense(self.head),
        )

    def zip_map(self, other: ModelParams, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> ModelParams:
        theirs = iter(t for _, t in other.named_tensors())
        ours = {id(t): t for _, t in self.named_tensors()}
        pairs = {id(t): next(theirs) for _, t in self.named_tensors()}
        return self.map(lambda t: fn(ours[id(t)], pairs[id(t)]))

    def copy(self) -> ModelParams:
        return self.map(np.copy)

    def zeros_like(self) -> ModelParams:
        return self.map(np.zeros_like)

    def n_params(self) -> int:
        return sum(t.size for _, t in self.named_tensors())

    def flatten(self) -> np.ndarray:
        return np.concatenate([t.ravel() for _, t in self.named_tensors()])

    def unflatten(self, vec: np.ndarray) -> ModelParams:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n_params():
            raise ShapeMismatch(f"vector has {vec.size} entries, model has {self.n_params()}")
        slices = {}
        offset = 0
        for _, t in self.named_tensors():
            slices[id(t)] = (offset, t.size)
            offset += t.size

        def take(t):
            start, size = slices[id(t)]
            return vec[start : start + size].reshape(t.shape).copy()

        return self.map(take)


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) list; identical to ``named_tensors`` order."""
    return [(name, t.shape) for name, t in zero_params(cfg).named_tensors()]


def _build(cfg: ModelConfig, make: Callable[[str, tuple[int, ...], int], np.ndarray]) -> ModelParams:
    c1, c2 = cfg.conv_channels
    k = cfg.kernel
    conv1 = ConvLayerParams(make("W", (c1, cfg.n_features, k), cfg.n_features * k), make("b", (c1,), 0))
    conv2 = ConvLayerParams(make("W", (c2, c1, k), c1 * k), make("b", (c2,), 0))
    layers = []
    in_size = c2
    h = cfg.hidden
    for _ in range(cfg.lstm_layers):
        kw = {}
        for g in GATES:
            kw[f"W_x{g}"] = make("W", (h, in_size), in_size)
        for g in GATES:
            kw[f"W_h{g}"] = make("W", (h, h), h)
        if cfg.peephole:
            for g in PEEPHOLE_GATES:
                kw[f"W_c{g}"] = make("peep", (h,), h)
        for g in GATES:
            kw[f"b_{g}"] = make("forget_bias" if g == "f" else "b", (h,), 0)
        layers.append(LstmLayerParams(**kw))
        in_size = h
    f1, f2 = cfg.fc_sizes
    fc1 = DenseParams(make("W", (f1, cfg.flat_size), cfg.flat_size), make("b", (f1,), 0))
    fc2 = DenseParams(make("W", (f2, f1), f1), make("b", (f2,), 0))
    head = DenseParams(make("W", (cfg.n_classes, f2), f2), make("b", (cfg.n_classes,), 0))
    return ModelParams(cfg, conv1, conv2, layers, fc1, fc2, head)


def zero_params(cfg: ModelConfig) -> ModelParams:
    return _build(cfg, lambda kind, shape, fan_in: np.zeros(shape))


def init_params(cfg: ModelConfig, seed: int, forget_bias: float = 1.0) -> ModelParams:
    """Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases, forget bias +1."""
    rng = Xoshiro256(seed)

    def make(kind, shape, fan_in):
        if kind == "b":
            return np.zeros(shape)
        if kind == "forget_bias":
            return np.full(shape, float(forget_bias))
        bound = np.sqrt(1.0 / fan_in)
        return rng.uniform_range(-bound, bound, shape)

    return _build(cfg, make)
