"""JSON experiment configuration: defaults, strict validation, typed views."""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from cogload.datagen import GenConfig, preset
from cogload.errors import ConfigInvalid
from cogload.nn import TrainConfig
from cogload.pipeline import MODALITY_SETS, PrepConfig
from cogload.signal_core import MbllGeometry

SCHEMA_VERSION = 1

HB_UNITS = {"mM": 1.0, "uM": 1e3}

# Example geometry only: arbitrary nonsingular constants, not physiological values.
# Replace with device-specific extinction coefficients and DPFs for real data.
DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "data_dir": None,
    "synthetic": {"preset": "separable", "overrides": {}},
    "rates_hz": {"simulator": 50.0, "fnirs": 10.0, "eye": 30.0},
    "geometry": {
        "extinction": [[1.0, 2.0], [2.5, 1.5]],
        "path_length_cm": 1.5,
        "dpf": [6.0, 5.5],
        "det_tolerance": 1e-12,
        "hb_unit": "uM",
    },
    "prep": {
        "fused_rate_hz": 10.0,
        "window_len": 10,
        "stride": 5,
        "test_fraction": 0.2,
        "n_blocks": 5,
        "top_k": 20,
        "downsample_method": "mean",
    },
    "modality_set": "fused_all",
    "model": {
        "epochs": 1000,
        "batch_size": 32,
        "lr": 0.001,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "conv_channels": [16, 32],
        "hidden": 64,
        "lstm_layers": 2,
        "fc_sizes": [64, 128],
        "peephole": True,
        "pool": False,
    },
    "baselines": {"knn_k": 5, "tree_max_depth": 12, "tree_min_leaf": 1, "nb_var_floor": 1e-9},
}

# Keys whose values are free-form dictionaries validated elsewhere.
_OPEN = {("synthetic", "overrides")}
_GEN_FIELDS = {f.name for f in dataclasses.fields(GenConfig)}
_RATE_FIELDS = {"simulator_rate_hz", "fnirs_rate_hz", "eye_rate_hz"}


def _merge(base: dict, user: dict, path: tuple[str, ...] = ()) -> dict:
    out = copy.deepcopy(base)
    for key, value in user.items():
        where = ".".join(path + (key,))
        if key not in base:
            raise ConfigInvalid(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and path + (key,) not in _OPEN:
            if not isinstance(value, dict):
                raise ConfigInvalid(f"config key '{where}' must be an object")
            out[key] = _merge(base[key], value, path + (key,))
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigInvalid("config must be a JSON object")
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigInvalid(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
        cfg = cls(_merge(DEFAULTS, d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Path | None) -> ExperimentConfig:
        if path is None:
            return cls.from_dict({})
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigInvalid(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def with_seed(self, seed: int | None) -> ExperimentConfig:
        if seed is None:
            return self
        raw = copy.deepcopy(self.raw)
        raw["seed"] = int(seed)
        return ExperimentConfig(raw)

    def validate(self) -> None:
        # Each accessor raises ConfigInvalid on bad values.
        if not isinstance(self.seed, int):
            raise ConfigInvalid("seed must be an integer")
        if self.raw["modality_set"] not in MODALITY_SETS:
            raise ConfigInvalid(f"modality_set must be one of {MODALITY_SETS}")
        for k, v in self.raw["rates_hz"].items():
            if not isinstance(v, (int, float)) or v <= 0:
                raise ConfigInvalid(f"rates_hz.{k} must be a positive number")
        self.geometry()
        self.prep()
        self.train()
        self.gen()
        b = self.raw["baselines"]
        if b["knn_k"] < 1 or b["tree_max_depth"] < 1 or b["tree_min_leaf"] < 1 or b["nb_var_floor"] <= 0:
            raise ConfigInvalid("baseline hyperparameters out of range")

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def modality_set(self) -> str:
        return self.raw["modality_set"]

    @property
    def baselines(self) -> dict:
        return self.raw["baselines"]

    @property
    def rates(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.raw["rates_hz"].items()}

    @property
    def hb_scale(self) -> float:
        unit = self.raw["geometry"]["hb_unit"]
        if unit not in HB_UNITS:
            raise ConfigInvalid(f"geometry.hb_unit must be one of {sorted(HB_UNITS)}")
        return HB_UNITS[unit]

    def geometry(self) -> MbllGeometry:
        g = self.raw["geometry"]
        self.hb_scale
        try:
            geom = MbllGeometry(g["extinction"], float(g["path_length_cm"]), g["dpf"], float(g["det_tolerance"]))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"geometry: {exc}") from None
        det = float(np.linalg.det(geom.extinction))
        if not abs(det) > geom.det_tolerance:
            raise ConfigInvalid(f"geometry.extinction is singular: |det| = {abs(det):.3g} <= {geom.det_tolerance:g}")
        return geom

    def prep(self) -> PrepConfig:
        try:
            return PrepConfig(**self.raw["prep"])
        except TypeError as exc:
            raise ConfigInvalid(f"prep: {exc}") from None

    def train(self) -> TrainConfig:
        m = dict(self.raw["model"])
        m["conv_channels"] = tuple(m["conv_channels"])
        m["fc_sizes"] = tuple(m["fc_sizes"])
        if m["epochs"] < 1 or m["batch_size"] < 1 or not m["lr"] > 0:
            raise ConfigInvalid("model.epochs, model.batch_size and model.lr must be positive")
        return TrainConfig(**m)

    def gen(self) -> GenConfig:
        s = self.raw["synthetic"]
        overrides = dict(s["overrides"])
        for key in overrides:
            if key in _RATE_FIELDS:
                raise ConfigInvalid(f"synthetic.overrides.{key}: set sampling rates under rates_hz")
            if key not in _GEN_FIELDS:
                raise ConfigInvalid(f"unknown config key 'synthetic.overrides.{key}'")
        rates = self.rates
        overrides.update(
            simulator_rate_hz=rates["simulator"], fnirs_rate_hz=rates["fnirs"], eye_rate_hz=rates["eye"],
        )
        return preset(s["preset"], **overrides)

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True) + "\n"


def defaults_json() -> str:
    return json.dumps(DEFAULTS, indent=2, sort_keys=True) + "\n"
