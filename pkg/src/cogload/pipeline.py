"""Recording -> fused, split, scaled, feature-selected windows.

The train/test split is blocked in time: each labeled run is cut into
``n_blocks`` contiguous blocks and a seeded choice of block positions goes to
the test side for every run. Windows never cross a split edge, so overlapping
windows cannot leak rows between train and test, and every class contributes
the same share of rows to each side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cogload.errors import ConfigInvalid
from cogload.featsel import FeatureRanking, rank_features, select_top_k
from cogload.rng import Xoshiro256, derive_seed
from cogload.signal_core import (
    BASELINE,
    FeatureMatrix,
    MbllGeometry,
    Modality,
    Recording,
    ScalerParams,
    WindowedDataset,
    align_and_fuse,
    apply_scaler,
    fit_scaler,
    label_runs,
    mbll_convert,
    segment_windows,
)

MODALITY_SETS = ("simulator_only", "fused_all")

Segments = list[tuple[int, int]]


@dataclass(frozen=True)
class PrepConfig:
    fused_rate_hz: float = 10.0
    window_len: int = 10
    stride: int = 5
    test_fraction: float = 0.2
    n_blocks: int = 5
    top_k: int = 20
    downsample_method: str = "mean"

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ConfigInvalid("test_fraction must lie in (0, 1)")
        if self.n_blocks < 2:
            raise ConfigInvalid("n_blocks must be >= 2")
        if self.window_len < 1 or self.stride < 1:
            raise ConfigInvalid("window length and stride must be >= 1")
        if self.downsample_method not in ("mean", "decimate"):
            raise ConfigInvalid(f"unknown downsample method {self.downsample_method!r}")

    @property
    def n_test_blocks(self) -> int:
        return min(self.n_blocks - 1, max(1, round(self.n_blocks * self.test_fraction)))


def convert_fnirs(rec: Recording, geom: MbllGeometry, scale: float = 1.0) -> Recording:
    """Replace paired ``<ch>_780`` / ``<ch>_850`` OD channels with HbO2/HbR series."""
    od = {c.name: c for c in rec.channels if c.modality == Modality.FNIRS_OD}
    if not od:
        return rec
    out = []
    for c in rec.channels:
        if c.modality != Modality.FNIRS_OD:
            out.append(c)
        elif c.name.endswith("_780"):
            base = c.name[: -len("_780")]
            partner = od.get(f"{base}_850")
            if partner is None:
                raise ConfigInvalid(f"fNIRS channel {base!r} has no 850 nm partner")
            out.extend(mbll_convert(c, partner, geom, scale, channel=base))
        elif not c.name.endswith("_850"):
            raise ConfigInvalid(f"fNIRS OD column {c.name!r} must end in _780 or _850")
    return Recording(tuple(out), rec.labels, rec.name)


def block_split(matrices: Sequence[FeatureMatrix], cfg: PrepConfig, seed: int) -> list[tuple[Segments, Segments]]:
    """Per matrix, (train_segments, test_segments) as half-open row ranges."""
    order = Xoshiro256(derive_seed(seed, 3)).permutation(cfg.n_blocks)
    test_blocks = set(int(b) for b in order[: cfg.n_test_blocks])
    out = []
    for m in matrices:
        train, test = [], []
        for a, b, code in label_runs(m.labels):
            if code == BASELINE:
                continue
            edges = [a + (j * (b - a)) // cfg.n_blocks for j in range(cfg.n_blocks + 1)]
            for j in range(cfg.n_blocks):
                side = test if j in test_blocks else train
                lo, hi = edges[j], edges[j + 1]
                if side and side[-1][1] == lo:
                    side[-1] = (side[-1][0], hi)
                else:
                    side.append((lo, hi))
        out.append((train, test))
    return out


def _rows(segments: Segments) -> np.ndarray:
    if not segments:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([np.arange(a, b) for a, b in segments])


def stack_rows(matrices: Sequence[FeatureMatrix], segments: Sequence[Segments]) -> FeatureMatrix:
    parts = [m.rows(_rows(seg)) for m, seg in zip(matrices, segments)]
    first = matrices[0]
    return FeatureMatrix(
        first.feature_names,
        np.concatenate([p.values for p in parts]),
        np.concatenate([p.labels for p in parts]),
        first.rate_hz,
    )


def scaling_residuals(m: FeatureMatrix, scaler: ScalerParams) -> tuple[float, float]:
    """Largest |mean| and |std - 1| over non-constant columns of a scaled matrix."""
    keep = ~scaler.constant
    if not keep.any():
        return 0.0, 0.0
    v = m.values[:, keep]
    return float(np.abs(v.mean(axis=0)).max()), float(np.abs(v.std(axis=0) - 1.0).max())


@dataclass
class PreparedData:
    names: list[str]  # recording names
    matrices: list[FeatureMatrix]  # scaled, every feature
    splits: list[tuple[Segments, Segments]]
    groups: dict[str, list[str]]  # modality -> feature names
    scaler: ScalerParams
    fnirs_ranking: FeatureRanking | None
    selected_fnirs: list[str]
    cfg: PrepConfig
    seed: int
    scale_check: tuple[float, float] = field(default=(0.0, 0.0))

    def feature_names(self, modality_set: str = "fused_all") -> list[str]:
        if modality_set == "simulator_only":
            return list(self.groups["simulator"])
        if modality_set == "fused_all":
            return list(self.groups["simulator"]) + list(self.selected_fnirs) + list(self.groups["eye"])
        raise ConfigInvalid(f"unknown modality set {modality_set!r}; expected one of {MODALITY_SETS}")

    def split_matrix(self, split: str) -> FeatureMatrix:
        side = 0 if split == "train" else 1
        return stack_rows(self.matrices, [s[side] for s in self.splits])

    def windows(self, split: str, modality_set: str = "fused_all") -> WindowedDataset:
        side = {"train": 0, "test": 1}[split]
        names = self.feature_names(modality_set)
        parts = [
            segment_windows(m.select(names), self.cfg.window_len, self.cfg.stride, s[side], source=i)
            for i, (m, s) in enumerate(zip(self.matrices, self.splits))
        ]
        return WindowedDataset.concat(parts)


def channel_groups(rec: Recording) -> dict[str, list[str]]:
    groups = {"simulator": [], "fnirs": [], "eye": []}
    key = {Modality.SIMULATOR: "simulator", Modality.FNIRS_HB: "fnirs", Modality.EYE: "eye"}
    for c in rec.channels:
        if c.modality not in key:
            raise ConfigInvalid(f"channel {c.name!r} still in optical density; convert first")
        groups[key[c.modality]].append(c.name)
    return groups


def prepare(recordings: Sequence[Recording], cfg: PrepConfig, seed: int) -> PreparedData:
    """Fuse each recording, split, fit the scaler on training rows, rank fNIRS features."""
    if not recordings:
        raise ConfigInvalid("no recordings to prepare")
    groups = channel_groups(recordings[0])
    order = groups["simulator"] + groups["fnirs"] + groups["eye"]
    for rec in recordings[1:]:
        if sorted(rec.channel_names) != sorted(order):
            raise ConfigInvalid(f"recording {rec.name!r} has a different channel set")
    fused = [align_and_fuse(rec, cfg.fused_rate_hz, order, cfg.downsample_method) for rec in recordings]
    splits = block_split(fused, cfg, seed)
    train_raw = stack_rows(fused, [s[0] for s in splits])
    scaler = fit_scaler(train_raw)
    scaled = [apply_scaler(m, scaler) for m in fused]
    train_scaled = apply_scaler(train_raw, scaler)
    check = scaling_residuals(train_scaled, scaler)

    # Ranked on scaled training rows so a reload from features.csv reproduces it bit for bit.
    ranking, selected = None, []
    if groups["fnirs"]:
        ranking = rank_features(train_scaled.select(groups["fnirs"]))
        selected = select_top_k(ranking, cfg.top_k)
    return PreparedData(
        [r.name for r in recordings], scaled, splits, groups, scaler, ranking, selected, cfg, seed, check,
    )
