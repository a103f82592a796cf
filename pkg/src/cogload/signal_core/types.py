"""Domain data model: channel series, recordings, feature matrices, windows."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from cogload.errors import CogloadError, DimensionMismatch, IngestError

# Row/interval label for baseline or unlabeled time; never windowed.
BASELINE = -1

CLASS_NAMES = ("0back", "1back", "2back")
LABEL_CODES = {"baseline": BASELINE, "0back": 0, "1back": 1, "2back": 2}


class CognitiveClass(enum.IntEnum):
    ZERO_BACK = 0
    ONE_BACK = 1
    TWO_BACK = 2

    @property
    def tag(self) -> str:
        return CLASS_NAMES[self.value]


N_CLASSES = len(CognitiveClass)


class Modality(str, enum.Enum):
    SIMULATOR = "simulator"
    FNIRS_OD = "fnirs_od"
    FNIRS_HB = "fnirs_hb"
    EYE = "eye"


def label_name(code: int) -> str:
    return "baseline" if code == BASELINE else CLASS_NAMES[code]


@dataclass(frozen=True)
class ChannelSeries:
    name: str
    modality: Modality
    rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0

    def __post_init__(self):
        if not self.rate_hz > 0:
            raise CogloadError(f"channel {self.name!r}: rate_hz must be positive, got {self.rate_hz}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise CogloadError(f"channel {self.name!r}: samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise IngestError(f"channel {self.name!r}: non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "modality", Modality(self.modality))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def end_time_s(self) -> float:
        return self.start_time_s + len(self) / self.rate_hz

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self)) / self.rate_hz


class OdPair(NamedTuple):
    od_780: float
    od_850: float
    channel_id: int


@dataclass(frozen=True)
class MbllGeometry:
    """Modified Beer-Lambert constants.

    ``extinction[w][s]`` is the molar extinction coefficient at wavelength ``w``
    (0 = 780 nm, 1 = 850 nm) for species ``s`` (0 = HbO2, 1 = HbR), in
    1/(mM*cm). ``dpf`` holds one differential pathlength factor per wavelength.
    """

    extinction: np.ndarray
    path_length_cm: float
    dpf: np.ndarray
    det_tolerance: float = 1e-12

    def __post_init__(self):
        ext = np.array(self.extinction, dtype=np.float64)
        dpf = np.array(self.dpf, dtype=np.float64)
        if ext.shape != (2, 2):
            raise DimensionMismatch(f"extinction must be 2x2, got shape {ext.shape}")
        if dpf.shape != (2,):
            raise DimensionMismatch(f"dpf must have one value per wavelength, got shape {dpf.shape}")
        if not self.path_length_cm > 0:
            raise CogloadError("path_length_cm must be positive")
        if not np.all(dpf > 0):
            raise CogloadError("dpf values must be positive")
        ext.setflags(write=False)
        dpf.setflags(write=False)
        object.__setattr__(self, "extinction", ext)
        object.__setattr__(self, "dpf", dpf)

    def system_matrix(self) -> np.ndarray:
        """Matrix A with delta_OD = A @ delta_C."""
        return self.extinction * (self.path_length_cm * self.dpf)[:, None]


@dataclass(frozen=True)
class LabelInterval:
    start_s: float
    end_s: float
    code: int  # BASELINE or a CognitiveClass value

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise CogloadError(f"label interval [{self.start_s}, {self.end_s}) is empty")
        if self.code != BASELINE and self.code not in range(N_CLASSES):
            raise CogloadError(f"invalid label code {self.code}")


@dataclass(frozen=True)
class Recording:
    channels: tuple[ChannelSeries, ...]
    labels: tuple[LabelInterval, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "labels", tuple(self.labels))
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise CogloadError("duplicate channel names in recording")
        for a, b in zip(self.labels, self.labels[1:]):
            if b.start_s < a.end_s:
                raise CogloadError("label intervals must be ordered and non-overlapping")
        if self.labels and self.channels:
            lo, hi = self.labels[0].start_s, self.labels[-1].end_s
            tol = 1e-9
            for c in self.channels:
                if c.start_time_s > lo + tol or c.end_time_s < hi - tol:
                    raise CogloadError(f"channel {c.name!r} does not cover the labeled span")

    def channel(self, name: str) -> ChannelSeries:
        for c in self.channels:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]


@dataclass(frozen=True)
class ScalerParams:
    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    epsilon: float = 1e-12

    @property
    def constant(self) -> np.ndarray:
        """Boolean mask of features whose std fell below ``epsilon``."""
        return self.std < self.epsilon


@dataclass(frozen=True)
class FeatureMatrix:
    """Fused, equal-length feature columns with one label code per row.

    Rows labeled ``BASELINE`` are carried along but never windowed.
    """

    feature_names: tuple[str, ...]
    values: np.ndarray
    labels: np.ndarray
    rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.ndim != 2:
            raise DimensionMismatch("values must be a 2-D array")
        if values.shape[1] != len(self.feature_names):
            raise DimensionMismatch(
                f"{values.shape[1]} columns but {len(self.feature_names)} feature names"
            )
        if labels.shape != (values.shape[0],):
            raise DimensionMismatch("labels length must equal number of rows")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def select(self, names: Sequence[str]) -> FeatureMatrix:
        idx = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(tuple(names), self.values[:, idx], self.labels, self.rate_hz, self.start_time_s)

    def rows(self, mask_or_index) -> FeatureMatrix:
        return FeatureMatrix(
            self.feature_names, self.values[mask_or_index], self.labels[mask_or_index],
            self.rate_hz, self.start_time_s,
        )


@dataclass(frozen=True)
class WindowedDataset:
    """Fixed-length windows, shape (n_windows, window_len, n_features)."""

    windows: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    window_len: int
    stride: int
    origins: np.ndarray = field(default=None)  # (n_windows, 2): source index, start row

    def __post_init__(self):
        windows = np.asarray(self.windows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if windows.ndim != 3:
            raise DimensionMismatch("windows must be 3-D (n, T, features)")
        n, t, f = windows.shape
        if labels.shape != (n,):
            raise DimensionMismatch("one label per window required")
        if n and t != self.window_len:
            raise DimensionMismatch("window length does not match window_len")
        if f != len(self.feature_names):
            raise DimensionMismatch("feature dimension does not match feature_names")
        origins = np.zeros((n, 2), dtype=np.int64) if self.origins is None else np.asarray(self.origins, dtype=np.int64)
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "origins", origins)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return self.windows.shape[0]

    def as_tensor(self) -> np.ndarray:
        """Model input layout (batch, channels, time)."""
        return np.ascontiguousarray(self.windows.transpose(0, 2, 1))

    def flattened(self) -> np.ndarray:
        return self.windows.reshape(len(self), -1)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=N_CLASSES)

    def subset(self, index) -> WindowedDataset:
        return WindowedDataset(
            self.windows[index], self.labels[index], self.feature_names,
            self.window_len, self.stride, self.origins[index],
        )

    @staticmethod
    def concat(parts: Sequence[WindowedDataset]) -> WindowedDataset:
        if not parts:
            raise CogloadError("nothing to concatenate")
        first = parts[0]
        return WindowedDataset(
            np.concatenate([p.windows for p in parts]) if parts else first.windows,
            np.concatenate([p.labels for p in parts]),
            first.feature_names, first.window_len, first.stride,
            np.concatenate([p.origins for p in parts]),
        )
