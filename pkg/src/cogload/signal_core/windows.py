"""Segmentation of labeled feature matrices into fixed-length windows."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from cogload.errors import CogloadError, WindowTooLong
from cogload.signal_core.types import BASELINE, FeatureMatrix, WindowedDataset


def label_runs(labels: np.ndarray, start: int = 0, stop: int | None = None) -> list[tuple[int, int, int]]:
    """Maximal runs of equal label as (start, stop, code), stop exclusive."""
    stop = len(labels) if stop is None else stop
    if stop <= start:
        return []
    seg = np.asarray(labels[start:stop])
    edges = np.flatnonzero(seg[1:] != seg[:-1]) + 1
    bounds = np.concatenate([[0], edges, [len(seg)]])
    return [(start + int(a), start + int(b), int(seg[a])) for a, b in zip(bounds[:-1], bounds[1:])]


def segment_windows(
    m: FeatureMatrix,
    T: int,
    stride: int,
    segments: Sequence[tuple[int, int]] | None = None,
    source: int = 0,
) -> WindowedDataset:
    """Cut windows of ``T`` rows inside each labeled run.

    ``segments`` restricts windowing to half-open row ranges (used to keep a
    train/test split from sharing rows); a run never continues across a
    segment edge. Baseline runs are skipped. Every class run yields
    ``floor((len - T) / stride) + 1`` windows.
    """
    if T < 1 or stride < 1:
        raise CogloadError("window length and stride must be >= 1")
    if m.n_samples < T:
        raise WindowTooLong(f"matrix has {m.n_samples} rows, window needs {T}")
    if segments is None:
        segments = [(0, m.n_samples)]

    starts, codes = [], []
    for seg_start, seg_stop in segments:
        for a, b, code in label_runs(m.labels, seg_start, seg_stop):
            if code == BASELINE:
                continue
            length = b - a
            if length < T:
                raise WindowTooLong(f"label run of {length} rows at row {a} is shorter than T={T}")
            count = (length - T) // stride + 1
            starts.extend(a + stride * np.arange(count))
            codes.extend([code] * count)

    starts = np.asarray(starts, dtype=np.int64)
    if len(starts):
        idx = starts[:, None] + np.arange(T)[None, :]
        windows = m.values[idx]
    else:
        windows = np.zeros((0, T, m.n_features))
    origins = np.column_stack([np.full(len(starts), source, dtype=np.int64), starts])
    return WindowedDataset(windows, np.asarray(codes, dtype=np.int64), m.feature_names, T, stride, origins)
