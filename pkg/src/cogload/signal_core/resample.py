"""Down-sampling and multi-rate alignment onto a common fused timeline."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from cogload.errors import CogloadError, EmptySeries, NoOverlap, RateIncompatible
from cogload.signal_core.types import BASELINE, ChannelSeries, FeatureMatrix, LabelInterval, Recording

_RATE_TOL = 1e-9
_TIME_TOL = 1e-6


def downsample(s: ChannelSeries, factor: int, method: str = "mean") -> ChannelSeries:
    """Reduce a series' rate by an integer factor.

    ``mean`` averages consecutive blocks of ``factor`` samples and drops a
    trailing partial block; ``decimate`` keeps every factor-th sample starting
    with the first.
    """
    if int(factor) != factor or factor < 1:
        raise CogloadError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if len(s) < factor or len(s) == 0:
        raise EmptySeries(f"series {s.name!r} has {len(s)} samples, fewer than factor {factor}")
    if factor == 1:
        return s
    if method == "mean":
        n_blocks = len(s) // factor
        out = s.samples[: n_blocks * factor].reshape(n_blocks, factor).mean(axis=1)
    elif method == "decimate":
        out = s.samples[::factor]
    else:
        raise CogloadError(f"unknown downsample method {method!r}")
    return ChannelSeries(s.name, s.modality, s.rate_hz / factor, out, s.start_time_s)


def rate_factor(rate_hz: float, target_rate_hz: float) -> int:
    ratio = rate_hz / target_rate_hz
    factor = round(ratio)
    if factor < 1 or abs(ratio - factor) > _RATE_TOL * max(1.0, ratio):
        raise RateIncompatible(
            f"rate {rate_hz:g} Hz is not an integer multiple of target {target_rate_hz:g} Hz"
        )
    return factor


def labels_at(times: np.ndarray, intervals: Sequence[LabelInterval]) -> np.ndarray:
    """Label code for each timestamp; times outside every interval are BASELINE."""
    out = np.full(times.shape, BASELINE, dtype=np.int64)
    for iv in intervals:
        inside = (times >= iv.start_s - _TIME_TOL) & (times < iv.end_s - _TIME_TOL)
        out[inside] = iv.code
    return out


def align_and_fuse(
    rec: Recording,
    target_rate_hz: float,
    selected: Sequence[str],
    method: str = "mean",
) -> FeatureMatrix:
    """Down-sample the selected channels to ``target_rate_hz`` and stack them.

    Channels are truncated to their common overlapping span on the target grid;
    columns follow the order of ``selected``. Each fused row carries the label
    of the interval containing its start time.
    """
    if not selected:
        raise CogloadError("no channels selected for fusion")
    chans = [rec.channel(name) for name in selected]
    factors = [rate_factor(c.rate_hz, target_rate_hz) for c in chans]
    reduced = [downsample(c, f, method) for c, f in zip(chans, factors)]

    start = max(c.start_time_s for c in reduced)
    end = min(c.start_time_s + len(c) / target_rate_hz for c in reduced)
    n_rows = int(np.floor((end - start) * target_rate_hz + _TIME_TOL))
    if end <= start or n_rows < 1:
        raise NoOverlap(f"selected channels share no common time span in {rec.name or 'recording'}")

    cols = []
    for c in reduced:
        offset = (start - c.start_time_s) * target_rate_hz
        k = round(offset)
        if abs(offset - k) > _TIME_TOL * target_rate_hz + 1e-6:
            raise RateIncompatible(f"channel {c.name!r} sample grid is not aligned to the fused grid")
        cols.append(c.samples[k : k + n_rows])
    values = np.column_stack(cols)
    times = start + np.arange(n_rows) / target_rate_hz
    return FeatureMatrix(tuple(selected), values, labels_at(times, rec.labels), target_rate_hz, start)
