"""CSV ingestion and export for modality files and label streams.

Modality file: header row ``t,<channel>,...``; ``t`` in seconds, strictly
increasing. Labels file: header ``start_s,end_s,class`` with class in
{baseline, 0back, 1back, 2back}.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from cogload.errors import IngestError
from cogload.signal_core.types import LABEL_CODES, ChannelSeries, LabelInterval, Modality, label_name


def fmt(x: float) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(x))


def read_modality_csv(path: Path, modality: Modality, rate_hz: float) -> list[ChannelSeries]:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing modality file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        if not header or header[0] != "t":
            raise IngestError(f"{path}: first column must be 't'")
        try:
            rows = [[float(v) for v in row] for row in reader if row]
        except ValueError as exc:
            raise IngestError(f"{path}: {exc}") from None
    if not rows:
        raise IngestError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in rows):
        raise IngestError(f"{path}: ragged rows")
    data = np.array(rows, dtype=np.float64)
    t = data[:, 0]
    if len(t) > 1:
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise IngestError(f"{path}: 't' must be strictly increasing")
        mean_dt = (t[-1] - t[0]) / (len(t) - 1)
        if abs(mean_dt * rate_hz - 1.0) > 1e-6:
            raise IngestError(f"{path}: sample spacing {mean_dt:g}s disagrees with configured {rate_hz:g} Hz")
    if not np.all(np.isfinite(data)):
        raise IngestError(f"{path}: non-finite values")
    return [
        ChannelSeries(name, modality, rate_hz, data[:, j + 1].copy(), float(t[0]))
        for j, name in enumerate(header[1:])
    ]


def write_modality_csv(path: Path, channels: Sequence[ChannelSeries]) -> None:
    if not channels:
        raise IngestError("no channels to write")
    first = channels[0]
    for c in channels:
        if len(c) != len(first) or c.rate_hz != first.rate_hz or c.start_time_s != first.start_time_s:
            raise IngestError("channels in one modality file must share rate, start and length")
    t = first.times()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [c.name for c in channels])
        cols = [c.samples for c in channels]
        for i in range(len(first)):
            w.writerow([fmt(t[i])] + [fmt(col[i]) for col in cols])


def read_labels_csv(path: Path) -> list[LabelInterval]:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"missing labels file {path}")
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["start_s", "end_s", "class"]:
            raise IngestError(f"{path}: header must be start_s,end_s,class")
        for row in reader:
            cls = row["class"].strip()
            if cls not in LABEL_CODES:
                raise IngestError(f"{path}: unknown class {cls!r}")
            out.append(LabelInterval(float(row["start_s"]), float(row["end_s"]), LABEL_CODES[cls]))
    return out


def write_labels_csv(path: Path, labels: Sequence[LabelInterval]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start_s", "end_s", "class"])
        for iv in labels:
            w.writerow([fmt(iv.start_s), fmt(iv.end_s), label_name(iv.code)])
