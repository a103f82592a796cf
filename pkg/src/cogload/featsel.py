"""One-way ANOVA feature ranking, top-k selection and Pearson correlation maps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from cogload.errors import DegenerateGroups, EmptyMatrix, KOutOfRange
from cogload.signal_core.types import BASELINE, FeatureMatrix

# SSW below this fraction of the total sum of squares counts as zero.
_SSW_REL_ZERO = 1e-24


def anova_f_columns(values: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Column-wise one-way ANOVA F statistics; ``inf`` marks perfect separation.

    values: (n, p) array; labels: (n,) group codes.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise DegenerateGroups("labels length must match number of values")
    groups, inverse = np.unique(labels, return_inverse=True)
    k, n = len(groups), x.shape[0]
    if k < 2 or n <= k:
        raise DegenerateGroups(f"need >= 2 groups and n > k, got k={k}, n={n}")

    grand = x.mean(axis=0)
    ssb = np.zeros(x.shape[1])
    ssw = np.zeros(x.shape[1])
    for g in range(k):
        xg = x[inverse == g]
        mg = xg.mean(axis=0)
        ssb += len(xg) * (mg - grand) ** 2
        ssw += ((xg - mg) ** 2).sum(axis=0)
    sst = ((x - grand) ** 2).sum(axis=0)

    f = np.zeros(x.shape[1])
    zero_w = ssw <= _SSW_REL_ZERO * sst
    regular = ~zero_w & (ssb > 0)
    f[regular] = (ssb[regular] / (k - 1)) / (ssw[regular] / (n - k))
    f[zero_w & (ssb > 0)] = np.inf
    return f


def anova_f(values: Sequence[float], labels: Sequence[int]) -> float:
    """One-way ANOVA F = (SSB/(k-1)) / (SSW/(n-k)).

    Returns ``inf`` when the groups are perfectly separated (SSW = 0, SSB > 0)
    and 0 when all group means coincide.
    """
    return float(anova_f_columns(np.asarray(values, dtype=np.float64), np.asarray(labels))[0])


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[tuple[str, float], ...]

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "feature", "f_statistic"])
            for i, (name, f) in enumerate(self.entries, 1):
                w.writerow([i, name, "inf" if np.isinf(f) else repr(float(f))])

    @classmethod
    def from_csv(cls, path: Path) -> FeatureRanking:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(tuple((r["feature"], float(r["f_statistic"])) for r in rows))


def rank_features(m: FeatureMatrix, include_baseline: bool = False) -> FeatureRanking:
    """Rank every column by ANOVA F across the row labels.

    Baseline rows are ignored unless ``include_baseline``. Sorted by F
    descending (infinite first), ties by ascending feature name.
    """
    keep = np.ones(m.n_samples, bool) if include_baseline else m.labels != BASELINE
    f = anova_f_columns(m.values[keep], m.labels[keep])
    entries = sorted(zip(m.feature_names, f.tolist()), key=lambda e: (-e[1], e[0]))
    return FeatureRanking(tuple(entries))


def select_top_k(r: FeatureRanking, k: int) -> list[str]:
    if not 1 <= k <= len(r):
        raise KOutOfRange(f"k={k} outside [1, {len(r)}]")
    return r.names[:k]


@dataclass(frozen=True)
class CorrelationMap:
    names: tuple[str, ...]
    matrix: np.ndarray

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([""] + list(self.names))
            for name, row in zip(self.names, self.matrix):
                w.writerow([name] + [repr(float(v)) for v in row])


def correlation_matrix(m: FeatureMatrix) -> CorrelationMap:
    """Pearson correlations; constant columns get 0 off-diagonal, 1 on the diagonal."""
    if m.n_samples < 2:
        raise EmptyMatrix("correlation needs at least 2 samples")
    x = m.values - m.values.mean(axis=0)
    norm = np.sqrt((x**2).sum(axis=0))
    const = norm == 0
    z = x / np.where(const, 1.0, norm)
    z[:, const] = 0.0
    c = z.T @ z
    c = np.clip(0.5 * (c + c.T), -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    return CorrelationMap(m.feature_names, c)
