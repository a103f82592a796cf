"""Standard scaling with population statistics."""

from __future__ import annotations

import numpy as np

from cogload.errors import DimensionMismatch, EmptyMatrix
from cogload.signal_core.types import FeatureMatrix, ScalerParams


def fit_scaler(m: FeatureMatrix, epsilon: float = 1e-12) -> ScalerParams:
    if m.n_samples < 2:
        raise EmptyMatrix(f"need at least 2 samples to fit a scaler, got {m.n_samples}")
    mean = m.values.mean(axis=0)
    std = m.values.std(axis=0)  # ddof=0
    return ScalerParams(m.feature_names, mean, std, epsilon)


def apply_scaler(m: FeatureMatrix, p: ScalerParams) -> FeatureMatrix:
    """(x - mean) / std per column; columns flagged constant map to 0."""
    if m.n_features != len(p.mean):
        raise DimensionMismatch(f"matrix has {m.n_features} features, scaler has {len(p.mean)}")
    const = p.constant
    safe_std = np.where(const, 1.0, p.std)
    out = (m.values - p.mean) / safe_std
    out[:, const] = 0.0
    return FeatureMatrix(m.feature_names, out, m.labels, m.rate_hz, m.start_time_s)
