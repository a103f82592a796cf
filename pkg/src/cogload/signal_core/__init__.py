"""Signal data model, MBLL conversion, scaling, fusion and windowing."""

from cogload.signal_core.io import read_labels_csv, read_modality_csv, write_labels_csv, write_modality_csv
from cogload.signal_core.mbll import concentration_to_od, mbll_convert, mbll_convert_pairs, od_to_concentration
from cogload.signal_core.resample import align_and_fuse, downsample, labels_at, rate_factor
from cogload.signal_core.scaling import apply_scaler, fit_scaler
from cogload.signal_core.types import (
    BASELINE,
    CLASS_NAMES,
    LABEL_CODES,
    N_CLASSES,
    ChannelSeries,
    CognitiveClass,
    FeatureMatrix,
    LabelInterval,
    MbllGeometry,
    Modality,
    OdPair,
    Recording,
    ScalerParams,
    WindowedDataset,
)
from cogload.signal_core.windows import label_runs, segment_windows

__all__ = [
    "BASELINE", "CLASS_NAMES", "LABEL_CODES", "N_CLASSES", "ChannelSeries", "CognitiveClass", "FeatureMatrix",
    "LabelInterval", "MbllGeometry", "Modality", "OdPair", "Recording", "ScalerParams",
    "WindowedDataset", "align_and_fuse", "apply_scaler", "concentration_to_od", "downsample",
    "fit_scaler", "label_runs", "labels_at", "mbll_convert", "mbll_convert_pairs",
    "od_to_concentration", "rate_factor", "read_labels_csv", "read_modality_csv", "segment_windows",
    "write_labels_csv", "write_modality_csv",
]
