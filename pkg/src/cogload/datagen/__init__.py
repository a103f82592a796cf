"""Deterministic synthetic n-back driving data."""

from __future__ import annotations

from cogload.datagen.generator import (
    EYE_CHANNELS,
    PRESETS,
    SIMULATOR_CHANNELS,
    GenConfig,
    SyntheticRecording,
    gen_recording,
    gen_recordings,
    preset,
    to_optical_density,
)
from cogload.datagen.nback import (
    RESPONSE_WINDOW_S,
    STIMULUS_S,
    TRIAL_SPACING_S,
    NbackBlock,
    NbackTrial,
    Response,
    gen_nback_stimuli,
    nback_targets,
)


def gen_dataset(cfg: GenConfig, seed: int, prep=None, modality_set: str = "fused_all"):
    """Generate, fuse, scale, window and split; returns (train, test) WindowedDatasets."""
    from cogload.pipeline import PrepConfig, prepare

    prep = prep or PrepConfig()
    data = prepare([s.recording for s in gen_recordings(cfg, seed)], prep, seed)
    return data.windows("train", modality_set), data.windows("test", modality_set)


__all__ = [
    "EYE_CHANNELS", "PRESETS", "RESPONSE_WINDOW_S", "SIMULATOR_CHANNELS", "STIMULUS_S",
    "TRIAL_SPACING_S", "GenConfig", "NbackBlock", "NbackTrial", "Response", "SyntheticRecording",
    "gen_dataset", "gen_nback_stimuli", "gen_recording", "gen_recordings", "nback_targets",
    "preset", "to_optical_density",
]
