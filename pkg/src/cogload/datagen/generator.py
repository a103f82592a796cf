"""Synthetic multimodal recordings built around an n-back block.

Each recording is one subject performing one n-back level: a baseline rest
interval followed by ``n_trials`` trials of 3.5 s. Class effects are applied
only during the task interval:

* simulator: car speed mean shifts by ``speed_delta[level]``; other telemetry is
  AR(1) noise, with yaw rate coupled to steering angle;
* fNIRS: designated channels get a boxcar (task on/off) passed through a
  first-order low-pass, scaled by ``hbo2_delta[level]`` for HbO2 and by
  ``-hbr_ratio * hbo2_delta[level]`` for HbR; all channels carry AR(1) noise;
* eye: fixation duration shifts by ``fixation_delta[level]``; gaze x/y are
  tanh-bounded AR(1) series.

No per-recording random offsets are drawn, so with zero effects the classes
are statistically identical.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from cogload.datagen.nback import TRIAL_SPACING_S, NbackBlock, gen_nback_stimuli
from cogload.errors import ConfigInvalid, InvalidLevel
from cogload.rng import Xoshiro256, derive_seed
from cogload.signal_core import (
    BASELINE,
    ChannelSeries,
    LabelInterval,
    MbllGeometry,
    Modality,
    Recording,
    concentration_to_od,
)

SIMULATOR_CHANNELS = (
    "car_speed", "ang_vel_x", "ang_vel_y", "ang_vel_z", "lin_acc_x", "lin_acc_y", "lin_acc_z",
    "steering_angle", "throttle", "brake",
)
EYE_CHANNELS = ("fixation_duration", "gaze_x", "gaze_y")

_MODALITY_STREAM = {"simulator": 1, "fnirs": 2, "eye": 3, "trials": 4}


@dataclass(frozen=True)
class GenConfig:
    n_subjects: int = 1
    n_trials: int = 40
    baseline_s: float = 20.0
    target_rate: float = 0.33
    simulator_rate_hz: float = 50.0
    fnirs_rate_hz: float = 10.0
    eye_rate_hz: float = 30.0
    n_fnirs_channels: int = 48
    significant_channels: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7)
    # per-level (0-, 1-, 2-back) effects
    speed_delta_kmh: tuple[float, float, float] = (0.0, -8.0, -16.0)
    hbo2_delta_um: tuple[float, float, float] = (0.0, 1.0, 2.0)
    fixation_delta_s: tuple[float, float, float] = (0.0, 0.06, 0.12)
    hbr_ratio: float = 0.3
    base_speed_kmh: float = 100.0
    base_fixation_s: float = 0.3
    # noise standard deviations
    speed_noise_kmh: float = 2.0
    telemetry_noise: float = 1.0
    fnirs_noise_um: float = 0.4
    fixation_noise_s: float = 0.04
    gaze_noise: float = 0.5
    ar_coefficient: float = 0.8
    hemo_tau_s: float = 4.0

    def __post_init__(self):
        for name in ("speed_delta_kmh", "hbo2_delta_um", "fixation_delta_s", "significant_channels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n_subjects < 1 or self.n_trials < 3:
            raise ConfigInvalid("need n_subjects >= 1 and n_trials >= 3")
        for name in ("simulator_rate_hz", "fnirs_rate_hz", "eye_rate_hz", "hemo_tau_s"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"{name} must be positive")
        if not 0 < self.target_rate < 1:
            raise ConfigInvalid("target_rate must lie in (0, 1)")
        if self.baseline_s < 0:
            raise ConfigInvalid("baseline_s must be >= 0")
        for name in ("speed_delta_kmh", "hbo2_delta_um", "fixation_delta_s"):
            vals = getattr(self, name)
            if len(vals) != 3 or not all(np.isfinite(vals)):
                raise ConfigInvalid(f"{name} needs three finite per-level values")
        if any(not 0 <= c < self.n_fnirs_channels for c in self.significant_channels):
            raise ConfigInvalid("significant_channels must index existing fNIRS channels")
        if not 0 <= self.ar_coefficient < 1:
            raise ConfigInvalid("ar_coefficient must lie in [0, 1)")
        for name in ("speed_noise_kmh", "telemetry_noise", "fnirs_noise_um", "fixation_noise_s", "gaze_noise"):
            if getattr(self, name) < 0:
                raise ConfigInvalid(f"{name} must be >= 0")

    @property
    def task_s(self) -> float:
        return self.n_trials * TRIAL_SPACING_S

    @property
    def duration_s(self) -> float:
        return self.baseline_s + self.task_s

    def replace(self, **kw) -> GenConfig:
        return dataclasses.replace(self, **kw)


PRESETS: dict[str, GenConfig] = {
    # Large effects, low noise: every modality separates all three levels.
    "separable": GenConfig(
        speed_delta_kmh=(0.0, -10.0, -20.0), hbo2_delta_um=(0.0, 2.0, 4.0),
        fixation_delta_s=(0.0, 0.1, 0.2), speed_noise_kmh=1.5, fnirs_noise_um=0.3,
    ),
    # No class effects anywhere; two subjects so there are > 600 windows.
    "null": GenConfig(
        n_subjects=2, speed_delta_kmh=(0.0, 0.0, 0.0), hbo2_delta_um=(0.0, 0.0, 0.0),
        fixation_delta_s=(0.0, 0.0, 0.0),
    ),
    # Driving separates 0-back from the rest; only physiology separates 1- from 2-back.
    "fusion_split": GenConfig(
        speed_delta_kmh=(0.0, -10.0, -10.0), hbo2_delta_um=(0.0, 0.0, 3.0),
        fixation_delta_s=(0.0, 0.0, 0.15), speed_noise_kmh=1.5, fnirs_noise_um=0.3,
    ),
}


def preset(name: str, **overrides) -> GenConfig:
    if name not in PRESETS:
        raise ConfigInvalid(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name].replace(**overrides) if overrides else PRESETS[name]


def ar1(eps: np.ndarray, phi: float) -> np.ndarray:
    """Unit-variance stationary AR(1) along axis 0 driven by standard normals."""
    out = np.empty_like(eps)
    out[0] = eps[0]
    gain = np.sqrt(1.0 - phi * phi)
    for t in range(1, len(eps)):
        out[t] = phi * out[t - 1] + gain * eps[t]
    return out


def hemodynamic_response(times: np.ndarray, onset_s: float, end_s: float, tau_s: float) -> np.ndarray:
    """Boxcar over [onset, end) smoothed by an exact first-order low-pass."""
    box = ((times >= onset_s) & (times < end_s)).astype(np.float64)
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    alpha = 1.0 - np.exp(-dt / tau_s)
    out = np.empty_like(box)
    acc = 0.0
    for t, b in enumerate(box):
        acc += alpha * (b - acc)
        out[t] = acc
    return out


def _n_samples(duration_s: float, rate_hz: float) -> int:
    return int(np.ceil(duration_s * rate_hz - 1e-9))


def recording_seed(seed: int, subject: int, level: int) -> int:
    return derive_seed(seed, subject, level)


@dataclass(frozen=True)
class SyntheticRecording:
    recording: Recording
    block: NbackBlock
    subject: int
    level: int


def gen_recording(level: int, cfg: GenConfig, seed: int, subject: int = 0) -> SyntheticRecording:
    """One subject's recording for one n-back level, with hemoglobin fNIRS channels."""
    if level not in (0, 1, 2):
        raise InvalidLevel(f"n-back level must be 0, 1 or 2, got {level}")
    rseed = recording_seed(seed, subject, level)
    onset, end = cfg.baseline_s, cfg.duration_s
    phi = cfg.ar_coefficient

    def stream(name: str) -> Xoshiro256:
        return Xoshiro256(derive_seed(rseed, _MODALITY_STREAM[name]))

    channels: list[ChannelSeries] = []

    # simulator
    n = _n_samples(end, cfg.simulator_rate_hz)
    t = np.arange(n) / cfg.simulator_rate_hz
    task = ((t >= onset) & (t < end)).astype(np.float64)
    noise = ar1(stream("simulator").normal((n, len(SIMULATOR_CHANNELS))), phi)
    sim = {}
    sim["car_speed"] = cfg.base_speed_kmh + cfg.speed_delta_kmh[level] * task + cfg.speed_noise_kmh * noise[:, 0]
    for j, name in enumerate(SIMULATOR_CHANNELS[1:], 1):
        sim[name] = cfg.telemetry_noise * noise[:, j]
    sim["ang_vel_z"] = 0.8 * sim["steering_angle"] + 0.2 * sim["ang_vel_z"]
    sim["throttle"] = np.clip(0.5 + 0.1 * noise[:, 8], 0.0, 1.0)
    sim["brake"] = np.clip(0.1 * noise[:, 9], 0.0, 1.0)
    for name in SIMULATOR_CHANNELS:
        channels.append(ChannelSeries(name, Modality.SIMULATOR, cfg.simulator_rate_hz, sim[name]))

    # fNIRS (hemoglobin, micromolar)
    n = _n_samples(end, cfg.fnirs_rate_hz)
    t = np.arange(n) / cfg.fnirs_rate_hz
    hrf = hemodynamic_response(t, onset, end, cfg.hemo_tau_s)
    noise = ar1(stream("fnirs").normal((n, 2 * cfg.n_fnirs_channels)), phi)
    significant = set(cfg.significant_channels)
    for ch in range(cfg.n_fnirs_channels):
        gain = cfg.hbo2_delta_um[level] if ch in significant else 0.0
        hbo2 = gain * hrf + cfg.fnirs_noise_um * noise[:, 2 * ch]
        hbr = -cfg.hbr_ratio * gain * hrf + cfg.fnirs_noise_um * noise[:, 2 * ch + 1]
        tag = f"ch{ch + 1:02d}"
        channels.append(ChannelSeries(f"hbo2_{tag}", Modality.FNIRS_HB, cfg.fnirs_rate_hz, hbo2))
        channels.append(ChannelSeries(f"hbr_{tag}", Modality.FNIRS_HB, cfg.fnirs_rate_hz, hbr))

    # eye tracking
    n = _n_samples(end, cfg.eye_rate_hz)
    t = np.arange(n) / cfg.eye_rate_hz
    task = ((t >= onset) & (t < end)).astype(np.float64)
    noise = ar1(stream("eye").normal((n, 3)), phi)
    fixation = cfg.base_fixation_s + cfg.fixation_delta_s[level] * task + cfg.fixation_noise_s * noise[:, 0]
    eye = {
        "fixation_duration": np.maximum(fixation, 0.0),
        "gaze_x": np.tanh(cfg.gaze_noise * noise[:, 1]),
        "gaze_y": np.tanh(cfg.gaze_noise * noise[:, 2]),
    }
    for name in EYE_CHANNELS:
        channels.append(ChannelSeries(name, Modality.EYE, cfg.eye_rate_hz, eye[name]))

    labels = []
    if onset > 0:
        labels.append(LabelInterval(0.0, onset, BASELINE))
    labels.append(LabelInterval(onset, end, level))
    block = gen_nback_stimuli(level, cfg.n_trials, cfg.target_rate, derive_seed(rseed, _MODALITY_STREAM["trials"]), onset)
    name = f"sub{subject + 1:02d}_{level}back"
    return SyntheticRecording(Recording(tuple(channels), tuple(labels), name), block, subject, level)


def gen_recordings(cfg: GenConfig, seed: int) -> list[SyntheticRecording]:
    """One recording per level per subject, ordered by subject then level."""
    return [gen_recording(level, cfg, seed, subject) for subject in range(cfg.n_subjects) for level in (0, 1, 2)]


def to_optical_density(rec: Recording, geom: MbllGeometry, scale: float = 1e3) -> Recording:
    """Replace hemoglobin channel pairs by ``chNN_780`` / ``chNN_850`` optical densities.

    ``scale`` is the factor from mM to the hemoglobin unit (1e3 for micromolar).
    """
    hb = {c.name: c for c in rec.channels if c.modality == Modality.FNIRS_HB}
    out = []
    for c in rec.channels:
        if c.modality != Modality.FNIRS_HB:
            out.append(c)
        elif c.name.startswith("hbo2_"):
            tag = c.name[len("hbo2_"):]
            hbr = hb[f"hbr_{tag}"]
            od = concentration_to_od(np.column_stack([c.samples, hbr.samples]), geom, scale)
            out.append(ChannelSeries(f"{tag}_780", Modality.FNIRS_OD, c.rate_hz, od[:, 0], c.start_time_s))
            out.append(ChannelSeries(f"{tag}_850", Modality.FNIRS_OD, c.rate_hz, od[:, 1], c.start_time_s))
    return Recording(tuple(out), rec.labels, rec.name)
