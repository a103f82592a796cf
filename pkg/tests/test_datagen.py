import numpy as np
import pytest
from hypothesis import given, strategies as st

from cogload.baselines import decision_tree_fit
from cogload.datagen import (
    EYE_CHANNELS, RESPONSE_WINDOW_S, SIMULATOR_CHANNELS, STIMULUS_S, TRIAL_SPACING_S, GenConfig, Response,
    gen_dataset, gen_nback_stimuli, gen_recording, gen_recordings, nback_targets, preset, to_optical_density,
)
from cogload.errors import ConfigInvalid, InvalidLevel
from cogload.featsel import rank_features
from cogload.pipeline import PrepConfig, convert_fnirs
from cogload.signal_core import BASELINE, FeatureMatrix, MbllGeometry, Modality, align_and_fuse
from oracles import nback_brute

GEOM = MbllGeometry([[1.0, 2.0], [2.5, 1.5]], 1.5, [6.0, 5.5])
SMALL = dict(n_trials=12, baseline_s=6.0, n_fnirs_channels=6, significant_channels=(0, 1))


def test_nback_rule_examples():
    assert nback_targets([3, 3, 7, 7, 2], 1) == [False, True, False, True, False]
    assert nback_targets([1, 2, 1, 2, 1], 2) == [False, False, True, True, True]
    assert nback_targets([5, 1, 5], 0, target_digit=5) == [True, False, True]
    with pytest.raises(InvalidLevel):
        nback_targets([1, 2], 3)


@given(st.integers(0, 2), st.integers(0, 2**40), st.integers(3, 60), st.floats(0.05, 0.95))
def test_generated_flags_match_brute_force(level, seed, n, rate):
    if n <= level:
        return
    block = gen_nback_stimuli(level, n, rate, seed)
    assert [t.is_target for t in block.trials] == nback_brute(block.digits, level, block.target_digit)
    assert all(0 <= d <= 9 for d in block.digits)


def test_nback_timing_and_responses():
    block = gen_nback_stimuli(2, 50, 0.33, seed=3, onset_s=10.0)
    assert STIMULUS_S == 1.0 and RESPONSE_WINDOW_S == 2.5 and TRIAL_SPACING_S == 3.5
    onsets = np.array([t.onset_s for t in block.trials])
    np.testing.assert_allclose(np.diff(onsets), 3.5)
    assert onsets[0] == 10.0
    for t in block.trials:
        if t.response is Response.NONE:
            assert t.rt_s is None
        else:
            assert 0 < t.rt_s <= RESPONSE_WINDOW_S


def test_nback_target_rate_close():
    for level in (0, 1, 2):
        flags = [t.is_target for s in range(40) for t in gen_nback_stimuli(level, 50, 0.33, s).trials[level:]]
        assert abs(np.mean(flags) - 0.33) < 0.03


def test_nback_errors():
    with pytest.raises(InvalidLevel):
        gen_nback_stimuli(3, 10, 0.3, 0)
    with pytest.raises(ValueError):
        gen_nback_stimuli(2, 2, 0.3, 0)
    with pytest.raises(ValueError):
        gen_nback_stimuli(1, 10, 1.0, 0)


def test_gen_recording_structure():
    cfg = GenConfig(**SMALL)
    s = gen_recording(1, cfg, seed=5)
    rec = s.recording
    assert rec.name == "sub01_1back"
    names = rec.channel_names
    assert names[:10] == list(SIMULATOR_CHANNELS) and names[-3:] == list(EYE_CHANNELS)
    assert sum(1 for c in rec.channels if c.modality == Modality.FNIRS_HB) == 12
    assert [iv.code for iv in rec.labels] == [BASELINE, 1]
    assert rec.labels[-1].end_s == pytest.approx(6.0 + 12 * 3.5)
    assert len(rec.channel("car_speed")) == round(cfg.duration_s * 50)
    assert s.block.level == 1 and len(s.block.trials) == 12


def test_gen_recording_deterministic():
    cfg = GenConfig(**SMALL)
    a, b = gen_recording(2, cfg, 11), gen_recording(2, cfg, 11)
    for x, y in zip(a.recording.channels, b.recording.channels):
        assert x.samples.tobytes() == y.samples.tobytes()
    assert a.block == b.block
    c = gen_recording(2, cfg, 12)
    assert c.recording.channels[0].samples.tobytes() != a.recording.channels[0].samples.tobytes()


def test_zero_effects_give_small_f():
    cfg = preset("null", n_subjects=1, n_fnirs_channels=4, significant_channels=(0,))
    recs = [s.recording for s in gen_recordings(cfg, 2)]
    fused = [align_and_fuse(r, 10.0, r.channel_names) for r in recs]
    vals = np.concatenate([m.values for m in fused])
    labels = np.concatenate([m.labels for m in fused])
    r = rank_features(FeatureMatrix(fused[0].feature_names, vals, labels, 10.0))
    # large-n null: F has mean ~1 for independent rows; AR(1) inflates it, but far from separable
    assert max(f for _, f in r.entries) < 60


def test_large_hbo2_effect_zero_noise_ranks_designated_channels():
    cfg = GenConfig(**{**SMALL, "significant_channels": (1, 4)}, fnirs_noise_um=0.0, hbo2_delta_um=(0.0, 5.0, 10.0))
    recs = [s.recording for s in gen_recordings(cfg, 0)]
    fn = [c for c in recs[0].channel_names if c.startswith("hb")]
    fused = [align_and_fuse(r, 10.0, fn) for r in recs]
    m = FeatureMatrix(tuple(fn), np.concatenate([f.values for f in fused]),
                      np.concatenate([f.labels for f in fused]), 10.0)
    top = rank_features(m).names[:4]
    assert set(top) == {"hbo2_ch02", "hbo2_ch05", "hbr_ch02", "hbr_ch05"}


def test_monotone_effects_on_separable_preset():
    cfg = preset("separable", **SMALL)
    recs = gen_recordings(cfg, 1)
    speed, hbo = [], []
    for s in recs:
        r = s.recording
        t0 = r.labels[-1].start_s
        sp = r.channel("car_speed")
        speed.append(sp.samples[sp.times() >= t0].mean())
        h = r.channel("hbo2_ch01")
        hbo.append(h.samples[h.times() >= t0].mean())
    assert speed[0] > speed[1] > speed[2]
    assert hbo[0] < hbo[1] < hbo[2]


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        GenConfig(target_rate=1.5)
    with pytest.raises(ConfigInvalid):
        GenConfig(eye_rate_hz=0)
    with pytest.raises(ConfigInvalid):
        GenConfig(significant_channels=(60,))
    with pytest.raises(ConfigInvalid):
        GenConfig(speed_delta_kmh=(0.0, float("nan"), 1.0))
    with pytest.raises(ConfigInvalid):
        preset("nope")


def test_optical_density_round_trip():
    rec = gen_recording(0, GenConfig(**SMALL), 4).recording
    od = to_optical_density(rec, GEOM, 1e3)
    assert "ch01_780" in od.channel_names and "hbo2_ch01" not in od.channel_names
    back = convert_fnirs(od, GEOM, 1e3)
    for name in ("hbo2_ch01", "hbr_ch06"):
        a, b = rec.channel(name).samples, back.channel(name).samples
        assert np.abs(a - b).max() <= 1e-9 * np.abs(a).max()


def test_gen_dataset_balanced_and_separable():
    cfg = preset("separable", n_trials=24)
    train, test = gen_dataset(cfg, 3, PrepConfig())
    for ds in (train, test):
        counts = ds.class_counts()
        assert counts.max() - counts.min() <= 1
    assert train.windows.shape[1:] == (10, 33)
    tree = decision_tree_fit(train.flattened(), train.labels)
    assert np.mean(tree.predict(test.flattened()) == test.labels) >= 0.95
