import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra import numpy as hnp

from cogload.errors import (
    DimensionMismatch, EmptyMatrix, EmptySeries, IngestError, LengthMismatch, NoOverlap,
    RateIncompatible, SingularExtinction, WindowTooLong,
)
from cogload.signal_core import (
    BASELINE, ChannelSeries, FeatureMatrix, LabelInterval, MbllGeometry, Modality, OdPair, Recording,
    ScalerParams, align_and_fuse, apply_scaler, concentration_to_od, downsample, fit_scaler, mbll_convert,
    mbll_convert_pairs, od_to_concentration, read_labels_csv, read_modality_csv, segment_windows,
    write_labels_csv, write_modality_csv,
)

GEOM = MbllGeometry([[1.0, 2.0], [2.5, 1.5]], 1.5, [6.0, 5.5])


def _series(name, values, rate=10.0, start=0.0, modality=Modality.SIMULATOR):
    return ChannelSeries(name, modality, rate, np.asarray(values, dtype=float), start)


def _matrix(cols, labels, names=None):
    cols = np.asarray(cols, dtype=float)
    if cols.ndim == 1:
        cols = cols[:, None]
    names = names or tuple(f"f{i}" for i in range(cols.shape[1]))
    return FeatureMatrix(tuple(names), cols, np.asarray(labels), 10.0)


def _forward_od(conc_mm, eps, L, dpf):
    # dOD_w = (eps_w,HbO2 * dC_HbO2 + eps_w,HbR * dC_HbR) * L * DPF_w, written out per wavelength.
    out = np.empty_like(conc_mm)
    for w in range(2):
        out[:, w] = (eps[w][0] * conc_mm[:, 0] + eps[w][1] * conc_mm[:, 1]) * L * dpf[w]
    return out


# ------------------------------------------------------------------ MBLL

def test_mbll_zero_od_gives_zero_concentration():
    z = _series("ch01_780", np.zeros(5), modality=Modality.FNIRS_OD)
    hbo, hbr = mbll_convert(z, _series("ch01_850", np.zeros(5), modality=Modality.FNIRS_OD), GEOM)
    assert hbo.name == "hbo2_ch01" and hbr.name == "hbr_ch01"
    assert np.all(hbo.samples == 0) and np.all(hbr.samples == 0)
    assert hbo.modality == Modality.FNIRS_HB


def test_mbll_recovers_forward_model_inputs():
    conc = np.array([[0.01, -0.004], [0.0, 0.02], [-0.03, 0.001]])
    od = _forward_od(conc, GEOM.extinction, 1.5, [6.0, 5.5])
    got = od_to_concentration(od, GEOM)
    np.testing.assert_allclose(got, conc, rtol=0, atol=1e-9 * np.abs(conc).max())
    a = _series("x_780", od[:, 0], modality=Modality.FNIRS_OD)
    b = _series("x_850", od[:, 1], modality=Modality.FNIRS_OD)
    hbo, hbr = mbll_convert(a, b, GEOM, scale=1e3)
    tol = 1e-9 * np.abs(conc).max()
    np.testing.assert_allclose(hbo.samples, 1e3 * conc[:, 0], rtol=0, atol=1e3 * tol)
    np.testing.assert_allclose(hbr.samples, 1e3 * conc[:, 1], rtol=0, atol=1e3 * tol)
    pairs = [OdPair(float(o[0]), float(o[1]), 1) for o in od]
    np.testing.assert_allclose(mbll_convert_pairs(pairs, GEOM), conc, rtol=0, atol=tol)


def test_mbll_singular_extinction():
    g = MbllGeometry([[1.0, 2.0], [2.0, 4.0]], 1.5, [6.0, 5.5])
    with pytest.raises(SingularExtinction):
        od_to_concentration(np.zeros((3, 2)), g)


def test_mbll_length_mismatch():
    with pytest.raises(LengthMismatch):
        mbll_convert(_series("a_780", [0, 0, 0]), _series("a_850", [0, 0]), GEOM)


def test_geometry_rejects_nonpositive_path_and_dpf():
    with pytest.raises(ValueError):
        MbllGeometry([[1, 2], [3, 4]], 0.0, [6, 5])
    with pytest.raises(ValueError):
        MbllGeometry([[1, 2], [3, 4]], 1.0, [6, -5])


finite = st.floats(-50, 50, allow_nan=False)


@given(
    st.lists(st.lists(st.floats(0.05, 5.0), min_size=2, max_size=2), min_size=2, max_size=2),
    st.floats(0.5, 4.0), st.lists(st.floats(2.0, 8.0), min_size=2, max_size=2),
    hnp.arrays(np.float64, (20, 2), elements=st.floats(-0.1, 0.1)),
)
def test_mbll_round_trip_property(eps, L, dpf, conc):
    e = np.array(eps)
    # keep the system well conditioned so the 1e-9 relative bound is meaningful
    assume(abs(np.linalg.det(e)) > 0.05 * np.abs(e).max() ** 2)
    g = MbllGeometry(e, L, dpf)
    back = od_to_concentration(concentration_to_od(conc, g), g)
    scale = np.abs(conc).max() + 1e-300
    assert np.abs(back - conc).max() <= 1e-9 * scale


# ------------------------------------------------------------------ scaler

def test_fit_scaler_hand_values():
    p = fit_scaler(_matrix([[1, 5], [2, 5], [3, 5]], [0, 1, 2]))
    np.testing.assert_allclose(p.mean, [2.0, 5.0])
    np.testing.assert_allclose(p.std[0], np.sqrt(2 / 3), rtol=1e-15)
    assert p.std[1] == 0.0
    assert p.constant.tolist() == [False, True]


def test_apply_scaler_hand_values_and_constant_column():
    m = _matrix([[1, 5], [2, 5], [3, 5]], [0, 1, 2])
    out = apply_scaler(m, fit_scaler(m))
    np.testing.assert_allclose(out.values[:, 0], [-1.224744871391589, 0.0, 1.224744871391589], rtol=1e-12)
    assert np.all(out.values[:, 1] == 0.0)


def test_apply_scaler_identity_params():
    m = _matrix(np.arange(12.0).reshape(4, 3), [0, 1, 2, 0])
    p = ScalerParams(m.feature_names, np.zeros(3), np.ones(3))
    assert np.array_equal(apply_scaler(m, p).values, m.values)


def test_already_standardized_column():
    x = np.array([-1.224744871391589, 0.0, 1.224744871391589])
    p = fit_scaler(_matrix(x, [0, 1, 2]))
    assert abs(p.mean[0]) < 1e-15 and abs(p.std[0] - 1) < 1e-12


def test_scaler_errors():
    with pytest.raises(EmptyMatrix):
        fit_scaler(_matrix([[1.0]], [0]))
    p = fit_scaler(_matrix([[1, 2], [3, 4]], [0, 1]))
    with pytest.raises(DimensionMismatch):
        apply_scaler(_matrix([[1.0], [2.0]], [0, 1]), p)


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 5)), elements=st.floats(-1e3, 1e3)))
def test_scaling_property(values):
    m = _matrix(values, np.zeros(len(values), dtype=int))
    p = fit_scaler(m)
    out = apply_scaler(m, p).values
    spread = values.max(axis=0) - values.min(axis=0)
    # columns whose spread is tiny relative to magnitude are numerically constant
    keep = (~p.constant) & (spread > 1e-6 * (np.abs(values).max(axis=0) + 1))
    if keep.any():
        assert np.abs(out[:, keep].mean(axis=0)).max() < 1e-9
        assert np.abs(out[:, keep].std(axis=0) - 1).max() < 1e-6
    assert np.all(out[:, p.constant] == 0)


# ------------------------------------------------------------------ downsample

def test_downsample_examples():
    s = _series("x", np.arange(1.0, 11.0), rate=50.0)
    assert np.array_equal(downsample(s, 1).samples, s.samples)
    m = downsample(s, 5, "mean")
    assert m.samples.tolist() == [3.0, 8.0] and m.rate_hz == 10.0
    assert downsample(s, 3, "decimate").samples.tolist() == [1.0, 4.0, 7.0, 10.0]


def test_downsample_errors():
    with pytest.raises(EmptySeries):
        downsample(_series("x", [1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        downsample(_series("x", [1.0, 2.0]), 0)


@given(st.integers(1, 8), st.integers(1, 10), st.integers(0, 7))
def test_downsample_mean_preserves_block_mean(factor, blocks, extra):
    x = np.random.default_rng(factor * 100 + blocks).normal(size=factor * blocks + min(extra, factor - 1))
    out = downsample(_series("x", x, rate=10.0 * factor), factor)
    assert len(out) == blocks
    np.testing.assert_allclose(out.samples.mean(), x[: factor * blocks].mean(), rtol=1e-12, atol=1e-12)


# ------------------------------------------------------------------ fusion

def _rec(channels, labels):
    return Recording(tuple(channels), tuple(labels), "r")


def test_align_same_rate_stacks_columns():
    a, b = _series("a", np.arange(20.0)), _series("b", -np.arange(20.0))
    m = align_and_fuse(_rec([a, b], [LabelInterval(0, 2, 1)]), 10.0, ["b", "a"])
    assert m.feature_names == ("b", "a") and m.n_samples == 20
    assert np.array_equal(m.values[:, 1], np.arange(20.0))
    assert np.all(m.labels == 1)


def test_align_downsamples_fast_channel():
    sim = _series("speed", np.arange(1000.0), rate=100.0)
    fn = _series("hbo2_ch01", np.arange(100.0), rate=10.0, modality=Modality.FNIRS_HB)
    m = align_and_fuse(_rec([sim, fn], [LabelInterval(0, 10, 0)]), 10.0, ["speed", "hbo2_ch01"])
    assert m.n_samples == 100
    np.testing.assert_allclose(m.values[:3, 0], [4.5, 14.5, 24.5])


def test_align_errors():
    a = _series("a", np.arange(10.0), start=0.0)
    b = _series("b", np.arange(10.0), start=5.0)
    rec = Recording((a, b), (), "r")
    with pytest.raises(NoOverlap):
        align_and_fuse(rec, 10.0, ["a", "b"])
    c = _series("c", np.arange(30.0), rate=15.0)
    with pytest.raises(RateIncompatible):
        align_and_fuse(Recording((c,), (), "r"), 10.0, ["c"])


def test_align_labels_baseline_and_partial_overlap():
    a = _series("a", np.arange(40.0), rate=20.0)
    b = _series("b", np.arange(15.0), rate=10.0, start=0.5)
    rec = _rec([a, b], [LabelInterval(0.5, 1, BASELINE), LabelInterval(1, 2, 2)])
    m = align_and_fuse(rec, 10.0, ["a", "b"])
    assert m.n_samples == 15 and m.start_time_s == 0.5
    assert m.labels.tolist() == [BASELINE] * 5 + [2] * 10
    assert m.values.shape == (15, 2)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10), st.integers(0, 10), st.integers(10, 40))
def test_align_columns_equal_length(f1, f2, off1, off2, n):
    a = _series("a", np.arange(n * f1, dtype=float), rate=10.0 * f1, start=off1 / 10)
    b = _series("b", np.arange(n * f2, dtype=float), rate=10.0 * f2, start=off2 / 10)
    rec = Recording((a, b), (), "r")
    if abs(off1 - off2) >= n:
        with pytest.raises(NoOverlap):
            align_and_fuse(rec, 10.0, ["a", "b"])
        return
    m = align_and_fuse(rec, 10.0, ["a", "b"])
    assert m.values.shape == (n - abs(off1 - off2), 2)
    assert len(m.labels) == m.n_samples


# ------------------------------------------------------------------ windows

def test_segment_windows_examples():
    m = _matrix(np.arange(10.0), [1] * 10)
    assert len(segment_windows(m, 10, 1)) == 1
    ds = segment_windows(m, 4, 2)
    assert len(ds) == 4
    assert ds.origins[:, 1].tolist() == [0, 2, 4, 6]
    assert ds.windows[1, :, 0].tolist() == [2.0, 3.0, 4.0, 5.0]


def test_segment_windows_short_interval():
    m = _matrix(np.arange(8.0), [0, 0, 0, 1, 1, 1, 1, 1])
    with pytest.raises(WindowTooLong):
        segment_windows(m, 4, 1)


def test_segment_windows_skip_baseline():
    m = _matrix(np.arange(12.0), [BASELINE] * 2 + [0] * 5 + [1] * 5)
    ds = segment_windows(m, 5, 5)
    assert ds.labels.tolist() == [0, 1]


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(6, 20)), min_size=1, max_size=6),
       st.integers(1, 6), st.integers(1, 4))
def test_windows_never_straddle_labels(runs, T, stride):
    labels = np.concatenate([[c] * n for c, n in runs])
    m = _matrix(np.arange(len(labels), dtype=float), labels)
    ds = segment_windows(m, T, stride)
    for w, lab, (_, start) in zip(ds.windows, ds.labels, ds.origins):
        rows = w[:, 0].astype(int)
        assert np.all(labels[rows] == lab)
        assert rows[0] == start
    # count per maximal run follows floor((len - T)/stride) + 1
    merged = []
    for c, n in runs:
        if merged and merged[-1][0] == c:
            merged[-1][1] += n
        else:
            merged.append([c, n])
    assert len(ds) == sum((n - T) // stride + 1 for _, n in merged)


# ------------------------------------------------------------------ types and IO

def test_channel_series_rejects_bad_input():
    with pytest.raises(ValueError):
        _series("x", [1.0, np.nan])
    with pytest.raises(ValueError):
        _series("x", [1.0], rate=0.0)


def test_recording_validates_intervals():
    a = _series("a", np.arange(20.0))
    with pytest.raises(ValueError):
        Recording((a,), (LabelInterval(0, 1.5, 0), LabelInterval(1, 2, 1)), "r")
    with pytest.raises(ValueError):
        Recording((a,), (LabelInterval(0, 3, 0),), "r")


def test_csv_round_trip(tmp_path):
    chans = [_series("a", [0.1, 1 / 3, 2.5e-17]), _series("b", [1.0, -2.0, 3.0])]
    write_modality_csv(tmp_path / "m.csv", chans)
    back = read_modality_csv(tmp_path / "m.csv", Modality.SIMULATOR, 10.0)
    assert [c.name for c in back] == ["a", "b"]
    assert np.array_equal(back[0].samples, chans[0].samples)
    labels = [LabelInterval(0.0, 0.1, BASELINE), LabelInterval(0.1, 0.3, 2)]
    write_labels_csv(tmp_path / "l.csv", labels)
    assert read_labels_csv(tmp_path / "l.csv") == labels


@pytest.mark.parametrize("body, msg", [
    ("x,a\n0,1\n", "first column"),
    ("t,a\n0,1\n0,2\n", "strictly increasing"),
    ("t,a\n0,1\n0.5,2\n", "disagrees"),
    ("t,a\n0,1\n0.1,nan\n", "non-finite"),
    ("t,a\n0,1\n0.1\n", "ragged"),
])
def test_modality_csv_validation(tmp_path, body, msg):
    (tmp_path / "m.csv").write_text(body)
    with pytest.raises(IngestError, match=msg):
        read_modality_csv(tmp_path / "m.csv", Modality.EYE, 10.0)


def test_labels_csv_validation(tmp_path):
    with pytest.raises(IngestError):
        read_labels_csv(tmp_path / "missing.csv")
    (tmp_path / "l.csv").write_text("start_s,end_s,class\n0,1,3back\n")
    with pytest.raises(IngestError):
        read_labels_csv(tmp_path / "l.csv")
