import csv
import json
import shutil

import numpy as np
import pytest

from cogload.expcli import DEFAULTS, ExperimentConfig, main
from cogload.expcli.cli import LOCK_NAME
from cogload.errors import ConfigInvalid
from cogload.metrics import accuracy, prf1
from cogload.nn import load_model, predict
from cogload.expcli.stages import load_prepared

SMALL = {
    "seed": 3,
    "synthetic": {"preset": "separable", "overrides": {
        "n_trials": 16, "baseline_s": 6.0, "n_fnirs_channels": 6, "significant_channels": [0, 1]}},
    "prep": {"top_k": 4},
    "model": {"epochs": 4, "conv_channels": [4, 4], "hidden": 6, "fc_sizes": [8, 8], "lr": 0.01},
}


def _cfg(tmp_path, extra=None, name="cfg.json"):
    d = json.loads(json.dumps(SMALL))
    for k, v in (extra or {}).items():
        d[k] = v
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = _cfg(tmp)
    out = tmp / "out"
    for verb in ("synth", "prep", "select", "train", "eval", "report"):
        assert main([verb, "--config", str(cfg), "--out", str(out)]) == 0, verb
    return cfg, out


def test_config_defaults_printed(capsys):
    assert main(["config", "--defaults"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d == DEFAULTS and d["schema_version"] == 1
    assert d["prep"]["top_k"] == 20 and d["model"]["epochs"] == 1000 and d["model"]["lr"] == 0.001


@pytest.mark.parametrize("bad, key", [
    ({"bogus": 1}, "bogus"),
    ({"prep": {"windw_len": 3}}, "prep.windw_len"),
    ({"synthetic": {"preset": "separable", "overrides": {"n_trails": 3}}}, "synthetic.overrides.n_trails"),
])
def test_unknown_keys_rejected(tmp_path, capsys, bad, key):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["synth", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err


def test_config_value_errors():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"schema_version": 2})
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"modality_set": "eye_only"})
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"geometry": {"extinction": [[1, 2], [2, 4]]}})
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"synthetic": {"preset": "x", "overrides": {"eye_rate_hz": 60}}})


def test_synth_outputs(run_dir):
    _, out = run_dir
    recs = sorted(p.name for p in (out / "data").iterdir())
    assert recs == ["sub01_0back", "sub01_1back", "sub01_2back"]
    d = out / "data" / "sub01_1back"
    duration = 6.0 + 16 * 3.5
    assert len(_rows(d / "simulator.csv")) - 1 == round(duration * 50)
    assert len(_rows(d / "eye.csv")) - 1 == round(duration * 30)
    od = _rows(d / "fnirs_od.csv")
    assert len(od) - 1 == round(duration * 10) and len(od[0]) == 1 + 12
    assert _rows(d / "labels.csv") == [["start_s", "end_s", "class"], ["0.0", "6.0", "baseline"], ["6.0", "62.0", "1back"]]
    assert len(_rows(d / "trials.csv")) == 17


def test_synth_deterministic(tmp_path, run_dir):
    cfg, out = run_dir
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    for f in (out / "data").rglob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(out)).read_bytes()


def test_prep_outputs(run_dir):
    _, out = run_dir
    header = _rows(out / "prep" / "features.csv")[0]
    assert header[:5] == ["recording", "row", "t", "label", "split"]
    manifest = json.loads((out / "prep" / "manifest.json").read_text())
    fused = manifest["groups"]["simulator"] + manifest["selected_fnirs"] + manifest["groups"]["eye"]
    assert len(fused) == 10 + 4 + 3
    data = load_prepared(out)
    tr = data.split_matrix("train").values[:, ~data.scaler.constant]
    assert np.abs(tr.mean(axis=0)).max() < 1e-9 and np.abs(tr.std(axis=0) - 1).max() < 1e-6
    assert manifest["seed"] == 3 and manifest["prep"]["test_fraction"] == 0.2


def test_prep_missing_labels(tmp_path, run_dir, capsys):
    cfg, out = run_dir
    data = tmp_path / "data"
    shutil.copytree(out / "data", data)
    (data / "sub01_2back" / "labels.csv").unlink()
    assert main(["prep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--data", str(data)]) != 0
    assert "labels" in capsys.readouterr().err


def test_select_outputs(run_dir):
    _, out = run_dir
    ranking = _rows(out / "select" / "ranking_fnirs.csv")
    assert ranking[0] == ["rank", "feature", "f_statistic"]
    assert {r[1] for r in ranking[1:3]} == {"hbo2_ch01", "hbo2_ch02"}
    assert _rows(out / "select" / "ranking_simulator.csv")[1][1] == "car_speed"
    n = len(_rows(out / "select" / "correlation.csv")) - 1
    svg = (out / "select" / "correlation.svg").read_text()
    assert n == 17 and svg.count('<rect class="cell"') == n * n
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_select_k_too_large(run_dir, capsys):
    cfg, out = run_dir
    assert main(["select", "--config", str(cfg), "--out", str(out), "--k", "99"]) != 0
    assert "k=99" in capsys.readouterr().err


def test_train_outputs(run_dir):
    _, out = run_dir
    rows = _rows(out / "model" / "loss_history.csv")
    assert rows[0] == ["epoch", "loss"] and len(rows) - 1 == 4
    p, adam = load_model(out / "model" / "weights.bin")
    assert adam.t > 0
    data = load_prepared(out)
    x = data.windows("test").as_tensor()
    a, pa = predict(p, x)
    b, pb = predict(load_model(out / "model" / "weights.bin")[0], x)
    assert np.array_equal(a, b) and np.array_equal(pa, pb)


def test_eval_outputs(run_dir):
    _, out = run_dir
    rows = _rows(out / "eval" / "metrics.csv")
    assert rows[0] == ["Model", "Accuracy", "F1-score", "Precision", "Recall", "AUC"]
    assert [r[0] for r in rows[1:]] == ["Naive Bayes", "Nearest centroid", "k-NN", "Decision trees", "CNN-LSTM"]
    rep = json.loads((out / "eval" / "report.json").read_text())
    assert "macro" in rep["averaging"] and rep["hyperparameters"]["baselines"]["knn_k"] == 5
    for r in rows[1:]:
        cm = np.array(rep["models"][r[0]]["confusion"])
        assert cm.sum() == rep["n_test_windows"]
        s = prf1(cm)
        assert float(r[1]) == accuracy(cm)
        assert float(r[2]) == pytest.approx(s.f1, abs=1e-15)
        assert float(r[3]) == pytest.approx(s.precision, abs=1e-15)
        assert float(r[4]) == pytest.approx(s.recall, abs=1e-15)
        svg = out / "eval" / f"confusion_{r[0].lower().replace('-', '_').replace(' ', '_')}.svg"
        assert svg.read_text().count('<rect class="cell"') == 9
    assert float(rows[4][1]) >= 0.95  # decision tree on the separable preset


def test_eval_split_mismatch(tmp_path, run_dir, capsys):
    cfg, out = run_dir
    o2 = tmp_path / "o2"
    shutil.copytree(out, o2)
    assert main(["prep", "--config", str(cfg), "--out", str(o2), "--seed", "99"]) == 0
    assert main(["eval", "--config", str(cfg), "--out", str(o2)]) != 0
    assert "split mismatch" in capsys.readouterr().err


def test_idempotent_rerun(tmp_path, run_dir):
    cfg, out = run_dir
    o2 = tmp_path / "again"
    assert main(["run", "--config", str(cfg), "--out", str(o2)]) == 0
    files = sorted(p.relative_to(out) for p in out.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(o2) for p in o2.rglob("*") if p.is_file())
    for f in files:
        assert (out / f).read_bytes() == (o2 / f).read_bytes(), f


def test_simulator_only_trains(tmp_path, run_dir):
    cfg = _cfg(tmp_path, {"modality_set": "simulator_only"})
    out = tmp_path / "sim"
    shutil.copytree(run_dir[1] / "prep", out / "prep")
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["eval", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "eval" / "report.json").read_text())
    assert rep["modality_set"] == "simulator_only"
    assert rep["hyperparameters"]["cnn_lstm"]["n_features"] == 10


def test_lock_file(tmp_path, capsys):
    out = tmp_path / "locked"
    out.mkdir()
    (out / LOCK_NAME).write_text("1\n")
    assert main(["synth", "--out", str(out)]) == 3
    assert "lock" in capsys.readouterr().err
    assert (out / LOCK_NAME).exists()


def test_lock_released_after_error(tmp_path):
    out = tmp_path / "o"
    assert main(["eval", "--out", str(out)]) == 1
    assert not (out / LOCK_NAME).exists()


def test_global_flags_before_verb(tmp_path, run_dir):
    cfg, out = run_dir
    o2 = tmp_path / "r"
    shutil.copytree(out, o2)
    (o2 / "report.md").unlink()
    assert main(["--out", str(o2), "--config", str(cfg), "report"]) == 0
    assert (o2 / "report.md").read_bytes() == (out / "report.md").read_bytes()


def test_report_contents(run_dir):
    text = (run_dir[1] / "report.md").read_text()
    assert "| Model | Accuracy | F1-score | Precision | Recall | AUC |" in text
    assert "car_speed" in text
