"""Pipeline stages behind the CLI verbs.

Every stage reads and writes plain files under one output directory:

    data/<recording>/   simulator.csv fnirs_od.csv eye.csv labels.csv trials.csv
    prep/               features.csv manifest.json scaler.csv
    select/             ranking_simulator.csv ranking_fnirs.csv ranking_eye.csv
                        selected_fnirs.csv correlation.csv correlation.svg
    model/              weights.bin loss_history.csv train_manifest.json
    eval/               metrics.csv report.json confusion_<model>.svg
    report.md

Outputs carry no timestamps, so re-running a stage with the same inputs and
seed rewrites identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from cogload.baselines import decision_tree_fit, gaussian_nb_fit, knn_fit, nearest_centroid_fit
from cogload.datagen import gen_recordings, to_optical_density
from cogload.errors import CogloadError, ConfigInvalid, IngestError
from cogload.expcli.config import ExperimentConfig
from cogload.expcli.svg import heatmap
from cogload.featsel import FeatureRanking, correlation_matrix, rank_features, select_top_k
from cogload.metrics import AVERAGING, REPORT_COLUMNS, EvalReport, evaluate
from cogload.nn import load_model, predict, save_model, train
from cogload.pipeline import PrepConfig, PreparedData, convert_fnirs, prepare, stack_rows
from cogload.signal_core import (
    BASELINE,
    CLASS_NAMES,

    FeatureMatrix,
    Modality,
    Recording,
    ScalerParams,
    read_labels_csv,
    read_modality_csv,
    write_labels_csv,
    write_modality_csv,
)
from cogload.signal_core.io import fmt
from cogload.signal_core.types import LABEL_CODES

MODALITY_FILES = {"simulator": Modality.SIMULATOR, "fnirs_od": Modality.FNIRS_OD, "eye": Modality.EYE}
RATE_KEY = {"simulator": "simulator", "fnirs_od": "fnirs", "eye": "eye"}
MODEL_NAMES = ("Naive Bayes", "Nearest centroid", "k-NN", "Decision trees", "CNN-LSTM")
FORMAT_VERSION = 1


class StageError(CogloadError):
    """A stage could not produce or validate its declared outputs."""


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(paths) -> list[Path]:
    missing = [str(p) for p in paths if not Path(p).is_file() or Path(p).stat().st_size == 0]
    if missing:
        raise StageError(f"declared outputs missing or empty: {', '.join(missing)}")
    return list(paths)


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name.lower()).strip("_")


# ---------------------------------------------------------------- synth


def synth(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Generate synthetic recordings and write them as raw-format CSV files."""
    gen = cfg.gen()
    geom = cfg.geometry()
    written = []
    for srec in gen_recordings(gen, cfg.seed):
        rec = to_optical_density(srec.recording, geom, cfg.hb_scale)
        d = out / "data" / rec.name
        d.mkdir(parents=True, exist_ok=True)
        for stem, modality in MODALITY_FILES.items():
            chans = [c for c in rec.channels if c.modality == modality]
            write_modality_csv(d / f"{stem}.csv", chans)
            written.append(d / f"{stem}.csv")
        write_labels_csv(d / "labels.csv", rec.labels)
        with open(d / "trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "level", "target_digit", "digit", "onset_s", "is_target", "response", "rt_s"])
            for i, t in enumerate(srec.block.trials):
                w.writerow([
                    i, srec.block.level, srec.block.target_digit, t.digit, fmt(t.onset_s),
                    int(t.is_target), t.response.value, "" if t.rt_s is None else fmt(t.rt_s),
                ])
        written += [d / "labels.csv", d / "trials.csv"]
    return _require(written)


# ---------------------------------------------------------------- prep


def read_recording(d: Path, rates: dict[str, float]) -> Recording:
    d = Path(d)
    channels = []
    for stem, modality in MODALITY_FILES.items():
        channels += read_modality_csv(d / f"{stem}.csv", modality, rates[RATE_KEY[stem]])
    labels = read_labels_csv(d / "labels.csv")
    return Recording(tuple(channels), tuple(labels), d.name)


def read_recordings(data_dir: Path, rates: dict[str, float]) -> list[Recording]:
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise IngestError(f"data directory {data_dir} not found")
    dirs = sorted(p for p in data_dir.iterdir() if p.is_dir())
    if not dirs:
        raise IngestError(f"no recording directories under {data_dir}")
    return [read_recording(d, rates) for d in dirs]


def _split_column(n_rows: int, train, test) -> list[str]:
    out = ["none"] * n_rows
    for side, segs in (("train", train), ("test", test)):
        for a, b in segs:
            out[a:b] = [side] * (b - a)
    return out


def prep(cfg: ExperimentConfig, out: Path, data_dir: Path | None = None) -> list[Path]:
    """Ingest, convert fNIRS, fuse, split, scale and select; write the prepared table."""
    data_dir = Path(data_dir or cfg.raw["data_dir"] or out / "data")
    geom, scale = cfg.geometry(), cfg.hb_scale
    recs = [convert_fnirs(r, geom, scale) for r in read_recordings(data_dir, cfg.rates)]
    pcfg = cfg.prep()
    data = prepare(recs, pcfg, cfg.seed)
    mean_res, std_res = data.scale_check
    if not (mean_res < 1e-9 and std_res < 1e-6):
        raise StageError(f"scaled training rows fail the scaler contract: |mean| {mean_res:g}, |std-1| {std_res:g}")

    d = out / "prep"
    d.mkdir(parents=True, exist_ok=True)
    names = list(data.matrices[0].feature_names)
    with open(d / "features.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recording", "row", "t", "label", "split"] + names)
        for rname, m, (tr, te) in zip(data.names, data.matrices, data.splits):
            split = _split_column(m.n_samples, tr, te)
            t = m.start_time_s + np.arange(m.n_samples) / m.rate_hz
            label_names = {v: k for k, v in LABEL_CODES.items()}
            for i in range(m.n_samples):
                w.writerow([rname, i, fmt(t[i]), label_names[int(m.labels[i])], split[i]]
                           + [fmt(v) for v in m.values[i]])
    with open(d / "scaler.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "mean", "std", "constant"])
        for name, mu, sd, c in zip(data.scaler.feature_names, data.scaler.mean, data.scaler.std, data.scaler.constant):
            w.writerow([name, fmt(mu), fmt(sd), int(c)])
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": cfg.seed,
        "prep": {k: getattr(pcfg, k) for k in PrepConfig.__dataclass_fields__},
        "rate_hz": data.matrices[0].rate_hz,
        "scaler_epsilon": data.scaler.epsilon,
        "groups": data.groups,
        "selected_fnirs": data.selected_fnirs,
        "recordings": [
            {"name": n, "n_rows": m.n_samples, "start_time_s": m.start_time_s,
             "train_segments": [list(s) for s in tr], "test_segments": [list(s) for s in te]}
            for n, m, (tr, te) in zip(data.names, data.matrices, data.splits)
        ],
        "scale_check": {"max_abs_mean": mean_res, "max_abs_std_minus_1": std_res},
        "n_windows": {
            ms: {split: data.windows(split, ms).class_counts().tolist() for split in ("train", "test")}
            for ms in ("simulator_only", "fused_all")
        },
    }
    _dump_json(d / "manifest.json", manifest)
    return _require([d / "features.csv", d / "scaler.csv", d / "manifest.json"])


def load_prepared(out: Path) -> PreparedData:
    """Rebuild the prepared data from prep/ without recomputing anything random."""
    d = Path(out) / "prep"
    try:
        manifest = json.loads((d / "manifest.json").read_text())
    except FileNotFoundError:
        raise StageError(f"{d / 'manifest.json'} not found; run prep first") from None
    pcfg = PrepConfig(**manifest["prep"])
    with open(d / "scaler.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    scaler = ScalerParams(
        tuple(r["feature"] for r in rows),
        np.array([float(r["mean"]) for r in rows]),
        np.array([float(r["std"]) for r in rows]),
        manifest["scaler_epsilon"],
    )
    by_rec: dict[str, tuple[list, list]] = {}
    with open(d / "features.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = tuple(header[5:])
        for row in reader:
            vals, labs = by_rec.setdefault(row[0], ([], []))
            labs.append(LABEL_CODES[row[3]])
            vals.append([float(v) for v in row[5:]])
    matrices, splits, rec_names = [], [], []
    rate = manifest["rate_hz"]
    for r in manifest["recordings"]:
        if r["name"] not in by_rec:
            raise StageError(f"features.csv lacks rows for recording {r['name']!r}")
        vals, labs = by_rec[r["name"]]
        if len(vals) != r["n_rows"]:
            raise StageError(f"features.csv row count for {r['name']!r} disagrees with the manifest")
        matrices.append(FeatureMatrix(names, np.array(vals), np.array(labs), rate, r["start_time_s"]))
        splits.append(([tuple(s) for s in r["train_segments"]], [tuple(s) for s in r["test_segments"]]))
        rec_names.append(r["name"])
    groups = manifest["groups"]
    data = PreparedData(rec_names, matrices, splits, groups, scaler, None, manifest["selected_fnirs"], pcfg,
                        manifest["seed"], tuple(manifest["scale_check"].values()))
    if groups["fnirs"]:
        data.fnirs_ranking = rank_features(data.split_matrix("train").select(groups["fnirs"]))
    return data


# ---------------------------------------------------------------- select


def select(cfg: ExperimentConfig, out: Path, k: int | None = None) -> list[Path]:
    """Per-modality ANOVA rankings on training rows, top-k fNIRS list, correlation map."""
    data = load_prepared(out)
    d = out / "select"
    d.mkdir(parents=True, exist_ok=True)
    train_rows = data.split_matrix("train")
    written = []
    for group, names in data.groups.items():
        if names:
            ranking = rank_features(train_rows.select(names))
            ranking.to_csv(d / f"ranking_{group}.csv")
            written.append(d / f"ranking_{group}.csv")
    k = cfg.prep().top_k if k is None else k
    selected = select_top_k(data.fnirs_ranking, k) if data.fnirs_ranking is not None else []
    with open(d / "selected_fnirs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature"])
        for i, name in enumerate(selected, 1):
            w.writerow([i, name])
    fused = data.groups["simulator"] + selected + data.groups["eye"]
    cmap = correlation_matrix(train_rows.select(fused))
    cmap.to_csv(d / "correlation.csv")
    (d / "correlation.svg").write_text(
        heatmap(cmap.matrix, cmap.names, cmap.names, "Feature correlation (training rows)", -1.0, 1.0)
    )
    written += [d / "selected_fnirs.csv", d / "correlation.csv", d / "correlation.svg"]
    return _require(written)


# ---------------------------------------------------------------- train


def train_stage(cfg: ExperimentConfig, out: Path, epochs: int | None = None) -> list[Path]:
    data = load_prepared(out)
    tcfg = cfg.train()
    if epochs is not None:
        if epochs < 1:
            raise ConfigInvalid("epochs must be >= 1")
        tcfg = type(tcfg)(**{**tcfg.__dict__, "epochs": epochs})
    ds = data.windows("train", cfg.modality_set)
    result = train(ds, tcfg, cfg.seed)
    d = out / "model"
    d.mkdir(parents=True, exist_ok=True)
    save_model(d / "weights.bin", result.params, result.adam)
    with open(d / "loss_history.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        for i, loss in enumerate(result.loss_history, 1):
            w.writerow([i, fmt(loss)])
    _dump_json(d / "train_manifest.json", {
        "format_version": FORMAT_VERSION,
        "prep_manifest_sha256": _sha256(out / "prep" / "manifest.json"),
        "modality_set": cfg.modality_set,
        "feature_names": list(ds.feature_names),
        "seed": cfg.seed,
        "n_train_windows": len(ds.labels),
        "train": {k: list(v) if isinstance(v, tuple) else v for k, v in tcfg.__dict__.items()},
    })
    return _require([d / "weights.bin", d / "loss_history.csv", d / "train_manifest.json"])


# ---------------------------------------------------------------- eval


def eval_stage(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Fit the baselines, score them and the trained network on the held-out windows."""
    data = load_prepared(out)
    try:
        tm = json.loads((out / "model" / "train_manifest.json").read_text())
    except FileNotFoundError:
        raise StageError("model/train_manifest.json not found; run train first") from None
    if tm["prep_manifest_sha256"] != _sha256(out / "prep" / "manifest.json"):
        raise StageError("split mismatch: the model was trained on a different prepared dataset")
    modality_set = tm["modality_set"]
    tr, te = data.windows("train", modality_set), data.windows("test", modality_set)
    if list(te.feature_names) != tm["feature_names"]:
        raise StageError("split mismatch: feature set differs from the one the model was trained on")
    params, _ = load_model(out / "model" / "weights.bin")
    if (params.config.n_features, params.config.window_len) != (te.windows.shape[2], te.window_len):
        raise StageError("split mismatch: model input shape differs from the test windows")
    if len(te.labels) == 0:
        raise StageError("no test windows")

    b = cfg.baselines
    Xtr, Xte = tr.flattened(), te.flattened()
    models = [
        gaussian_nb_fit(Xtr, tr.labels, var_floor=b["nb_var_floor"]),
        nearest_centroid_fit(Xtr, tr.labels),
        knn_fit(Xtr, tr.labels, k=b["knn_k"]),
        decision_tree_fit(Xtr, tr.labels, max_depth=b["tree_max_depth"], min_leaf=b["tree_min_leaf"]),
    ]
    reports: list[EvalReport] = []
    for name, model in zip(MODEL_NAMES, models):
        prob = model.predict_proba(Xte)
        reports.append(evaluate(name, te.labels, model.predict(Xte), prob))
    pred, prob = predict(params, te.as_tensor())
    reports.append(evaluate(MODEL_NAMES[-1], te.labels, pred, prob))

    d = out / "eval"
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            row = r.row()
            w.writerow([row["Model"]] + [fmt(row[c]) for c in REPORT_COLUMNS[1:]])
    _dump_json(d / "report.json", {
        "format_version": FORMAT_VERSION,
        "averaging": AVERAGING,
        "classes": list(CLASS_NAMES),
        "modality_set": modality_set,
        "seed": cfg.seed,
        "n_train_windows": int(len(tr.labels)),
        "n_test_windows": int(len(te.labels)),
        "test_class_counts": te.class_counts().tolist(),
        "hyperparameters": {"baselines": dict(b), "cnn_lstm": params.config.to_dict(), "train": tm["train"]},
        "models": {
            r.model: {**r.row(), "confusion": r.confusion.tolist(), "per_class": r.per_class} for r in reports
        },
    })
    written = [d / "metrics.csv", d / "report.json"]
    labels = list(CLASS_NAMES)
    for r in reports:
        path = d / f"confusion_{_slug(r.model)}.svg"
        path.write_text(heatmap(r.confusion, labels, labels, f"{r.model} confusion (rows: true)",
                                0.0, float(max(r.confusion.max(), 1)), diverging=False, annotate=True,
                                value_format="{:.0f}", cell=48))
        written.append(path)
    return _require(written)


# ---------------------------------------------------------------- report


def _top(path: Path, n: int) -> list[tuple[str, str]]:
    if not path.is_file():
        return []
    r = FeatureRanking.from_csv(path)
    return [(name, "inf" if np.isinf(f) else f"{f:.3f}") for name, f in r.entries[:n]]


def report(cfg: ExperimentConfig, out: Path) -> list[Path]:
    """Markdown summary of whatever stage outputs exist under ``out``."""
    lines = ["# Experiment summary", ""]
    mpath = out / "eval" / "metrics.csv"
    if not mpath.is_file():
        raise StageError("eval/metrics.csv not found; run eval first")
    rep = json.loads((out / "eval" / "report.json").read_text())
    lines += [f"Modality set: {rep['modality_set']}. Seed: {rep['seed']}. "
              f"Windows: {rep['n_train_windows']} train, {rep['n_test_windows']} test. "
              f"Averaging: {rep['averaging']}.", ""]
    with open(mpath, newline="") as fh:
        rows = list(csv.reader(fh))
    lines.append("| " + " | ".join(rows[0]) + " |")
    lines.append("|" + "---|" * len(rows[0]))
    for row in rows[1:]:
        lines.append("| " + " | ".join([row[0]] + [f"{float(v):.3f}" for v in row[1:]]) + " |")
    lines.append("")
    for group in ("simulator", "fnirs", "eye"):
        top = _top(out / "select" / f"ranking_{group}.csv", 10)
        if top:
            lines += [f"Top {group} features by F statistic: "
                      + ", ".join(f"{n} ({f})" for n, f in top) + ".", ""]
    hist = out / "model" / "loss_history.csv"
    if hist.is_file():
        with open(hist, newline="") as fh:
            losses = [float(r["loss"]) for r in csv.DictReader(fh)]
        lines += [f"Training loss: {losses[0]:.4f} at epoch 1, {losses[-1]:.4f} at epoch {len(losses)}.", ""]
    (out / "report.md").write_text("\n".join(lines))
    return _require([out / "report.md"])


def run_all(cfg: ExperimentConfig, out: Path, epochs: int | None = None) -> list[Path]:
    written = synth(cfg, out)
    written += prep(cfg, out)
    written += select(cfg, out)
    written += train_stage(cfg, out, epochs)
    written += eval_stage(cfg, out)
    written += report(cfg, out)
    return written
