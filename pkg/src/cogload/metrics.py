"""Multiclass evaluation: confusion matrix, accuracy, macro P/R/F1, one-vs-rest AUC.

Averaging is macro (unweighted mean over classes) for precision, recall and
F1; AUC is the macro mean of one-vs-rest rank-statistic AUCs. Undefined
ratios (0/0) count as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogload.errors import InvalidClass, LengthMismatch, UndefinedAuc

AVERAGING = "macro precision/recall/F1; one-vs-rest macro AUC (Mann-Whitney, ties 1/2)"


def confusion_matrix(true, pred, n_classes: int = 3) -> np.ndarray:
    """counts[t, p]; rows are true classes, columns predicted."""
    true = np.asarray(true, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if true.shape != pred.shape:
        raise LengthMismatch(f"{true.size} true labels vs {pred.size} predictions")
    for arr in (true, pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise InvalidClass(f"labels must lie in [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den != 0)


@dataclass(frozen=True)
class PRF1:
    precision: float
    recall: float
    f1: float
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_f1: np.ndarray


def prf1(confusion: np.ndarray) -> PRF1:
    cm = np.asarray(confusion, dtype=np.float64)
    tp = np.diag(cm)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return PRF1(float(precision.mean()), float(recall.mean()), float(f1.mean()), precision, recall, f1)


def accuracy(confusion: np.ndarray) -> float:
    cm = np.asarray(confusion)
    return float(np.trace(cm) / cm.sum())


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def binary_auc(is_positive, scores) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 1/2 P(tie)."""
    pos = np.asarray(is_positive, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAuc("AUC needs at least one positive and one negative")
    ranks = average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def per_class_auc(true, prob_rows) -> np.ndarray:
    """One-vs-rest AUC per class; NaN where a class lacks positives or negatives."""
    true = np.asarray(true)
    prob_rows = np.asarray(prob_rows, dtype=np.float64)
    out = np.full(prob_rows.shape[1], np.nan)
    for c in range(prob_rows.shape[1]):
        pos = true == c
        if pos.any() and not pos.all():
            out[c] = binary_auc(pos, prob_rows[:, c])
    return out


def roc_auc_ovr_macro(true, prob_rows) -> float:
    aucs = per_class_auc(true, prob_rows)
    defined = aucs[~np.isnan(aucs)]
    if defined.size == 0:
        raise UndefinedAuc("no class has both positive and negative samples")
    return float(defined.mean())


@dataclass(frozen=True)
class EvalReport:
    model: str
    confusion: np.ndarray
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    per_class: dict

    def row(self) -> dict:
        """One metrics row keyed by the report column names."""
        return {
            "Model": self.model, "Accuracy": self.accuracy, "F1-score": self.f1,
            "Precision": self.precision, "Recall": self.recall, "AUC": self.auc,
        }


REPORT_COLUMNS = ("Model", "Accuracy", "F1-score", "Precision", "Recall", "AUC")


def evaluate(model: str, true, pred, prob_rows, n_classes: int = 3) -> EvalReport:
    cm = confusion_matrix(true, pred, n_classes)
    scores = prf1(cm)
    aucs = per_class_auc(true, prob_rows)
    per_class = {
        "precision": scores.per_class_precision.tolist(),
        "recall": scores.per_class_recall.tolist(),
        "f1": scores.per_class_f1.tolist(),
        "auc": [None if np.isnan(a) else float(a) for a in aucs],
        "support": cm.sum(axis=1).tolist(),
    }
    return EvalReport(
        model, cm, accuracy(cm), scores.precision, scores.recall, scores.f1,
        roc_auc_ovr_macro(true, prob_rows), per_class,
    )
