"""Accuracy, per-class / macro F1 and the challenge's weighted overall score."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError, UndefinedMetricError

F1_WEIGHT = 0.67
ACC_WEIGHT = 0.33


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows: true class, cols: predicted class

    @classmethod
    def from_labels(cls, preds, truths, n_classes: int) -> "ConfusionMatrix":
        p = np.asarray(preds, dtype=np.int64).ravel()
        t = np.asarray(truths, dtype=np.int64).ravel()
        if p.shape != t.shape:
            raise ShapeError(f"{p.size} predictions for {t.size} truths")
        if p.size == 0:
            raise UndefinedMetricError("no samples to evaluate")
        for name, v in (("prediction", p), ("truth", t)):
            if v.min() < 0 or v.max() >= n_classes:
                raise ShapeError(f"{name} label out of range [0, {n_classes})")
        counts = np.bincount(t * n_classes + p, minlength=n_classes * n_classes)
        return cls(counts.reshape(n_classes, n_classes))

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _require_nonempty(cm: ConfusionMatrix) -> None:
    if cm.total < 1:
        raise UndefinedMetricError("confusion matrix is empty")


def _safe_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.divide(a, b, out=np.zeros_like(a, dtype=np.float64), where=b != 0)


def accuracy(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    return float(np.trace(cm.counts) / cm.total)


def per_class_prf(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precision, recall and F1 per class; any 0/0 evaluates to 0."""
    tp = np.diag(cm.counts).astype(np.float64)
    precision = _safe_div(tp, cm.counts.sum(axis=0).astype(np.float64))
    recall = _safe_div(tp, cm.counts.sum(axis=1).astype(np.float64))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1


def f1_score(cm: ConfusionMatrix, average: str = "macro") -> tuple[float, np.ndarray]:
    _require_nonempty(cm)
    _, _, f1 = per_class_prf(cm)
    if average == "macro":
        return float(f1.mean()), f1
    if average == "weighted":
        support = cm.counts.sum(axis=1)
        return float(np.dot(f1, support) / support.sum()), f1
    raise ValueError(f"unknown average {average!r}")


def f1_macro(cm: ConfusionMatrix) -> tuple[float, np.ndarray]:
    return f1_score(cm, "macro")


def overall_score(f1: float, acc: float) -> float:
    for name, v in (("f1", f1), ("accuracy", acc)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return F1_WEIGHT * f1 + ACC_WEIGHT * acc


@dataclass
class MetricReport:
    accuracy: float
    f1_macro: float
    overall: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    f1_weighted: float = 0.0
    # classes whose precision or recall hit 0/0; their F1 is 0 by convention
    undefined_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "overall": self.overall,
            "per_class": {"precision": self.precision, "recall": self.recall, "f1": self.f1},
            "support": self.support,
            "f1_weighted": self.f1_weighted,
            "undefined_classes": self.undefined_classes,
        }


def report_from_cm(cm: ConfusionMatrix) -> MetricReport:
    acc = accuracy(cm)
    precision, recall, f1 = per_class_prf(cm)
    macro = float(f1.mean())
    weighted, _ = f1_score(cm, "weighted")
    support = cm.counts.sum(axis=1)
    predicted = cm.counts.sum(axis=0)
    undefined = np.flatnonzero((support == 0) | (predicted == 0)).tolist()
    return MetricReport(
        accuracy=acc, f1_macro=macro, overall=overall_score(macro, acc),
        precision=precision.tolist(), recall=recall.tolist(), f1=f1.tolist(),
        support=support.tolist(), f1_weighted=weighted, undefined_classes=undefined,
    )


def evaluate(preds: Sequence[int], truths: Sequence[int], n_classes: int) -> MetricReport:
    return report_from_cm(ConfusionMatrix.from_labels(preds, truths, n_classes))
