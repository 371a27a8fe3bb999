"""Accuracy, detection / false-alarm estimators and confusion matrices.

Undefined estimators (zero denominators) are returned as ``None`` rather than 0.
Confusion matrices follow the row = predicted, column = true convention with
column normalization.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


def _pair(predictions, labels):
    y = np.asarray(predictions)
    k = np.asarray(labels)
    if y.shape != k.shape:
        raise ValueError(f"length mismatch: {y.shape} predictions vs {k.shape} labels")
    if y.size == 0:
        raise ValueError("empty prediction set")
    return y, k


def accuracy(predictions, labels) -> float:
    y, k = _pair(predictions, labels)
    return float(np.mean(y == k))


def balanced_accuracy(predictions, labels, K: int) -> float:
    """Mean per-class recall over classes present in ``labels``."""
    cm = confusion(predictions, labels, K)
    present = [j for j in range(K) if j not in cm.empty_columns]
    return float(np.mean(np.diag(cm.normalized)[present]))


def pfa_eq5(predictions, labels, positive_class) -> float | None:
    """Share of positive predictions whose true class is not positive."""
    y, k = _pair(predictions, labels)
    declared = y == positive_class
    n = int(declared.sum())
    if n == 0:
        return None
    return int((declared & (k != positive_class)).sum()) / n


def pd_eq6(predictions, labels, positive_class) -> float | None:
    y, k = _pair(predictions, labels)
    truth = k == positive_class
    n = int(truth.sum())
    if n == 0:
        return None
    return int((truth & (y == positive_class)).sum()) / n


def pfa_conditional(predictions, labels, positive_class) -> float | None:
    """Pr{declare positive | truly negative}, the per-window rate used on ROC axes."""
    y, k = _pair(predictions, labels)
    neg = k != positive_class
    n = int(neg.sum())
    if n == 0:
        return None
    return int((neg & (y == positive_class)).sum()) / n


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    labels: tuple[str, ...] = ()

    @property
    def normalized(self) -> np.ndarray:
        col = self.counts.sum(axis=0)
        out = np.zeros(self.counts.shape, dtype=float)
        nz = col > 0
        out[:, nz] = self.counts[:, nz] / col[nz]
        return out

    @property
    def empty_columns(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.counts.sum(axis=0) == 0)]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(predictions, labels, K: int, names=()) -> ConfusionMatrix:
    y, k = _pair(predictions, labels)
    if y.min() < 0 or k.min() < 0 or y.max() >= K or k.max() >= K:
        raise ValueError(f"class index outside 0..{K - 1}")
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (y.astype(np.int64), k.astype(np.int64)), 1)
    return ConfusionMatrix(counts, tuple(names))


def pd_pfa_from_confusion(cm, positive_index: int) -> tuple[float, float]:
    """P_d = a[p][p]; P_fa = row-p sum minus a[p][p] over column-normalized entries.

    Accepts a ConfusionMatrix or an already column-normalized array.
    """
    if isinstance(cm, ConfusionMatrix):
        if positive_index in cm.empty_columns:
            raise ValueError("positive class column is empty")
        a = cm.normalized
    else:
        a = np.asarray(cm, dtype=float)
    pd = float(a[positive_index, positive_index])
    pfa = float(a[positive_index].sum() - pd)
    return pd, pfa


@dataclass
class EvalReport:
    accuracy: float
    balanced_accuracy: float
    pd_eq: float | None
    pfa_eq: float | None
    pfa_cond: float | None
    pd_cm: float | None
    pfa_cm: float | None
    confusion: ConfusionMatrix
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "confusion"}
        d["labels"] = list(self.confusion.labels)
        d["confusion_counts"] = self.confusion.counts.tolist()
        d["confusion_normalized"] = self.confusion.normalized.tolist()
        d["empty_columns"] = self.confusion.empty_columns
        return d


def evaluate(predictions, labels, names, positive_class: int = 1, metadata=None) -> EvalReport:
    cm = confusion(predictions, labels, len(names), names)
    try:
        pd_cm, pfa_cm = pd_pfa_from_confusion(cm, positive_class)
    except ValueError:
        pd_cm = pfa_cm = None
    return EvalReport(
        accuracy=accuracy(predictions, labels),
        balanced_accuracy=balanced_accuracy(predictions, labels, len(names)),
        pd_eq=pd_eq6(predictions, labels, positive_class),
        pfa_eq=pfa_eq5(predictions, labels, positive_class),
        pfa_cond=pfa_conditional(predictions, labels, positive_class),
        pd_cm=pd_cm,
        pfa_cm=pfa_cm,
        confusion=cm,
        metadata=dict(metadata or {}),
    )


def write_report(report: EvalReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_confusion_csv(cm: ConfusionMatrix, path, normalized: bool = True) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = cm.normalized if normalized else cm.counts
    names = list(cm.labels) or [str(i) for i in range(len(m))]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["predicted\\true"] + names)
        for name, row in zip(names, m.tolist()):
            w.writerow([name] + [repr(v) for v in row])
