"""Sliding-window correlation against the antipodal preamble template."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_sim import PREAMBLE_LEN, make_preamble
from .dataset import Dataset, positive_index

TEMPLATE = make_preamble().symbols


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    pd: float
    pfa: float


@dataclass
class CorrelatorConfig:
    template: np.ndarray = None
    thresholds: np.ndarray | None = None

    def __post_init__(self):
        if self.template is None:
            self.template = TEMPLATE
        if self.thresholds is not None:
            t = np.asarray(self.thresholds, dtype=float)
            if np.any(np.diff(t) <= 0):
                raise ValueError("thresholds must be strictly increasing")
            self.thresholds = t


def correlate_at(samples, n: int, template=TEMPLATE) -> float:
    samples = np.asarray(samples, dtype=float)
    L = len(template)
    if n < 0 or n + L > len(samples):
        raise IndexError(f"correlation offset {n} out of range for {len(samples)} samples")
    return float(np.dot(samples[n:n + L], template))


def correlate(samples, template=TEMPLATE) -> np.ndarray:
    """c(n) for every n with a full template overlap."""
    return np.correlate(np.asarray(samples, dtype=float), template, mode="valid")


def scores(X: np.ndarray, template=TEMPLATE) -> np.ndarray:
    """Correlation of each feature row's 16 sample columns with the template."""
    X = np.atleast_2d(X)
    return X[:, :PREAMBLE_LEN] @ template


def detect(x, threshold: float, template=TEMPLATE, n: int = 0) -> bool:
    """Preamble declared at offset ``n`` of ``x`` (a window or a feature vector) iff c(n) > threshold."""
    return correlate_at(x, n, template) > threshold


def default_thresholds(s: np.ndarray, count: int = 201, eps: float = 1e-6) -> np.ndarray:
    lo, hi = float(np.min(s)), float(np.max(s))
    return np.linspace(lo - eps, hi + eps, count)


def roc_from_scores(s: np.ndarray, positive: np.ndarray, thresholds) -> list[RocPoint]:
    """P_d / P_fa of the rule ``score > threshold`` for every threshold."""
    positive = np.asarray(positive, dtype=bool)
    pos = np.sort(s[positive])
    neg = np.sort(s[~positive])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("ROC needs both positive and negative samples")
    t = np.asarray(thresholds, dtype=float)
    pd = (len(pos) - np.searchsorted(pos, t, side="right")) / len(pos)
    pfa = (len(neg) - np.searchsorted(neg, t, side="right")) / len(neg)
    return [RocPoint(float(a), float(b), float(c)) for a, b, c in zip(t, pd, pfa)]


def roc_sweep(test: Dataset, cfg: CorrelatorConfig | None = None) -> list[RocPoint]:
    cfg = cfg or CorrelatorConfig()
    if test.scheme != "binary":
        raise ValueError(f"roc_sweep needs a binary-labelled set, got {test.scheme!r}")
    s = scores(test.X, cfg.template)
    thr = cfg.thresholds if cfg.thresholds is not None else default_thresholds(s)
    return roc_from_scores(s, test.y == positive_index("binary"), thr)


def best_pd_at(points: list[RocPoint], max_pfa: float) -> float:
    """Highest P_d among thresholds whose P_fa does not exceed ``max_pfa``."""
    ok = [p.pd for p in points if p.pfa <= max_pfa]
    return max(ok) if ok else 0.0


def write_roc(points: list[RocPoint], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "pd", "pfa"])
        for p in points:
            w.writerow([repr(p.threshold), repr(p.pd), repr(p.pfa)])


def read_roc(path) -> list[RocPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [RocPoint(float(r["threshold"]), float(r["pd"]), float(r["pfa"])) for r in rows]
