"""Random forest of information-gain decision trees with majority voting."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, scheme_labels
from .kernels import get_best_split

N_TREES = 100
FEATURES_PER_SPLIT = 4
MIN_IG = 0.01
# candidates within this much of the best gain count as ties (lowest feature, then threshold wins)
TIE_TOL = 1e-12


def entropy(counts) -> float:
    """Shannon entropy in bits of a class-count vector."""
    c = [int(v) for v in counts]
    if any(v < 0 for v in c):
        raise ValueError("counts must be non-negative")
    total = sum(c)
    if total == 0:
        raise ValueError("entropy of an empty node is undefined")
    h = 0.0
    for v in c:
        if v:
            p = v / total
            h -= p * math.log2(p)
    return h


def information_gain(parent, left, right) -> float:
    parent, left, right = (np.asarray(c, dtype=np.int64) for c in (parent, left, right))
    if not np.array_equal(left + right, parent):
        raise ValueError("children counts must add up to the parent")
    nl, nr, n = int(left.sum()), int(right.sum()), int(parent.sum())
    if nl == 0 or nr == 0:
        raise ValueError("both children must be non-empty")
    return entropy(parent) - nl / n * entropy(left) - nr / n * entropy(right)


class _Tables:
    """c*log2(c) and log2(n) lookups shared by both kernel backends."""

    def __init__(self, n: int):
        c = np.arange(n + 1, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.clogc = np.where(c > 0, c * np.log2(c), 0.0)
            self.log2n = np.where(c > 0, np.log2(c), 0.0)


def best_split(X, y, idx, features, n_classes: int, backend: str | None = None, tables=None):
    """Best (feature, threshold, gain) over midpoints of distinct sorted values, or None."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    idx = np.ascontiguousarray(idx, dtype=np.intp)
    features = np.ascontiguousarray(np.sort(np.asarray(features)), dtype=np.intp)
    tables = tables or _Tables(len(idx))
    f, t, ig = get_best_split(backend)(X, y, idx, features, n_classes, tables.clogc, tables.log2n, TIE_TOL)
    if f < 0:
        return None
    return int(f), float(t), float(ig)


@dataclass
class Tree:
    """Array-backed binary tree; ``feature[i] == -1`` marks a leaf carrying ``label[i]``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        d = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return int(d.max())

    def leaf_count(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of X."""
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        return self.label[self.apply(X)]

    def to_dict(self, labels, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"label": labels[self.label[i]]}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_dict(labels, int(self.left[i])),
            "right": self.to_dict(labels, int(self.right[i])),
        }

    @classmethod
    def from_dict(cls, d: dict, labels) -> "Tree":
        code = {t: k for k, t in enumerate(labels)}
        feat, thr, lo, hi, lab = [], [], [], [], []

        def add(node):
            i = len(feat)
            feat.append(-1)
            thr.append(0.0)
            lo.append(-1)
            hi.append(-1)
            lab.append(-1)
            if "label" in node:
                lab[i] = code[node["label"]]
            else:
                feat[i] = int(node["feature"])
                thr[i] = float(node["threshold"])
                lo[i] = add(node["left"])
                hi[i] = add(node["right"])
            return i

        add(d)
        return cls(
            np.array(feat, dtype=np.int64),
            np.array(thr),
            np.array(lo, dtype=np.int64),
            np.array(hi, dtype=np.int64),
            np.array(lab, dtype=np.int64),
        )


def grow_tree(
    X,
    y,
    n_classes: int,
    rng: np.random.Generator,
    features_per_split: int = FEATURES_PER_SPLIT,
    min_ig: float = MIN_IG,
    backend: str | None = None,
) -> Tree:
    """Top-down growth; a node becomes a leaf when pure, unsplittable, or its best gain is below ``min_ig``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    if len(y) == 0:
        raise ValueError("cannot grow a tree on an empty sample")
    m = X.shape[1]
    k = min(features_per_split, m)
    split = get_best_split(backend)
    tables = _Tables(len(y))

    feat, thr, lo, hi, lab = [], [], [], [], []

    def new_node():
        feat.append(-1)
        thr.append(0.0)
        lo.append(-1)
        hi.append(-1)
        lab.append(-1)
        return len(feat) - 1

    root = new_node()
    stack = [(root, np.arange(len(y), dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        lab[node] = int(np.argmax(counts))
        if np.count_nonzero(counts) <= 1 or len(idx) < 2:
            continue
        fs = np.arange(m, dtype=np.intp) if k == m else np.sort(rng.choice(m, size=k, replace=False)).astype(np.intp)
        f, t, ig = split(X, y, idx, fs, n_classes, tables.clogc, tables.log2n, TIE_TOL)
        if f < 0 or ig < min_ig:
            continue
        go_left = X[idx, f] <= t
        feat[node], thr[node] = int(f), float(t)
        lo[node], hi[node] = new_node(), new_node()
        # right pushed first so the left subtree is expanded first
        stack.append((hi[node], idx[~go_left]))
        stack.append((lo[node], idx[go_left]))
    return Tree(
        np.array(feat, dtype=np.int64),
        np.array(thr),
        np.array(lo, dtype=np.int64),
        np.array(hi, dtype=np.int64),
        np.array(lab, dtype=np.int64),
    )


@dataclass
class ForestModel:
    trees: list[Tree]
    labels: tuple[str, ...]
    scheme: str | None = None
    features_per_split: int = FEATURES_PER_SPLIT
    min_ig: float = MIN_IG
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def stats(self) -> list[dict]:
        return [{"tree": i, "depth": t.depth(), "nodes": t.node_count, "leaves": t.leaf_count()} for i, t in enumerate(self.trees)]


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(tree_index)])


def train_forest(
    train_set: Dataset,
    seed: int = 0,
    n_trees: int = N_TREES,
    features_per_split: int = FEATURES_PER_SPLIT,
    min_ig: float = MIN_IG,
    bootstrap: bool = True,
    backend: str | None = None,
) -> ForestModel:
    """Grow ``n_trees`` trees, each on its own bootstrap resample and random stream ``(seed, i)``."""
    if len(train_set) == 0:
        raise ValueError("empty training set")
    X, y = train_set.X, train_set.y
    n = len(y)
    trees = []
    for t in range(n_trees):
        rng = tree_rng(seed, t)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(grow_tree(X[rows], y[rows], train_set.num_classes, rng, features_per_split, min_ig, backend))
    return ForestModel(
        trees=trees,
        labels=scheme_labels(train_set.scheme),
        scheme=train_set.scheme,
        features_per_split=features_per_split,
        min_ig=min_ig,
        seed=seed,
        metadata={"n_trees": n_trees, "bootstrap": bootstrap, "train_size": n},
    )


def forest_votes(model: ForestModel, X) -> np.ndarray:
    """Per-class vote counts, shape (n, K)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    votes = np.zeros((len(X), model.num_classes), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in model.trees:
        np.add.at(votes, (rows, tree.predict(X)), 1)
    return votes


def majority(votes: np.ndarray) -> np.ndarray:
    # argmax picks the first maximum: vote ties go to the lowest class index
    return np.argmax(votes, axis=-1)


def predict_forest(model: ForestModel, x) -> np.ndarray:
    single = np.ndim(x) == 1
    out = majority(forest_votes(model, x))
    return out[0] if single else out


def save_forest(model: ForestModel, path, extra: dict | None = None) -> None:
    d = {
        "kind": "forest",
        "labels": list(model.labels),
        "scheme": model.scheme,
        "features_per_split": model.features_per_split,
        "min_ig": model.min_ig,
        "seed": model.seed,
        "metadata": {**model.metadata, **(extra or {})},
        "trees": [t.to_dict(model.labels) for t in model.trees],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(d, sort_keys=True) + "\n", encoding="utf-8")


def load_forest(path) -> ForestModel:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("kind") != "forest":
        raise ValueError(f"{path} is not a forest model file")
    labels = tuple(d["labels"])
    return ForestModel(
        trees=[Tree.from_dict(t, labels) for t in d["trees"]],
        labels=labels,
        scheme=d.get("scheme"),
        features_per_split=int(d["features_per_split"]),
        min_ig=float(d["min_ig"]),
        seed=d.get("seed"),
        metadata=d.get("metadata", {}),
    )
