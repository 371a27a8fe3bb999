"""Fully connected ReLU network with softmax output, trained by mini-batch gradient descent."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import NUM_FEATURES, Dataset, scheme_labels

log = logging.getLogger(__name__)

HIDDEN_SIZES = (325, 320)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    validation_fraction: float = 0.1
    # stop after this many epochs without a validation improvement; None runs every epoch
    patience: int | None = 25

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class MlpModel:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    labels: tuple[str, ...] = ()
    scheme: str | None = None
    train_config: dict | None = None
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            None if self.mean is None else self.mean.copy(),
            None if self.std is None else self.std.copy(),
            self.labels,
            self.scheme,
            self.train_config,
            list(self.history),
        )


def init_model(K: int, rng: np.random.Generator, hidden=HIDDEN_SIZES, n_in: int = NUM_FEATURES) -> MlpModel:
    """He-scaled Gaussian weights, zero biases."""
    if K < 2:
        raise ValueError("need at least two classes")
    sizes = [n_in, *hidden, K]
    weights = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return MlpModel(sizes, weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _normalize(model: MlpModel, X: np.ndarray) -> np.ndarray:
    if model.mean is None:
        return X
    return (X - model.mean) / model.std


def _forward_raw(model: MlpModel, Z: np.ndarray):
    """Forward pass on already-normalized inputs, keeping activations for backprop."""
    acts = [Z]
    h = Z
    last = len(model.weights) - 1
    for j, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        h = z if j == last else np.maximum(z, 0.0)
        acts.append(h)
    return _softmax(h), acts


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for one feature vector (returns K) or a batch (returns n x K)."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.layer_sizes[0]:
        raise ValueError(f"expected {model.layer_sizes[0]} features, got {X.shape[1]}")
    probs, _ = _forward_raw(model, _normalize(model, X))
    return probs[0] if single else probs


def predict(model: MlpModel, x) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(forward(model, x), axis=-1)


def _loss_grads_normalized(model: MlpModel, Z: np.ndarray, y: np.ndarray):
    n = len(y)
    probs, acts = _forward_raw(model, Z)
    p_true = probs[np.arange(n), y]
    with np.errstate(divide="ignore"):
        loss = float(-np.mean(np.log(p_true)))
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    gW = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for j in range(len(model.weights) - 1, -1, -1):
        gW[j] = acts[j].T @ delta
        gb[j] = delta.sum(axis=0)
        if j > 0:
            delta = (delta @ model.weights[j].T) * (acts[j] > 0)
    return loss, gW, gb


def loss_and_gradients(model: MlpModel, X, y):
    """Mean cross-entropy over the batch and its gradient for every weight and bias.

    Gradients are taken with respect to the raw parameters; the stored input
    normalization (if any) is applied first and treated as a constant.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("empty batch")
    return _loss_grads_normalized(model, _normalize(model, X), y)


def _accuracy(model: MlpModel, Z: np.ndarray, y: np.ndarray) -> float:
    probs, _ = _forward_raw(model, Z)
    return float(np.mean(np.argmax(probs, axis=1) == y))


def train(model: MlpModel, train_set: Dataset, cfg: TrainConfig | None = None) -> MlpModel:
    """Fit normalization, run mini-batch gradient descent and return the best-validation snapshot."""
    cfg = cfg or TrainConfig()
    if train_set.num_classes != model.num_classes:
        raise ValueError(
            f"model has {model.num_classes} outputs but scheme {train_set.scheme!r} has {train_set.num_classes} classes"
        )
    model = model.copy()
    model.labels = scheme_labels(train_set.scheme)
    model.scheme = train_set.scheme
    model.train_config = asdict(cfg)

    rng = np.random.default_rng(cfg.seed)
    X, y = train_set.X, train_set.y
    perm = rng.permutation(len(y))
    n_val = int(round(cfg.validation_fraction * len(y)))
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    if len(tr_idx) == 0:
        raise ValueError("no training samples left after the validation split")

    model.mean = X[tr_idx].mean(axis=0)
    std = X[tr_idx].std(axis=0)
    std[std == 0] = 1.0
    model.std = std
    Z = (X - model.mean) / model.std
    Ztr, ytr = Z[tr_idx], y[tr_idx]
    Zval, yval = (Z[val_idx], y[val_idx]) if n_val else (Ztr, ytr)

    best = model.copy()
    best_acc = -1.0
    since_best = 0
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(ytr))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            b = order[start:start + cfg.batch_size]
            loss, gW, gb = _loss_grads_normalized(model, Ztr[b], ytr[b])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch starting {start}")
            total += loss * len(b)
            for W, g in zip(model.weights, gW):
                W -= cfg.learning_rate * g
            for bias, g in zip(model.biases, gb):
                bias -= cfg.learning_rate * g
        val_acc = _accuracy(model, Zval, yval)
        history.append({"epoch": epoch, "loss": total / len(ytr), "val_accuracy": val_acc})
        log.debug("epoch %d loss %.5f val_acc %.4f", epoch, total / len(ytr), val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best = model.copy()
            since_best = 0
        else:
            since_best += 1
            if cfg.patience is not None and since_best >= cfg.patience:
                break
    best.history = history
    return best


# --- persistence --------------------------------------------------------------------


def save_model(model: MlpModel, path, extra: dict | None = None) -> None:
    d = {
        "kind": "mlp",
        "layer_sizes": model.layer_sizes,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "mean": None if model.mean is None else model.mean.tolist(),
        "std": None if model.std is None else model.std.tolist(),
        "labels": list(model.labels),
        "scheme": model.scheme,
        "train_config": model.train_config,
    }
    if extra:
        d["metadata"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(d, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> MlpModel:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("kind") != "mlp":
        raise ValueError(f"{path} is not an mlp model file")
    sizes = [int(s) for s in d["layer_sizes"]]
    weights = [np.asarray(w, dtype=float).reshape(a, b) for w, a, b in zip(d["weights"], sizes[:-1], sizes[1:])]
    biases = [np.asarray(b, dtype=float) for b in d["biases"]]
    return MlpModel(
        sizes,
        weights,
        biases,
        None if d["mean"] is None else np.asarray(d["mean"], dtype=float),
        None if d["std"] is None else np.asarray(d["std"], dtype=float),
        tuple(d.get("labels", ())),
        d.get("scheme"),
        d.get("train_config"),
    )
