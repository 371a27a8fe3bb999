"""Observation-window extraction, 17-feature vectors and labelling schemes.

Every dataset row is ``[r_l .. r_{l+15}, sum(r^2)]`` taken at offset ``l`` of a
synthesized window, labelled from the window's ground-truth packet placements.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_sim import (
    PACKET_LEN,
    PREAMBLE_LEN,
    ScenarioConfig,
    SymbolWindow,
    synth_window,
    window_rng,
)

NUM_FEATURES = PREAMBLE_LEN + 1

SCHEMES: dict[str, tuple[str, ...]] = {
    "binary": ("np", "p"),
    "awgn6": ("n", "p", "n-p", "p-d", "d", "d-n"),
    "interf4": ("np", "p", "p+1", "p+m"),
}
# scenario each multi-class scheme is defined on; binary works on both
SCHEME_SCENARIO = {"awgn6": "awgn", "interf4": "interference"}
POSITIVE_LABEL = "p"

VECTORS_PER_WINDOW = {"awgn": 5, "interference": 15}


class DatasetFormatError(ValueError):
    """Malformed dataset file."""


def scheme_labels(scheme: str) -> tuple[str, ...]:
    try:
        return SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown label scheme {scheme!r}; expected one of {sorted(SCHEMES)}") from None


def positive_index(scheme: str) -> int:
    return scheme_labels(scheme).index(POSITIVE_LABEL)


def extract_features(window: SymbolWindow, l: int) -> np.ndarray:
    samples = window.samples if isinstance(window, SymbolWindow) else np.asarray(window, dtype=float)
    if not 0 <= l <= len(samples) - PREAMBLE_LEN:
        raise IndexError(f"offset {l} out of range for window of {len(samples)} samples")
    return _features_at(samples, np.array([l]))[0]


def _features_at(samples: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    idx = offsets[:, None] + np.arange(PREAMBLE_LEN)
    out = np.empty((len(offsets), NUM_FEATURES))
    out[:, :PREAMBLE_LEN] = samples[idx]
    out[:, PREAMBLE_LEN] = np.sum(np.square(out[:, :PREAMBLE_LEN]), axis=1)
    return out


def label_awgn6(window: SymbolWindow, l: int) -> str:
    if len(window.placements) != 1:
        raise ValueError("awgn6 labelling needs a single-packet window")
    s = window.placements[0]
    L, N = PREAMBLE_LEN, PACKET_LEN
    if l == s:
        return "p"
    if l < s < l + L:
        return "n-p"
    if s < l < s + L:
        return "p-d"
    if s + L <= l and l + L <= s + N:
        return "d"
    if l < s + N < l + L:
        return "d-n"
    return "n"


def interferer_count(window: SymbolWindow, l: int) -> int | None:
    """Number of other packets overlapping the preamble starting at ``l``; None if no packet starts there."""
    starts = list(window.placements)
    if l not in starts:
        return None
    starts.remove(l)
    return sum(1 for s in starts if s < l + PREAMBLE_LEN and l < s + PACKET_LEN)


def label_interf4(window: SymbolWindow, l: int) -> str:
    k = interferer_count(window, l)
    if k is None:
        return "np"
    return ("p", "p+1")[k] if k < 2 else "p+m"


def label_binary(window: SymbolWindow, l: int) -> str:
    return "p" if l in window.placements else "np"


LABELLERS = {"binary": label_binary, "awgn6": label_awgn6, "interf4": label_interf4}


def label_sample(window: SymbolWindow, l: int, scheme: str) -> str:
    return LABELLERS[scheme](window, l)


@dataclass
class Dataset:
    """Feature matrix ``X`` (n x 17), integer class codes ``y`` and their provenance."""

    X: np.ndarray
    y: np.ndarray
    window_index: np.ndarray
    offsets: np.ndarray
    scheme: str
    cfg: ScenarioConfig

    def __len__(self) -> int:
        return len(self.y)

    @property
    def labels(self) -> tuple[str, ...]:
        return scheme_labels(self.scheme)

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    @property
    def window_ids(self) -> list[str]:
        return [f"{self.cfg.seed}-{i}" for i in self.window_index]

    def label_tokens(self) -> list[str]:
        labs = self.labels
        return [labs[k] for k in self.y]

    def metadata(self) -> dict:
        return {**self.cfg.to_dict(), "scheme": self.scheme, "size": len(self)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.cfg == other.cfg
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.window_index, other.window_index)
            and np.array_equal(self.offsets, other.offsets)
        )


def check_scheme(cfg: ScenarioConfig, scheme: str) -> None:
    scheme_labels(scheme)
    need = SCHEME_SCENARIO.get(scheme)
    if need is not None and cfg.scenario != need:
        raise ValueError(f"scheme {scheme!r} is defined on the {need!r} scenario, not {cfg.scenario!r}")


def build_dataset(cfg: ScenarioConfig, scheme: str, target_size: int) -> Dataset:
    """Synthesize windows until ``target_size`` labelled vectors are collected.

    Per window: every packet-aligned offset plus enough uniform random offsets
    to make 5 (awgn) or 15 (interference) vectors. Window ``i`` draws from the
    stream ``(cfg.seed, i)`` so any window can be regenerated on its own.
    """
    if target_size <= 0:
        raise ValueError("target_size must be positive")
    check_scheme(cfg, scheme)
    labs = scheme_labels(scheme)
    code = {t: k for k, t in enumerate(labs)}
    labeller = LABELLERS[scheme]
    per_window = VECTORS_PER_WINDOW[cfg.scenario]
    n_random = per_window - cfg.num_packets
    if n_random < 0:
        raise ValueError("more packets per window than vectors per window")

    feats, ys, wins, offs = [], [], [], []
    collected = 0
    i = 0
    while collected < target_size:
        rng = window_rng(cfg.seed, i)
        win = synth_window(cfg, rng)
        rand = rng.integers(0, cfg.window_len - PREAMBLE_LEN + 1, size=n_random)
        o = np.concatenate([np.asarray(win.placements, dtype=np.int64), rand.astype(np.int64)])
        o = o[: target_size - collected]
        feats.append(_features_at(win.samples, o))
        ys.append([code[labeller(win, int(l))] for l in o])
        wins.append(np.full(len(o), i, dtype=np.int64))
        offs.append(o)
        collected += len(o)
        i += 1
    return Dataset(
        X=np.vstack(feats),
        y=np.concatenate([np.asarray(v, dtype=np.int64) for v in ys]),
        window_index=np.concatenate(wins),
        offsets=np.concatenate(offs),
        scheme=scheme,
        cfg=cfg,
    )


def regenerate_window(ds: Dataset, window_index: int) -> SymbolWindow:
    return synth_window(ds.cfg, window_rng(ds.cfg.seed, window_index))


def to_binary(ds: Dataset) -> Dataset:
    """Collapse a multi-class dataset: every packet-aligned class becomes ``p``."""
    if ds.scheme == "binary":
        return ds
    labs = ds.labels
    aligned = {"p", "p+1", "p+m"}
    y = np.array([1 if labs[k] in aligned else 0 for k in ds.y], dtype=np.int64)
    return Dataset(ds.X, y, ds.window_index, ds.offsets, "binary", ds.cfg)


# --- serialization -----------------------------------------------------------------

HEADER = [f"f{i}" for i in range(NUM_FEATURES)] + ["label", "window_id", "offset"]


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labs = ds.labels
    seed = ds.cfg.seed
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for row, k, wi, off in zip(ds.X.tolist(), ds.y.tolist(), ds.window_index.tolist(), ds.offsets.tolist()):
            w.writerow([repr(v) for v in row] + [labs[k], f"{seed}-{wi}", off])
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(ds.metadata(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dataset(path) -> Dataset:
    path = Path(path)
    meta_path = sidecar_path(path)
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetFormatError(f"missing metadata sidecar {meta_path}") from None
    scheme = meta["scheme"]
    cfg = ScenarioConfig.from_dict(meta)
    code = {t: k for k, t in enumerate(scheme_labels(scheme))}

    X, y, wins, offs = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise DatasetFormatError(f"{path}: unexpected header {header!r}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(HEADER):
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected {NUM_FEATURES} features + 3 fields, got {len(rec)} columns"
                )
            try:
                vals = [float(v) for v in rec[:NUM_FEATURES]]
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: bad feature value ({exc})") from None
            token = rec[NUM_FEATURES]
            if token not in code:
                raise DatasetFormatError(f"{path}:{lineno}: unknown label {token!r} for scheme {scheme!r}")
            wid = rec[NUM_FEATURES + 1]
            seed_s, _, idx_s = wid.rpartition("-")
            if seed_s != str(cfg.seed) or not idx_s.isdigit():
                raise DatasetFormatError(f"{path}:{lineno}: window id {wid!r} does not match seed {cfg.seed}")
            X.append(vals)
            y.append(code[token])
            wins.append(int(idx_s))
            offs.append(int(rec[NUM_FEATURES + 2]))
    if len(y) != meta.get("size", len(y)):
        raise DatasetFormatError(f"{path}: {len(y)} rows but metadata says {meta['size']}")
    return Dataset(
        X=np.asarray(X, dtype=np.float64).reshape(-1, NUM_FEATURES),
        y=np.asarray(y, dtype=np.int64),
        window_index=np.asarray(wins, dtype=np.int64),
        offsets=np.asarray(offs, dtype=np.int64),
        scheme=scheme,
        cfg=cfg,
    )
