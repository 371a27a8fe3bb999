"""Command-line driver: ``gen``, ``train``, ``eval`` and ``repro``.

Every cell of an experiment (scenario, SNR, scheme) lives in its own directory
under ``--out``; files are deterministic functions of the experiment settings.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import correlator, forest, metrics, mlp
from .channel_sim import ScenarioConfig
from .dataset import (
    Dataset,
    DatasetFormatError,
    build_dataset,
    check_scheme,
    positive_index,
    read_dataset,
    to_binary,
    write_dataset,
)

log = logging.getLogger("preambledet")

DETECTORS = ("corr", "nn", "rf")


class CliError(Exception):
    """Usage or pipeline error reported to the user with a nonzero exit code."""


class SchemeMismatch(CliError):
    pass


@dataclass
class ExperimentSpec:
    scenario: str = "awgn"
    snr_db: tuple[float, ...] = (3.0,)
    scheme: str = "binary"
    detectors: tuple[str, ...] = DETECTORS
    seed_train: int = 1001
    seed_test: int = 2002
    size: int = 10_000
    out: str = "runs"
    model_seed: int = 7
    epochs: int = 200
    learning_rate: float = 0.01
    batch_size: int = 32
    patience: int | None = 25
    trees: int = forest.N_TREES

    def validate(self) -> "ExperimentSpec":
        if self.size <= 0:
            raise CliError(f"--size must be positive, got {self.size}")
        if self.seed_train == self.seed_test:
            raise CliError("train and test seeds must differ")
        bad = [d for d in self.detectors if d not in DETECTORS]
        if bad:
            raise CliError(f"unknown detector(s) {bad}; choose from {list(DETECTORS)}")
        try:
            for snr in self.snr_db:
                check_scheme(ScenarioConfig(self.scenario, snr), self.scheme)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        return self

    def cell_dir(self, snr: float) -> Path:
        return Path(self.out) / f"{self.scenario}-{snr:g}dB-{self.scheme}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_db"] = [float(s) for s in self.snr_db]
        d["detectors"] = list(self.detectors)
        return d

    def train_config(self) -> mlp.TrainConfig:
        return mlp.TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.model_seed,
            patience=self.patience,
        )


# --- config handling ----------------------------------------------------------------


def _split_list(v) -> list[str]:
    if isinstance(v, (list, tuple)):
        return [str(x) for x in v]
    return [s.strip() for s in str(v).split(",") if s.strip()]


def _coerce(name: str, value):
    if name == "snr_db":
        return tuple(float(s) for s in _split_list(value))
    if name == "detectors":
        return tuple(_split_list(value))
    if name == "patience":
        return None if str(value).lower() in ("none", "off", "") else int(value)
    if name in ("seed_train", "seed_test", "size", "model_seed", "epochs", "batch_size", "trees"):
        return int(value)
    if name == "learning_rate":
        return float(value)
    return str(value)


# config-file / flag spellings that differ from the field name
ALIASES = {"snr": "snr_db", "detector": "detectors", "lr": "learning_rate"}


def load_config(path) -> dict:
    """Plain-text ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    known = {f.name for f in fields(ExperimentSpec)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = ALIASES.get(key, key)
        if key not in known:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def spec_from_args(args, base: ExperimentSpec | None = None) -> ExperimentSpec:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for f in fields(ExperimentSpec):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    try:
        coerced = {k: _coerce(k, v) for k, v in values.items()}
    except ValueError as exc:
        raise CliError(f"bad setting: {exc}") from None
    return replace(base or ExperimentSpec(), **coerced).validate()


# --- output helpers -----------------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_meta(csv_path: Path, spec: ExperimentSpec, snr: float, **extra) -> None:
    """Sidecar recording which experiment produced a CSV output."""
    _write_json(csv_path.with_suffix(".meta.json"), {"experiment": spec.to_dict(), "snr_db": snr, **extra})


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_split(spec: ExperimentSpec, snr: float, split: str) -> Dataset:
    path = spec.cell_dir(snr) / f"{split}.csv"
    if not path.exists():
        raise CliError(f"missing dataset {path}; run `preambledet gen` first")
    try:
        return read_dataset(path)
    except (DatasetFormatError, KeyError) as exc:
        raise CliError(f"bad dataset {path}: {exc}") from None


# --- subcommands --------------------------------------------------------------------


def cmd_gen(spec: ExperimentSpec) -> list[Path]:
    written = []
    for snr in spec.snr_db:
        d = spec.cell_dir(snr)
        for split, seed in (("train", spec.seed_train), ("test", spec.seed_test)):
            ds = build_dataset(ScenarioConfig(spec.scenario, snr, seed=seed), spec.scheme, spec.size)
            path = d / f"{split}.csv"
            write_dataset(ds, path)
            written.append(path)
            log.info("wrote %s (%d rows)", path, len(ds))
    return written


def cmd_train(spec: ExperimentSpec) -> list[Path]:
    written = []
    for snr in spec.snr_db:
        d = spec.cell_dir(snr)
        train_set = None
        for det in spec.detectors:
            if det == "corr":
                log.warning("corr: correlation needs no training, skipping")
                continue
            if train_set is None:
                train_set = _read_split(spec, snr, "train")
            meta = {"experiment": spec.to_dict(), "snr_db": snr, "train_seed": spec.seed_train}
            t0 = time.perf_counter()
            if det == "nn":
                model = mlp.init_model(train_set.num_classes, np.random.default_rng([spec.model_seed, 0]))
                try:
                    model = mlp.train(model, train_set, spec.train_config())
                except mlp.TrainingDiverged as exc:
                    raise CliError(f"nn training diverged: {exc}") from None
                path = d / "nn.json"
                mlp.save_model(model, path, meta)
                log_path = d / "nn_log.csv"
                _write_rows(log_path, ["epoch", "loss", "val_accuracy"],
                            [[h["epoch"], repr(h["loss"]), repr(h["val_accuracy"])] for h in model.history])
            else:
                model = forest.train_forest(train_set, seed=spec.model_seed, n_trees=spec.trees)
                path = d / "rf.json"
                forest.save_forest(model, path, meta)
                log_path = d / "rf_log.csv"
                _write_rows(log_path, ["tree", "depth", "nodes", "leaves"],
                            [[s["tree"], s["depth"], s["nodes"], s["leaves"]] for s in model.stats()])
            _write_meta(log_path, spec, snr)
            log.info("trained %s for %s in %.1fs", det, d, time.perf_counter() - t0)
            written += [path, log_path]
    return written


def _load_detector(det: str, path: Path):
    if not path.exists():
        raise CliError(f"missing model {path}; run `preambledet train` first")
    try:
        return mlp.load_model(path) if det == "nn" else forest.load_forest(path)
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad model file {path}: {exc}") from None


def evaluate_model(det: str, model, test: Dataset, metadata=None) -> metrics.EvalReport:
    if model.scheme != test.scheme or tuple(model.labels) != test.labels:
        raise SchemeMismatch(
            f"{det} model was trained for scheme {model.scheme!r} ({len(model.labels)} classes) "
            f"but the test set uses {test.scheme!r} ({test.num_classes} classes)"
        )
    pred = mlp.predict(model, test.X) if det == "nn" else forest.predict_forest(model, test.X)
    return metrics.evaluate(pred, test.y, test.labels, positive_index(test.scheme), metadata)


def cmd_eval(spec: ExperimentSpec, model_paths: dict | None = None) -> dict:
    """Evaluate every requested detector; returns ``{snr: {detector: report-dict}}``."""
    results = {}
    for snr in spec.snr_db:
        d = spec.cell_dir(snr)
        test = _read_split(spec, snr, "test")
        meta = {
            "experiment": spec.to_dict(),
            "scenario": spec.scenario,
            "snr_db": snr,
            "scheme": test.scheme,
            "seed_train": spec.seed_train,
            "seed_test": spec.seed_test,
            "model_seed": spec.model_seed,
        }
        cell = {}
        for det in spec.detectors:
            if det == "corr":
                points = correlator.roc_sweep(to_binary(test))
                roc_path = d / "corr_roc.csv"
                correlator.write_roc(points, roc_path)
                _write_meta(roc_path, spec, snr, detector="corr")
                rep = {**meta, "detector": "corr", "roc_file": roc_path.name, "roc_points": len(points)}
                _write_json(d / "corr_report.json", rep)
                cell["corr"] = rep
                continue
            path = Path((model_paths or {}).get(det, d / f"{det}.json"))
            model = _load_detector(det, path)
            report = evaluate_model(det, model, test, {**meta, "detector": det})
            metrics.write_report(report, d / f"{det}_report.json")
            cm_path = d / f"{det}_confusion.csv"
            metrics.write_confusion_csv(report.confusion, cm_path)
            _write_meta(cm_path, spec, snr, detector=det)
            cell[det] = report.to_dict()
            log.info("%s %s: accuracy %.4f", d.name, det, report.accuracy)
        results[snr] = cell
    return results


# --- entry point --------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key = value settings file")
    p.add_argument("--scenario", choices=("awgn", "interference"))
    p.add_argument("--snr", dest="snr_db", help="SNR in dB, comma-separated list")
    p.add_argument("--scheme", choices=("binary", "awgn6", "interf4"))
    p.add_argument("--detector", dest="detectors", help="comma-separated subset of corr,nn,rf")
    p.add_argument("--size", type=int, help="vectors per dataset (default 10000)")
    p.add_argument("--seed-train", type=int)
    p.add_argument("--seed-test", type=int)
    p.add_argument("--model-seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--patience", help="early-stop patience in epochs, or 'none'")
    p.add_argument("--trees", type=int)
    p.add_argument("--out", help="output directory (default runs/)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preambledet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("gen", "generate train/test datasets"),
        ("train", "train the nn / rf detectors"),
        ("eval", "evaluate detectors on the test set"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    p = sub.add_parser("repro", help="run a full experiment and compare with the published values")
    p.add_argument("target", help="one of: " + ", ".join(_repro_targets()))
    p.add_argument("--strict", action="store_true", help="exit 1 when any check fails")
    _add_common(p)
    return parser


def _repro_targets():
    from .repro import TARGETS

    return sorted(TARGETS)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "repro":
            from .repro import run_target

            checks = run_target(args.target, args)
            return 1 if args.strict and not all(c.passed for c in checks) else 0
        spec = spec_from_args(args)
        if args.command == "gen":
            for p in cmd_gen(spec):
                print(p)
        elif args.command == "train":
            for p in cmd_train(spec):
                print(p)
        else:
            res = cmd_eval(spec)
            for snr, cell in res.items():
                for det, rep in cell.items():
                    if det == "corr":
                        print(f"{spec.cell_dir(snr).name} corr: {rep['roc_points']} ROC points -> {rep['roc_file']}")
                    else:
                        print(f"{spec.cell_dir(snr).name} {det}: A={rep['accuracy']:.4f} "
                              f"Pd={_fmt(rep['pd_eq'])} Pfa(false share)={_fmt(rep['pfa_eq'])} Pfa(cond)={_fmt(rep['pfa_cond'])}")
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


if __name__ == "__main__":
    raise SystemExit(main())
