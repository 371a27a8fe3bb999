"""Published-result reproduction: experiment recipes and pass/fail checks."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import correlator
from .cli import ExperimentSpec, CliError, cmd_eval, cmd_gen, cmd_train, spec_from_args
from .dataset import read_dataset, to_binary

# values reported for the original experiments
PUBLISHED = {
    "awgn0_nn_acc": 0.9771,
    "awgn0_rf_acc": 0.9502,
    "awgn8_corr": (0.96, 0.062),
    "awgn3_corr_pfa_at_pd90": 0.40,
    "awgn3_corr_pd_at_pfa003": 0.11,
    "awgn3_rf_pd_at_pfa003": 0.995,
    "awgn6_nn_acc": 0.6329,
    "awgn6_rf_acc": 0.6421,
    "awgn6_nn_pd_pfa": (0.9958, 0.0198),
    "awgn6_rf_pd_pfa": (0.9616, 0.0438),
    "interf4_nn_acc": 0.9335,
    "interf4_rf_acc": 0.8920,
    "interf4_nn_pd_pfa": (0.9714, 0.0272),
    "interf4_rf_pd_pfa": (0.9311, 0.0324),
    "interf4_nn_pm_mass": 0.4504 + 0.3804,
    "interf8_corr_pd_at_pfa01": 0.5734,
    "interf8_ml_pd": 0.98,
}

PUBLISHED_AWGN6 = {
    "nn": [
        [0.7956, 0.0018, 0.1326, 0.0054, 0.0060, 0.2233],
        [0, 0.9958, 0, 0.0054, 0.0072, 0.0072],
        [0.1169, 0, 0.6929, 0.0492, 0.1692, 0.1693],
        [0.0024, 0, 0.0120, 0.6425, 0.3221, 0.1813],
        [0.0006, 0.0006, 0.0738, 0.1956, 0.3965, 0.1447],
        [0.0845, 0.0018, 0.0888, 0.1020, 0.0990, 0.2743],
    ],
    "rf": [
        [0.8136, 0.0066, 0.1620, 0.0126, 0.0162, 0.2215],
        [0.0024, 0.9616, 0.0018, 0.0060, 0.0174, 0.0162],
        [0.0815, 0.0048, 0.6671, 0.0414, 0.1321, 0.0804],
        [0.0072, 0.0054, 0.0366, 0.6605, 0.3565, 0.1639],
        [0.0042, 0.0126, 0.0804, 0.1938, 0.3818, 0.1501],
        [0.0911, 0.0090, 0.0522, 0.0858, 0.0960, 0.3679],
    ],
}

PUBLISHED_INTERF4 = {
    "nn": [
        [0.9728, 0.0022, 0.0520, 0.1599],
        [0.0026, 0.9696, 0.0830, 0.0093],
        [0.0204, 0.0282, 0.8502, 0.4504],
        [0.0042, 0, 0.0149, 0.3804],
    ],
    "rf": [
        [0.9676, 0.0213, 0.1244, 0.2107],
        [0.0074, 0.9396, 0.1453, 0.0220],
        [0.0202, 0.0392, 0.7083, 0.5063],
        [0.0048, 0, 0.0220, 0.2610],
    ],
}


@dataclass
class Check:
    criterion: str
    name: str
    obtained: float | None
    bound: str
    published: float | None
    passed: bool

    def line(self) -> str:
        ob = "n/a" if self.obtained is None else f"{self.obtained:.4g}"
        pa = "" if self.published is None else f"{self.published:.4f}"
        return f"[{'PASS' if self.passed else 'FAIL'}] C{self.criterion:<3} {self.name:<44} {ob:>8}  {self.bound:<16} published {pa}"


def at_least(crit, name, value, lo, published=None) -> Check:
    return Check(crit, name, value, f">= {lo}", published, value is not None and value >= lo)


def at_most(crit, name, value, hi, published=None) -> Check:
    return Check(crit, name, value, f"<= {hi}", published, value is not None and value <= hi)


def within(crit, name, value, lo, hi, published=None) -> Check:
    return Check(crit, name, value, f"in [{lo}, {hi}]", published, value is not None and lo <= value <= hi)


# --- running cells ------------------------------------------------------------------


@dataclass
class CellResult:
    spec: ExperimentSpec
    snr: float
    reports: dict
    elapsed: float

    @property
    def directory(self):
        return self.spec.cell_dir(self.snr)

    def test_set(self):
        return read_dataset(self.directory / "test.csv")


def run_cell(base: ExperimentSpec, scenario: str, snr: float, scheme: str, detectors) -> CellResult:
    spec = replace(base, scenario=scenario, snr_db=(float(snr),), scheme=scheme, detectors=tuple(detectors)).validate()
    t0 = time.perf_counter()
    cmd_gen(spec)
    cmd_train(spec)
    reports = cmd_eval(spec)[float(snr)]
    return CellResult(spec, float(snr), reports, time.perf_counter() - t0)


def exact_corr_roc(cell: CellResult) -> list[correlator.RocPoint]:
    """ROC of the correlator at every distinct score, i.e. every achievable operating point."""
    test = to_binary(cell.test_set())
    s = correlator.scores(test.X)
    thr = np.concatenate([[-np.inf], np.unique(s)])
    return correlator.roc_from_scores(s, test.y == 1, thr)


def min_pfa_at(points, min_pd: float) -> float | None:
    ok = [p.pfa for p in points if p.pd >= min_pd]
    return min(ok) if ok else None


# --- criteria -----------------------------------------------------------------------


def criterion1(awgn0: CellResult) -> list[Check]:
    nn, rf = awgn0.reports["nn"], awgn0.reports["rf"]
    return [
        at_least("1", "AWGN 0dB binary NN accuracy", nn["accuracy"], 0.95, PUBLISHED["awgn0_nn_acc"]),
        at_least("1", "AWGN 0dB binary RF accuracy", rf["accuracy"], 0.92, PUBLISHED["awgn0_rf_acc"]),
        at_least("1", "AWGN 0dB binary NN P_d", nn["pd_eq"], 0.90),
        at_most("1", "AWGN 0dB binary NN P_fa (false share)", nn["pfa_eq"], 0.05),
        at_most("1", "AWGN 0dB gen+train+eval runtime [s]", awgn0.elapsed, 300.0),
    ]


def criterion2(awgn6: CellResult) -> list[Check]:
    nn, rf = awgn6.reports["nn"], awgn6.reports["rf"]
    return [
        within("2", "AWGN 3dB 6-class NN accuracy", nn["accuracy"], 0.58, 0.70, PUBLISHED["awgn6_nn_acc"]),
        within("2", "AWGN 3dB 6-class RF accuracy", rf["accuracy"], 0.59, 0.70, PUBLISHED["awgn6_rf_acc"]),
        at_least("2", "AWGN 3dB 6-class NN P_d (conf. matrix)", nn["pd_cm"], 0.95, PUBLISHED["awgn6_nn_pd_pfa"][0]),
        at_least("2", "AWGN 3dB 6-class RF P_d (conf. matrix)", rf["pd_cm"], 0.95, PUBLISHED["awgn6_rf_pd_pfa"][0]),
        at_most("2", "AWGN 3dB 6-class NN P_fa (conf. matrix)", nn["pfa_cm"], 0.06, PUBLISHED["awgn6_nn_pd_pfa"][1]),
        at_most("2", "AWGN 3dB 6-class RF P_fa (conf. matrix)", rf["pfa_cm"], 0.06, PUBLISHED["awgn6_rf_pd_pfa"][1]),
        at_least("2", "AWGN 3dB 6-class NN (p) column diagonal", nn["confusion_normalized"][1][1], 0.93),
        at_least("2", "AWGN 3dB 6-class RF (p) column diagonal", rf["confusion_normalized"][1][1], 0.93),
    ]


def criterion3(awgn8: CellResult, awgn3: CellResult) -> list[Check]:
    roc8 = exact_corr_roc(awgn8)
    best8 = max((p.pd for p in roc8 if p.pfa <= 0.09), default=None)
    roc3 = exact_corr_roc(awgn3)
    rf = awgn3.reports["rf"]
    return [
        at_least("3", "AWGN 8dB corr best P_d with P_fa <= 0.09", best8, 0.93, PUBLISHED["awgn8_corr"][0]),
        at_least("3", "AWGN 3dB corr min P_fa with P_d >= 0.90", min_pfa_at(roc3, 0.90), 0.30,
                 PUBLISHED["awgn3_corr_pfa_at_pd90"]),
        at_most("3", "AWGN 3dB corr best P_d with P_fa <= 0.003", correlator.best_pd_at(roc3, 0.003), 0.25,
                PUBLISHED["awgn3_corr_pd_at_pfa003"]),
        at_least("3", "AWGN 3dB RF P_d", rf["pd_eq"], 0.95, PUBLISHED["awgn3_rf_pd_at_pfa003"]),
        at_most("3", "AWGN 3dB RF P_fa (conditional)", rf["pfa_cond"], 0.003),
    ]


def criterion4(interf4: CellResult) -> list[Check]:
    nn, rf = interf4.reports["nn"], interf4.reports["rf"]
    a = nn["confusion_normalized"]
    pm = a[2][3] + a[3][3]
    return [
        within("4", "Interf 3dB 4-class NN accuracy", nn["accuracy"], 0.90, 0.96, PUBLISHED["interf4_nn_acc"]),
        within("4", "Interf 3dB 4-class RF accuracy", rf["accuracy"], 0.85, 0.93, PUBLISHED["interf4_rf_acc"]),
        at_least("4", "Interf 3dB 4-class NN P_d", nn["pd_eq"], 0.94, PUBLISHED["interf4_nn_pd_pfa"][0]),
        at_most("4", "Interf 3dB 4-class NN P_fa (false share)", nn["pfa_eq"], 0.06, PUBLISHED["interf4_nn_pd_pfa"][1]),
        at_least("4", "Interf 3dB NN p+m column on {p+1, p+m}", pm, 0.70, PUBLISHED["interf4_nn_pm_mass"]),
    ]


def criterion5(interf8: CellResult) -> list[Check]:
    roc = exact_corr_roc(interf8)
    checks = [
        within("5", "Interf 8dB corr best P_d with P_fa <= 0.01", correlator.best_pd_at(roc, 0.01), 0.45, 0.70,
               PUBLISHED["interf8_corr_pd_at_pfa01"]),
    ]
    for det in ("nn", "rf"):
        r = interf8.reports[det]
        checks += [
            at_least("5", f"Interf 8dB {det.upper()} P_d", r["pd_eq"], 0.95, PUBLISHED["interf8_ml_pd"]),
            at_most("5", f"Interf 8dB {det.upper()} P_fa (false share)", r["pfa_eq"], 0.03),
        ]
    return checks


# --- targets ------------------------------------------------------------------------


def _print_matrix(title, labels, ours, published):
    print(f"\n{title}  (rows predicted, columns true; obtained / published)")
    print(" " * 6 + "".join(f"{l:>16}" for l in labels))
    for i, l in enumerate(labels):
        cells = "".join(f"{ours[i][j]:>8.4f}/{published[i][j]:<7.4f}" for j in range(len(labels)))
        print(f"{l:<6}{cells}")


def _ml_points(cell: CellResult):
    for det in ("nn", "rf"):
        r = cell.reports.get(det)
        if r:
            print(f"  {cell.directory.name:<26} {det.upper()}: A={r['accuracy']:.4f} balanced A={r['balanced_accuracy']:.4f} "
                  f"P_d={r['pd_eq']:.4f} P_fa(false share)={r['pfa_eq'] if r['pfa_eq'] is None else round(r['pfa_eq'], 4)} "
                  f"P_fa(cond)={r['pfa_cond']:.4f}")


def _corr_summary(cell: CellResult):
    roc = exact_corr_roc(cell)
    print(f"  {cell.directory.name:<26} corr: P_d@P_fa<=0.01 {correlator.best_pd_at(roc, 0.01):.4f}  "
          f"P_d@P_fa<=0.062 {correlator.best_pd_at(roc, 0.062):.4f}  min P_fa@P_d>=0.9 {min_pfa_at(roc, 0.9):.4f}")


def target_fig3(base):
    cells = {snr: run_cell(base, "awgn", snr, "binary", ("corr", "nn", "rf")) for snr in (0.0, 3.0, 8.0)}
    for c in cells.values():
        _corr_summary(c)
        _ml_points(c)
    return criterion1(cells[0.0]) + criterion3(cells[8.0], cells[3.0])


def target_table2(base):
    cell = run_cell(base, "awgn", 3.0, "awgn6", ("nn", "rf"))
    _ml_points(cell)
    for det in ("nn", "rf"):
        r = cell.reports[det]
        _print_matrix(f"{det.upper()} AWGN 3 dB", r["labels"], r["confusion_normalized"], PUBLISHED_AWGN6[det])
    return criterion2(cell)


def target_fig4(base):
    cells = {snr: run_cell(base, "interference", snr, "binary", ("corr", "nn", "rf")) for snr in (0.0, 3.0, 8.0)}
    for c in cells.values():
        _corr_summary(c)
        _ml_points(c)
    return criterion5(cells[8.0])


def target_table3(base):
    cell = run_cell(base, "interference", 3.0, "interf4", ("nn", "rf"))
    _ml_points(cell)
    for det in ("nn", "rf"):
        r = cell.reports[det]
        _print_matrix(f"{det.upper()} interference 3 dB", r["labels"], r["confusion_normalized"], PUBLISHED_INTERF4[det])
    return criterion4(cell)


TARGETS = {"fig3": target_fig3, "fig4": target_fig4, "table2": target_table2, "table3": target_table3}


def run_target(target: str, args=None) -> list[Check]:
    if target not in TARGETS:
        raise CliError(f"unknown repro target {target!r}; valid: {', '.join(sorted(TARGETS))}")
    base = spec_from_args(args) if args is not None else ExperimentSpec()
    print(f"== {target} ==")
    checks = TARGETS[target](base)
    print()
    for c in checks:
        print(c.line())
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return checks
