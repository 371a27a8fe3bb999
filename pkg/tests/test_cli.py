import json

import pytest

from preambledet import forest, mlp
from preambledet.cli import ExperimentSpec, SchemeMismatch, cmd_eval, evaluate_model, load_config, main
from preambledet.dataset import read_dataset

FAST = ["--size", "400", "--epochs", "2", "--trees", "5"]


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_gen_writes_disjoint_splits(tmp_path):
    assert run(tmp_path, "gen", "--scenario", "awgn", "--snr", "3", *FAST) == 0
    cell = tmp_path / "awgn-3dB-binary"
    train = read_dataset(cell / "train.csv")
    test = read_dataset(cell / "test.csv")
    assert len(train) == len(test) == 400
    assert not set(train.window_ids) & set(test.window_ids)


def test_gen_is_byte_reproducible(tmp_path):
    args = ("gen", "--scenario", "interference", "--snr", "8", "--scheme", "interf4", *FAST)
    run(tmp_path, *args)
    first = (tmp_path / "interference-8dB-interf4" / "train.csv").read_bytes()
    run(tmp_path, *args)
    assert (tmp_path / "interference-8dB-interf4" / "train.csv").read_bytes() == first


def test_zero_size_rejected(tmp_path, capsys):
    assert run(tmp_path, "gen", "--size", "0") == 2
    assert "size" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_equal_seeds_rejected(tmp_path):
    assert run(tmp_path, "gen", "--seed-train", "5", "--seed-test", "5", *FAST) == 2


def test_scheme_needs_matching_scenario(tmp_path):
    assert run(tmp_path, "gen", "--scenario", "awgn", "--scheme", "interf4", *FAST) == 2


def test_corr_training_is_a_notice(tmp_path, caplog):
    run(tmp_path, "gen", "--snr", "3", *FAST)
    with caplog.at_level("WARNING"):
        assert run(tmp_path, "train", "--snr", "3", "--detector", "corr", *FAST) == 0
    assert "no training" in caplog.text
    assert not list((tmp_path / "awgn-3dB-binary").glob("*.json.*"))
    assert not (tmp_path / "awgn-3dB-binary" / "corr.json").exists()


def test_full_pipeline_outputs(tmp_path):
    args = ("--scenario", "awgn", "--snr", "3", "--scheme", "awgn6", *FAST)
    for cmd in ("gen", "train", "eval"):
        assert run(tmp_path, cmd, *args) == 0
    cell = tmp_path / "awgn-3dB-awgn6"
    assert mlp.load_model(cell / "nn.json").layer_sizes == [17, 325, 320, 6]
    assert len(forest.load_forest(cell / "rf.json").trees) == 5
    rep = json.loads((cell / "nn_report.json").read_text())
    assert len(rep["confusion_counts"]) == 6
    assert rep["metadata"]["seed_train"] == 1001
    for name in ("nn_log", "rf_log", "nn_confusion", "rf_confusion", "corr_roc"):
        meta = json.loads((cell / f"{name}.meta.json").read_text())
        assert meta["experiment"]["scheme"] == "awgn6"
    assert (cell / "corr_roc.csv").read_text().splitlines()[0] == "threshold,pd,pfa"


def test_default_forest_size(tmp_path):
    args = ("--snr", "0", "--detector", "rf", "--size", "300")
    run(tmp_path, "gen", *args)
    run(tmp_path, "train", *args)
    assert len(forest.load_forest(tmp_path / "awgn-0dB-binary" / "rf.json").trees) == 100


def test_pipeline_is_deterministic(tmp_path):
    args = ("--scenario", "interference", "--snr", "3", "--scheme", "interf4", *FAST)
    reports = []
    for _ in range(2):
        for cmd in ("gen", "train", "eval"):
            run(tmp_path, cmd, *args)
        cell = tmp_path / "interference-3dB-interf4"
        reports.append([(cell / f).read_bytes() for f in ("nn_report.json", "rf_report.json", "corr_roc.csv")])
    assert reports[0] == reports[1]


def test_eval_scheme_mismatch(tmp_path, capsys):
    run(tmp_path, "gen", "--snr", "3", "--scheme", "awgn6", *FAST)
    run(tmp_path, "train", "--snr", "3", "--scheme", "awgn6", "--detector", "nn", *FAST)
    run(tmp_path, "gen", "--snr", "3", "--scheme", "binary", *FAST)
    model = mlp.load_model(tmp_path / "awgn-3dB-awgn6" / "nn.json")
    test = read_dataset(tmp_path / "awgn-3dB-binary" / "test.csv")
    with pytest.raises(SchemeMismatch):
        evaluate_model("nn", model, test)
    spec = ExperimentSpec(snr_db=(3.0,), scheme="binary", detectors=("nn",), out=str(tmp_path))
    with pytest.raises(SchemeMismatch):
        cmd_eval(spec, {"nn": tmp_path / "awgn-3dB-awgn6" / "nn.json"})


def test_missing_inputs_reported(tmp_path, capsys):
    assert run(tmp_path, "eval", "--snr", "3", "--detector", "nn") == 2
    assert "gen" in capsys.readouterr().err


def test_unknown_repro_target(tmp_path, capsys):
    assert run(tmp_path, "repro", "fig9") == 2
    err = capsys.readouterr().err
    for t in ("fig3", "fig4", "table2", "table3"):
        assert t in err


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# cell\nscenario = interference\nsnr = 0, 8\nscheme = binary\nsize = 150\n")
    assert load_config(cfg)["snr_db"] == "0, 8"
    assert main(["gen", "--config", str(cfg), "--snr", "8", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "interference-8dB-binary" / "train.csv").exists()
    assert not (tmp_path / "interference-0dB-binary").exists()


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path)]) == 2
