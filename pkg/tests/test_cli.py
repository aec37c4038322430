import json

import numpy as np
import pytest

from qtgn import neural
from qtgn.cli import main
from qtgn.pipeline import RunConfig, init_params

SMALL = ["--n-qubits", "4", "--epochs", "1"]


def _json_lines(text):
    return [json.loads(line) for line in text.strip().splitlines()]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), "--users", "15", "--items", "15", "--events", "600", "--signal", "0.9", "--seed", "2"]) == 0
    return out / "events.csv"


@pytest.fixture(scope="module")
def checkpoint(data, tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", str(data), "--out", str(out), *SMALL]) == 0
    return out / "params.npz"


def test_synth_echoes_seed(data):
    meta = json.loads(data.with_suffix(".meta.json").read_text())
    assert meta["seed"] == 2 and meta["events"] == 600
    assert data.read_text().splitlines()[0].startswith("src,dst,t,f0")


def test_train_outputs(checkpoint):
    out = checkpoint.parent
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["run"]["seed"] == 0 and cfg["aae"]["n_qubits"] == 4
    log = (out / "train_log.csv").read_text().splitlines()
    assert log[0] == "epoch,events,mean_loss,refresh_rate,seconds" and len(log) == 2
    assert neural.load_params(checkpoint).meta["seed"] == 0


def test_zero_epochs_checkpoint_is_init(data, tmp_path):
    assert main(["train", str(data), "--out", str(tmp_path), "--n-qubits", "4", "--epochs", "0"]) == 0
    loaded = neural.load_params(tmp_path / "params.npz")
    ref = init_params(RunConfig().replace(n_qubits=4))
    for (name, a), (_, b) in zip(loaded.named_layers(), ref.named_layers()):
        np.testing.assert_array_equal(a.W, b.W, err_msg=name)
        np.testing.assert_array_equal(a.b, b.b, err_msg=name)
    assert (tmp_path / "train_log.csv").read_text().splitlines() == ["epoch,events,mean_loss,refresh_rate,seconds"]


def test_evaluate_deterministic_and_splits(data, checkpoint, capsys):
    args = ["evaluate", str(data), "--checkpoint", str(checkpoint), "--n-qubits", "4"]
    assert main(args) == 0
    first = _json_lines(capsys.readouterr().out)
    assert main(args) == 0
    second = _json_lines(capsys.readouterr().out)
    assert first == second and len(first) == 1
    rec = first[0]
    assert rec["split"] == "test" and rec["K"] == 20 and rec["seed"] == 0
    assert 0 <= rec["auc"] <= 1 and 0 < rec["mrr"] <= 1
    assert main([*args, "--split", "val"]) == 0
    val = _json_lines(capsys.readouterr().out)[0]
    assert val["split"] == "val"
    assert val["n_queries"] == rec["n_queries"] == 90


def test_missing_data_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["train", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_corrupt_checkpoint(data, tmp_path, capsys):
    bad = tmp_path / "params.npz"
    bad.write_bytes(b"not a checkpoint")
    code = main(["evaluate", str(data), "--checkpoint", str(bad), "--n-qubits", "4"])
    captured = capsys.readouterr()
    assert code != 0 and captured.out == ""
    assert "checkpoint" in captured.err


def test_shape_mismatch(data, checkpoint, capsys):
    code = main(["evaluate", str(data), "--checkpoint", str(checkpoint), "--n-qubits", "8"])
    captured = capsys.readouterr()
    assert code == 1 and captured.out == ""


def test_usage_errors(data, tmp_path, capsys):
    assert main(["bogus"]) == 1
    assert main(["train", str(data), "--n-eval", "3"]) == 1
    assert main(["train", str(data), "--update-strategy", "sometimes"]) == 1
    capsys.readouterr()


def test_unknown_config_key(data, tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("run:\n  epochs: 1\n  learning_speed: 3\n")
    assert main(["train", str(data), "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "learning_speed" in capsys.readouterr().err


def test_config_file_and_flag_precedence(data, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("run:\n  epochs: 3\n  seed: 4\naae:\n  n_qubits: 4\n  update_strategy: always\n")
    assert main(["train", str(data), "--config", str(cfg), "--epochs", "1", "--out", str(tmp_path)]) == 0
    written = json.loads((tmp_path / "config.json").read_text())
    assert written["run"]["epochs"] == 1 and written["run"]["seed"] == 4
    assert written["aae"]["update_strategy"] == "always"


def _ablate(data, out, *extra):
    assert main(["ablate", str(data), "--out", str(out), *SMALL, *extra]) == 0
    rows = _json_lines((out / "ablation.jsonl").read_text())
    return {r["variant"]: r for r in rows}


def _metrics(row):
    return {k: row[k] for k in ("accuracy", "precision", "auc", "mrr", "n_queries")}


def test_ablate_tau_extremes(data, tmp_path, capsys):
    rows = _ablate(data, tmp_path / "t0", "--tau", "0")
    assert set(rows) == {"adaptive", "always", "never"}
    assert _metrics(rows["adaptive"]) == _metrics(rows["always"])
    assert rows["adaptive"]["train_refresh_rate"] == 1.0
    rows = _ablate(data, tmp_path / "t1", "--tau", "1")
    assert _metrics(rows["adaptive"]) == _metrics(rows["never"])
    capsys.readouterr()


def test_ablate_beats_chance(data, tmp_path, capsys):
    rows = _ablate(data, tmp_path, "--epochs", "2")
    assert all(r["auc"] > 0.5 for r in rows.values())
    capsys.readouterr()


def test_compare_encodings(data, tmp_path, capsys):
    assert main(["compare-encodings", str(data), "--out", str(tmp_path), *SMALL]) == 0
    rows = _json_lines(capsys.readouterr().out)
    assert [r["variant"] for r in rows] == ["aae", "amplitude", "angle"]
    assert (tmp_path / "encodings.jsonl").is_file()


def test_angle_with_zero_features(tmp_path, capsys):
    path = tmp_path / "zeros.csv"
    rows = ["src,dst,t,f0,f1"] + [f"{k % 5},{k % 7},{k + 1},0,0" for k in range(120)]
    path.write_text("\n".join(rows) + "\n")
    assert main(["compare-encodings", str(path), "--out", str(tmp_path), "--n-qubits", "2", "--epochs", "1"]) == 0
    rows = _json_lines(capsys.readouterr().out)
    assert len(rows) == 3 and all(np.isfinite(r["auc"]) for r in rows)


def test_noisy_infer(data, checkpoint, capsys):
    args = ["noisy-infer", str(data), "--checkpoint", str(checkpoint), "--n-qubits", "4", "--n-eval", "30", "--shots", "256"]
    assert main(args) == 0
    rec = _json_lines(capsys.readouterr().out)[0]
    assert rec["n_queries"] == 30 and rec["shots"] == 256 and rec["depol"] == 0.02
    assert rec["circuits"] > 0 and rec["mean_abs_z_error"] > 0
    assert main(args) == 0
    assert _json_lines(capsys.readouterr().out)[0] == rec
