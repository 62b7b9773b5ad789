"""End-to-end tests of the command-line interface and its exit-code contract
(0 success, 1 check failure, 2 usage/config, 3 numeric)."""

import json

import numpy as np
import pytest

from edfagain.cli import main
from edfagain.dataset import read_dataset
from edfagain.evaluation import run_scenarios
from edfagain.experiment import ExperimentConfig, default_config
from edfagain.model import TrainConfig, load_model
from edfagain.dataset import WalkConfig
from edfagain.numerics import subseed


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small config, its generated dataset, and trained checkpoints."""
    root = tmp_path_factory.mktemp("cli")
    cfg = default_config()
    cfg.device_seeds = {"A1": 114, "A2": 125}
    cfg.walk = WalkConfig(n_profiles_per_pair=6)
    cfg.power_grid_dbm = ((0.0, 15.0), (3.0, 18.0))
    cfg.train = TrainConfig(epochs=3, batch_size=16, learning_rate=1e-3, seed=7)
    config_path = root / "config.json"
    cfg.to_json(config_path)

    data_path = root / "data.jsonl"
    assert main(["gen-data", "--config", str(config_path), "--out", str(data_path)]) == 0

    models_dir = root / "models"
    models_dir.mkdir()
    for device in ("A1", "A2", "joint"):
        code = main(
            ["train", "--data", str(data_path), "--device", device,
             "--out", str(models_dir / f"{device}.json")]
        )
        assert code == 0
    return {"root": root, "config": config_path, "data": data_path, "models": models_dir, "cfg": cfg}


# ---------------------------------------------------------------------------
# gen-data


def test_gen_data_prints_counts(workspace, capsys, tmp_path):
    out = tmp_path / "d.jsonl"
    assert main(["gen-data", "--config", str(workspace["config"]), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "A1" in text and "A2" in text
    assert text.count("6 samples") == 4  # 2 devices x 2 pairs
    assert "total 24 samples" in text
    ds = read_dataset(out)
    assert len(ds) == 24
    assert ds.metadata["config_hash"] == workspace["cfg"].config_hash()


def test_gen_data_is_byte_deterministic(workspace, tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert main(["gen-data", "--config", str(workspace["config"]), "--out", str(a)]) == 0
    assert main(["gen-data", "--config", str(workspace["config"]), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() == workspace["data"].read_bytes()


def test_gen_data_missing_config(tmp_path, capsys):
    assert main(["gen-data", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "d.jsonl")]) == 2
    assert "error" in capsys.readouterr().err


def test_gen_data_unparseable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "d.jsonl")]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_gen_data_field_error_names_field(tmp_path, capsys):
    cfg = default_config()
    doc = cfg.to_dict()
    doc["train"]["epochs"] = 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "d.jsonl")]) == 2
    assert "train" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train


def test_train_checkpoint_and_trace(workspace):
    model_path = workspace["models"] / "A1.json"
    model, meta = load_model(model_path)
    assert model.dims == (85, 256, 128, 83)
    assert meta["trained_on"] == "A1"
    base = TrainConfig.from_dict(read_dataset(workspace["data"]).metadata["train"])
    assert meta["train_config"]["seed"] == subseed(base.seed, "train", "A1")
    assert meta["n_train_samples"] == 9  # round(0.76 * 12)
    assert meta["config_hash"] == workspace["cfg"].config_hash()

    trace_path = workspace["models"] / "A1.loss.csv"
    lines = trace_path.read_text().strip().split("\n")
    assert lines[0] == "epoch,train_mse_db2"
    assert len(lines) == 1 + 3  # header + epochs
    assert lines[1].startswith("0,")
    assert float(lines[-1].split(",")[1]) == meta["final_train_mse_db2"]


def test_train_matches_scenario_runner(workspace):
    """A CLI checkpoint must be bit-identical to the model the scenario driver
    trains for the same device."""
    ds = read_dataset(workspace["data"])
    res = run_scenarios(ds, TrainConfig.from_dict(ds.metadata["train"]))
    for device in ("A1", "A2", "joint"):
        cli_model, _ = load_model(workspace["models"] / f"{device}.json")
        for a, b in zip(cli_model.params(), res.models[device].params()):
            assert np.array_equal(a, b)


def test_train_unknown_device(workspace, tmp_path, capsys):
    code = main(["train", "--data", str(workspace["data"]), "--device", "B9",
                 "--out", str(tmp_path / "m.json")])
    assert code == 2
    err = capsys.readouterr().err
    assert "B9" in err and "A1" in err


def test_train_rejects_non_dataset_file(tmp_path, capsys):
    bogus = tmp_path / "bogus.jsonl"
    bogus.write_text('{"format": "other"}\n')
    assert main(["train", "--data", str(bogus), "--device", "A1", "--out", str(tmp_path / "m.json")]) == 2


# ---------------------------------------------------------------------------
# eval


def test_eval_all_reports(workspace, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["eval", "--scenario", "all", "--data", str(workspace["data"]),
                 "--models", str(workspace["models"]), "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "intra" in text and "inter" in text and "joint" in text
    doc = json.loads(out.read_text())
    assert doc["scenario"] == "all"
    assert len(doc["reports"]) == 6  # 2 intra + 2 inter + 2 joint
    assert doc["config_hash"] == workspace["cfg"].config_hash()
    assert (tmp_path / "report.csv").exists()


def test_eval_intra_only(workspace, tmp_path):
    out = tmp_path / "intra.json"
    code = main(["eval", "--scenario", "intra", "--data", str(workspace["data"]),
                 "--models", str(workspace["models"]), "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc["summary"]) == {"intra"}
    assert len(doc["reports"]) == 2


def test_eval_is_byte_deterministic(workspace, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for out in (a, b):
        assert main(["eval", "--scenario", "all", "--data", str(workspace["data"]),
                     "--models", str(workspace["models"]), "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_eval_missing_models_lists_paths(workspace, tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["eval", "--scenario", "all", "--data", str(workspace["data"]),
                 "--models", str(empty), "--out", str(tmp_path / "r.json")])
    assert code == 2
    err = capsys.readouterr().err
    assert "A1.json" in err and "joint.json" in err


def test_eval_joint_needs_only_joint_model(workspace, tmp_path):
    only_joint = tmp_path / "only"
    only_joint.mkdir()
    (only_joint / "joint.json").write_bytes((workspace["models"] / "joint.json").read_bytes())
    code = main(["eval", "--scenario", "joint", "--data", str(workspace["data"]),
                 "--models", str(only_joint), "--out", str(tmp_path / "r.json")])
    assert code == 0


# ---------------------------------------------------------------------------
# gradcheck


def test_gradcheck_small_run(capsys):
    assert main(["gradcheck", "--trials", "5"]) == 0
    out = capsys.readouterr().out
    assert "max relative error" in out
    assert "checked" in out


def test_gradcheck_zero_trials(capsys):
    assert main(["gradcheck", "--trials", "0"]) == 2
    assert "--trials" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# predict


def write_spectrum(path, powers):
    path.write_text(json.dumps({"psd_dbm": list(powers)}))


def test_predict_round_trip(workspace, tmp_path, capsys):
    spectrum = tmp_path / "in.json"
    write_spectrum(spectrum, np.full(83, -20.0))
    code = main(["predict", "--model", str(workspace["models"] / "A1.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_in_dbm"] == 0.0 and doc["p_out_dbm"] == 15.0
    out_norm = np.array(doc["psd_out_norm_db"])
    assert out_norm.shape == (83,)
    assert np.allclose(np.array(doc["psd_out_dbm"]), out_norm + 15.0, atol=1e-12)


def test_predict_accepts_bare_list(workspace, tmp_path, capsys):
    spectrum = tmp_path / "bare.json"
    spectrum.write_text(json.dumps(list(np.full(83, -20.0))))
    code = main(["predict", "--model", str(workspace["models"] / "A1.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 0
    json.loads(capsys.readouterr().out)


def test_predict_wrong_channel_count(workspace, tmp_path, capsys):
    spectrum = tmp_path / "short.json"
    write_spectrum(spectrum, np.full(5, -20.0))
    code = main(["predict", "--model", str(workspace["models"] / "A1.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 2
    assert "83" in capsys.readouterr().err


def test_predict_malformed_input_points_at_location(workspace, tmp_path, capsys):
    spectrum = tmp_path / "broken.json"
    spectrum.write_text("[1, 2,")
    code = main(["predict", "--model", str(workspace["models"] / "A1.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 2
    err = capsys.readouterr().err
    assert "broken.json" in err and "line" in err


def test_predict_non_finite_powers(workspace, tmp_path, capsys):
    spectrum = tmp_path / "inf.json"
    spectrum.write_text(json.dumps(["Infinity"] * 83))
    code = main(["predict", "--model", str(workspace["models"] / "A1.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 2
    assert "finite" in capsys.readouterr().err


def test_predict_missing_model(tmp_path, capsys):
    spectrum = tmp_path / "in.json"
    write_spectrum(spectrum, np.full(83, -20.0))
    code = main(["predict", "--model", str(tmp_path / "none.json"),
                 "--input", str(spectrum), "--p-in", "0.0", "--p-out", "15.0"])
    assert code == 2
