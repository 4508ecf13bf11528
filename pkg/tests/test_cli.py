import json

import pytest

from sdchash.cli import main
from sdchash.dataio import read_codes, read_features


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def dataset(tmp_path, capsys):
    path = tmp_path / "f.sdcf"
    code, doc = run(capsys, ["gen-data", "--clusters", "4", "--per", "50", "--dim", "32",
                             "--seed", "7", "--out", str(path)])
    assert code == 0 and doc["n"] == 200
    return path


def test_no_arguments_is_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys):
    assert main(["train", "--features", "x", "--bogus"]) == 1


def test_end_to_end(tmp_path, capsys, dataset):
    model = tmp_path / "m.sdcm"
    code, doc = run(capsys, ["train", "--features", str(dataset), "--bits", "16", "--epochs", "3",
                             "--out", str(model)])
    assert code == 0 and len(doc["epochs"]) == 3
    assert json.loads((tmp_path / "m.sdcm.json").read_text())["k_bits"] == 16
    code, doc = run(capsys, ["eval", "--model", str(model), "--features", str(dataset),
                             "--k", "20", "--pr-csv", str(tmp_path / "pr.csv")])
    assert code == 0
    assert 0.0 <= doc["map_at_k"] <= 1.0 and len(doc["pr_curve"]) == 17
    assert (tmp_path / "pr.csv").read_text().startswith("radius,precision,recall")

    codes = tmp_path / "c.sdcb"
    code, doc = run(capsys, ["encode", "--model", str(model), "--features", str(dataset), "--out", str(codes)])
    assert code == 0 and read_codes(codes).n == 200
    code, doc = run(capsys, ["retrieve", "--queries", str(codes), "--gallery", str(codes), "--k", "4"])
    assert code == 0 and doc["results"][0]["distances"][0] == 0
    code, doc = run(capsys, ["analyze", "--codes", str(codes), "--features", str(dataset),
                             "--n-pos", "500", "--n-neg", "2000", "--out", str(tmp_path / "rep")])
    assert code == 0 and 0 <= doc["intersection"] <= 1
    assert (tmp_path / "rep" / "collapse_histogram.csv").exists()


def test_baselines(tmp_path, capsys, dataset):
    for method in ("itq", "lsh"):
        out = tmp_path / f"{method}.model"
        code, _ = run(capsys, ["baseline", "--method", method, "--features", str(dataset),
                               "--bits", "8", "--out", str(out)])
        assert code == 0
        code, doc = run(capsys, ["eval", "--model", str(out), "--features", str(dataset), "--k", "10"])
        assert code == 0 and doc["map_at_k"] > 0


def test_config_and_flag_precedence(tmp_path, capsys, dataset):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k_bits": 8, "epochs": 2, "lr": 0.01, "seed": 3}))
    code, doc = run(capsys, ["train", "--features", str(dataset), "--config", str(cfg),
                             "--epochs", "1", "--out", str(tmp_path / "m.sdcm")])
    assert code == 0
    assert doc["config"]["k_bits"] == 8 and doc["config"]["lr"] == 0.01
    assert doc["config"]["epochs"] == 1 and doc["config"]["seed"] == 3


def test_dimension_mismatch_is_data_error(tmp_path, capsys, dataset):
    other = tmp_path / "g.sdcf"
    run(capsys, ["gen-data", "--dim", "5", "--per", "3", "--out", str(other)])
    run(capsys, ["train", "--features", str(dataset), "--bits", "8", "--epochs", "1",
                 "--out", str(tmp_path / "m.sdcm")])
    code = main(["encode", "--model", str(tmp_path / "m.sdcm"), "--features", str(other),
                 "--out", str(tmp_path / "c.sdcb")])
    err = capsys.readouterr().err
    assert code == 2 and "columns" in err


def test_missing_file_is_data_error(tmp_path, capsys):
    assert main(["encode", "--model", str(tmp_path / "nope"), "--features", "x", "--out", "y"]) == 2


def test_gen_data_writes_labels(dataset):
    assert read_features(dataset).labels is not None
