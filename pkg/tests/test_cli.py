import csv
import json

import pytest

from loopgas import cli
from loopgas.datastore import save_dataset


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory, tiny_dataset):
    root = tmp_path_factory.mktemp("cli-ds") / "ds"
    save_dataset(tiny_dataset, root)
    return root


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_invalid_dims_usage_error(tmp_path):
    code = cli.main(["gen-data", "--rows", "2", "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_USAGE


def test_unknown_command_usage_error():
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE


def test_gen_data_creates_missing_dir(tmp_path):
    out = tmp_path / "deep" / "nested" / "ds"
    code = cli.main(["gen-data", "--rows", "2", "--cols", "2",
                     "--per-phase", "2", "--vqe-iterations", "40",
                     "--vqe-trials", "1", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert (out / "manifest.json").exists()
    assert (out / "config.json").exists()


def test_missing_dataset_data_error(tmp_path):
    code = cli.main(["qkmeans", "--dataset", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_DATA


def test_validate_ed(tmp_path, dataset_dir):
    out = tmp_path / "ved"
    assert cli.main(["validate-ed", "--dataset", str(dataset_dir),
                     "--out", str(out)]) == cli.EXIT_OK
    rows = _read_csv(out / "ed_comparison.csv")
    assert len(rows) == 12
    by_x = {float(r["x"]): r for r in rows}
    # x = 1: both energies are -1 per qubit
    assert abs(float(by_x[1.0]["e_ed_per_qubit"]) + 1.0) < 1e-9
    assert abs(float(by_x[1.0]["e_vqe_per_qubit"]) + 1.0) < 1e-3
    # x = 0: ED energy is -(stars + plaquettes)/N = -5/4
    assert abs(float(by_x[0.0]["e_ed_per_qubit"]) + 1.25) < 1e-9


def test_qkmeans_outputs(tmp_path, dataset_dir):
    out = tmp_path / "qkm"
    assert cli.main(["qkmeans", "--dataset", str(dataset_dir),
                     "--out", str(out)]) == cli.EXIT_OK
    rows = _read_csv(out / "assignments.csv")
    assert set(rows[0].keys()) == {"x", "cluster", "oriented_label"}
    assert len(rows) == 12
    summary = {r["metric"]: r["value"] for r in _read_csv(out / "summary.csv")}
    assert "flip_center" in summary


def test_train_and_eval_qcnn(tmp_path, dataset_dir):
    out = tmp_path / "qcnn"
    assert cli.main(["train-qcnn", "--dataset", str(dataset_dir),
                     "--split", "random", "--epochs", "20",
                     "--batch-size", "4", "--out", str(out)]) == cli.EXIT_OK
    assert (out / "qcnn_params.json").exists()
    assert (out / "loss_history.csv").exists()
    rows = _read_csv(out / "qcnn_metrics.csv")
    assert set(rows[0].keys()) == {"x", "y_out", "predicted", "label"}

    out2 = tmp_path / "eval"
    assert cli.main(["eval-qcnn", "--dataset", str(dataset_dir),
                     "--params", str(out / "qcnn_params.json"),
                     "--out", str(out2)]) == cli.EXIT_OK
    assert len(_read_csv(out2 / "qcnn_metrics.csv")) == 12


def test_baseline_sizes_flag(tmp_path, dataset_dir):
    out = tmp_path / "bl"
    code = cli.main(["baseline", "--dataset", str(dataset_dir),
                     "--model", "logreg", "--input", "params",
                     "--sizes", "6", "--reps", "2", "--epochs", "50",
                     "--out", str(out)])
    assert code == cli.EXIT_OK
    rows = _read_csv(out / "baseline_flips.csv")
    assert len(rows) == 1
    assert int(rows[0]["train_size"]) == 6


def test_flip_subcommand(tmp_path):
    pred = tmp_path / "pred.csv"
    pred.write_text("x,predicted\n0.1,-1\n0.2,-1\n0.3,1\n0.4,1\n")
    assert cli.main(["flip", "--predictions", str(pred)]) == cli.EXIT_OK


def test_fss_subcommand(tmp_path):
    est = tmp_path / "est.csv"
    est.write_text("plaquettes,center\n1,0.272\n2,0.267\n4,0.282\n6,0.246\n")
    out = tmp_path / "fss"
    assert cli.main(["fss", "--estimates", str(est),
                     "--out", str(out)]) == cli.EXIT_OK
    rows = {r["metric"]: float(r["value"]) for r in _read_csv(out / "fss_fit.csv")}
    assert abs(rows["intercept"] - 0.252) < 2e-3


def test_report_concatenates(tmp_path, dataset_dir):
    qkm = tmp_path / "qkm"
    cli.main(["qkmeans", "--dataset", str(dataset_dir), "--out", str(qkm)])
    out = tmp_path / "rep"
    assert cli.main(["report", "--runs", str(qkm),
                     "--out", str(out)]) == cli.EXIT_OK
    rows = _read_csv(out / "report.csv")
    assert rows and rows[0]["run"] == "qkm"


def test_report_missing_summary(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["report", "--runs", str(empty),
                     "--out", str(tmp_path / "o")]) == cli.EXIT_DATA


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"rows": 2, "cols": 2, "per-phase": 2,
                               "vqe-iterations": 40, "vqe-trials": 1}))
    out = tmp_path / "ds"
    # --per-phase on the command line overrides the config file
    code = cli.main(["gen-data", "--config", str(cfg), "--rows", "2",
                     "--cols", "2", "--per-phase", "3", "--out", str(out)])
    assert code == cli.EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["samples"]) == 6
    echoed = json.loads((out / "config.json").read_text())
    assert echoed["per_phase"] == 3
    assert echoed["vqe_iterations"] == 40


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LOOPGAS_OUTPUT_ROOT", str(tmp_path))
    pred = tmp_path / "est.csv"
    pred.write_text("plaquettes,center\n1,0.3\n4,0.25\n")
    assert cli.main(["fss", "--estimates", str(pred)]) == cli.EXIT_OK
    assert (tmp_path / "loopgas-fss" / "fss_fit.csv").exists()
