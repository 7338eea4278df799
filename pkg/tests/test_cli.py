import csv
import json
import logging

import numpy as np
import pytest
import yaml

from cogappraisal import cli
from cogappraisal.annotated import read_annotated, write_annotated
from cogappraisal.synthetic import planted_annotated, write_synthetic_inputs
from cogappraisal.taxonomy import DISTORTION_NAMES


def write_config(path, data_dir, out_dir, **extra):
    cfg = {
        "data_dir": str(data_dir),
        "paths": {"envent": "envent.tsv", "thinking_trap": "thinking_trap.csv",
                  "extra_no_distortion": "no_distortion.csv", "output_dir": str(out_dir)},
        "train": {"encoder": {"name": "hashing", "n_features": 1024}, "hidden_dim": 32,
                  "learning_rate": 1e-3, "max_epochs": 5, "patience": 2},
    }
    for section, values in extra.items():
        cfg.setdefault(section, {}).update(values)
    path.write_text(yaml.safe_dump(cfg))
    return path


def without_timestamps(path):
    data = json.loads(path.read_text())
    data.pop("started"), data.pop("finished")
    return data


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    write_synthetic_inputs(root / "data", seed=4, n_train=200, n_validation=50, n_test=60)
    out = root / "run"
    cfg = write_config(root / "config.yaml", root / "data", out)
    assert cli.main(["prepare", "-c", str(cfg)]) == 0
    assert cli.main(["train", "-c", str(cfg), "--max-epochs", "3"]) == 0
    assert cli.main(["annotate", "-c", str(cfg), "--reframes"]) == 0
    assert cli.main(["report", str(out / "annotated.tsv"), "--out", str(out / "report"), "-c", str(cfg)]) == 0
    return root, cfg, out


def test_prepare_outputs(pipeline):
    _, _, out = pipeline
    summary = json.loads((out / "corpus" / "summary.json").read_text())
    assert summary["n_rows"] == 1036
    assert (out / "corpus" / "expanded.tsv").is_file()


def test_train_outputs(pipeline):
    _, _, out = pipeline
    assert (out / "checkpoint" / "head.pt").is_file()
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["model_clamped"] <= metrics["model"]
    assert metrics["n_test"] == 60
    with (out / "metrics.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["dimension", "model", "model_clamped", "median_baseline"] and len(rows) == 23
    assert (out / "figures" / "rmse_per_dimension.svg").is_file()
    manifest = json.loads((out / "manifest_train.json").read_text())
    assert manifest["seed"] == 0 and manifest["checkpoint_hash"]
    assert manifest["config"]["train"]["max_epochs"] == 3


def test_annotate_outputs(pipeline):
    _, cfg, out = pipeline
    rows = read_annotated(out / "annotated.tsv")
    assert len(rows) == 1036
    assert all((r.reframe_appraisals is not None) == (r.reframe is not None) for r in rows)
    manifest = json.loads((out / "annotated_manifest.json").read_text())
    assert manifest["checkpoint_hash"] and manifest["config"]["include_reframes"] is True

    rerun = out / "annotated_again.tsv"
    assert cli.main(["annotate", "-c", str(cfg), "--out", str(rerun)]) == 0
    assert rerun.read_bytes() == (out / "annotated.tsv").read_bytes()


def test_report_outputs(pipeline):
    _, _, out = pipeline
    report = out / "report"
    for s in ("no_distortion", "exclusive", "all_others"):
        assert (report / "significance" / f"{s}_pvalues.csv").is_file()
        assert (report / "significance" / "figures" / f"significance_{s}.svg").is_file()
        assert (report / "significance" / "figures" / f"significance_{s}.png").is_file()
    figs = report / "profiles" / "figures"
    assert len(list((figs / "relative").glob("*.svg"))) == 14
    assert (figs / "baseline_profile.svg").is_file() and (figs / "selected_profiles.svg").is_file()
    assert (report / "reframe" / "reframe_shift.csv").is_file()
    meta = json.loads((report / "significance" / "manifest_analyze.json").read_text())
    assert isinstance(meta["config"]["exclusive_equals_all_others"], bool)


def test_alpha_override_recorded(pipeline, tmp_path):
    _, _, out = pipeline
    assert cli.main(["analyze", str(out / "annotated.tsv"), "--out", str(tmp_path),
                     "--alpha", "0.01", "--strategies", "no_distortion"]) == 0
    config = json.loads((tmp_path / "manifest_analyze.json").read_text())["config"]
    assert config["alpha"] == 0.01
    assert config["corrected_threshold"] == pytest.approx(0.01 / 294, abs=1e-15)
    assert not (tmp_path / "exclusive_pvalues.csv").exists()


def test_analyses_are_idempotent(pipeline, tmp_path):
    _, _, out = pipeline
    ann = str(out / "annotated.tsv")
    for cmd, manifest in (("analyze", "manifest_analyze.json"), ("profile", "manifest_profile.json"),
                          ("reframe-shift", "manifest_reframe_shift.json")):
        assert cli.main([cmd, ann, "--out", str(tmp_path / cmd)]) == 0
        first = without_timestamps(tmp_path / cmd / manifest)
        assert cli.main([cmd, ann, "--out", str(tmp_path / cmd)]) == 0
        assert without_timestamps(tmp_path / cmd / manifest) == first


def test_zero_shift_gives_zero_csv(tmp_path):
    rows = planted_annotated(shift=0.0, reframe_delta=np.zeros(21))
    write_annotated(rows, tmp_path / "ann.tsv")
    assert cli.main(["reframe-shift", str(tmp_path / "ann.tsv"), "--out", str(tmp_path / "out")]) == 0
    with (tmp_path / "out" / "reframe_shift.csv").open() as fh:
        data = list(csv.DictReader(fh))
    assert [r["label"] for r in data] == list(DISTORTION_NAMES)
    assert all(float(v) == 0 for r in data for k, v in r.items() if k not in ("label", "n"))


def test_missing_dataset_path_exits_1(tmp_path, caplog):
    cfg = write_config(tmp_path / "c.yaml", tmp_path, tmp_path / "out")
    with caplog.at_level(logging.ERROR):
        assert cli.main(["prepare", "-c", str(cfg)]) == 1
    assert "paths.thinking_trap" in caplog.text


def test_unset_dataset_key_exits_1(tmp_path, caplog):
    (tmp_path / "c.yaml").write_text(yaml.safe_dump({"paths": {"output_dir": str(tmp_path)}}))
    with caplog.at_level(logging.ERROR):
        assert cli.main(["train", "-c", str(tmp_path / "c.yaml")]) == 1
    assert "paths.envent_train" in caplog.text


def test_unknown_config_key_exits_1(tmp_path):
    (tmp_path / "c.yaml").write_text(yaml.safe_dump({"train": {"learning_rte": 0.1}}))
    assert cli.main(["prepare", "-c", str(tmp_path / "c.yaml")]) == 1


def test_bad_label_exits_2(tmp_path, caplog):
    (tmp_path / "thinking_trap.csv").write_text("thought,thinking_traps_addressed,reframe\nx,doom,\n")
    cfg = write_config(tmp_path / "c.yaml", tmp_path, tmp_path / "out")
    cfg.write_text(cfg.read_text().replace("extra_no_distortion: no_distortion.csv", "extra_no_distortion: null"))
    with caplog.at_level(logging.ERROR):
        assert cli.main(["prepare", "-c", str(cfg)]) == 2
    assert "doom" in caplog.text


def test_no_reframes_exits_2(tmp_path):
    write_annotated(planted_annotated(shift=0.0), tmp_path / "ann.tsv")
    assert cli.main(["reframe-shift", str(tmp_path / "ann.tsv"), "--out", str(tmp_path / "o")]) == 2


def test_bad_arguments_exit_1():
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze"])
    assert exc.value.code == 1


def test_internal_error_exits_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "cmd_profile", boom)
    assert cli.main(["profile", str(tmp_path / "x.tsv"), "--out", str(tmp_path)]) == 3


def test_data_dir_env_overrides(tmp_path, monkeypatch):
    paths = write_synthetic_inputs(tmp_path / "elsewhere", seed=1, n_train=5, n_validation=2, n_test=2)
    cfg = write_config(tmp_path / "c.yaml", tmp_path / "nowhere", tmp_path / "out")
    monkeypatch.setenv("COGAPPRAISAL_DATA_DIR", str(paths["envent"].parent))
    assert cli.main(["prepare", "-c", str(cfg)]) == 0
