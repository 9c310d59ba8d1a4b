import json

import numpy as np
import pytest
import yaml

from pacedistill.cli import (
    config_hash,
    emit_curves,
    load_experiment_config,
    main,
    run_ablation_grid,
    run_experiment,
)
from pacedistill.curriculum import TrainingTrace
from pacedistill.data import load_csv
from pacedistill.exceptions import ConfigError

RESULT_FILES = (
    "per_fold_metrics.csv",
    "summary.csv",
    "config_resolved.json",
    "fold_0/trace.csv",
    "fold_0/metrics.json",
    "fold_0/model.params",
)


def tiny_config_dict(out_dir, **train_overrides):
    train = {
        "epochs": 3,
        "batch_size": 32,
        "gamma": 1.0,
        "hidden_sizes": [8],
        "pcl": {"kind": "hard", "lambda0": 1.2, "alpha": 0.01},
        "pcd": {"kind": "soft", "lambda0": 0.8, "alpha": 0.003},
        "lr": {"init": 1.0e-5, "peak": 1.0e-3, "warmup_epochs": 1},
    }
    train.update(train_overrides)
    return {
        "output_dir": str(out_dir),
        "folds": 1,
        "seed": 0,
        "dataset": {"kind": "synthetic", "n": 200, "dim": 4, "classes": 2,
                    "class_separation": 2.0, "noise_rate": 0.2, "seed": 11},
        "split": {"train": 0.7, "val": 0.15, "test": 0.15},
        "train": train,
    }


def write_config(tmp_path, cfg_dict, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg_dict))
    return path


class TestConfigParsing:
    def test_round_trip_defaults(self, tmp_path):
        path = write_config(tmp_path, tiny_config_dict(tmp_path / "out"))
        config = load_experiment_config(path)
        assert config.folds == 1
        assert config.train.epochs == 3
        assert config.train.pcl_schedule.lambda0 == 1.2
        assert config.eval_on_clean is True

    def test_unknown_keys_rejected_with_path(self, tmp_path):
        cfg = tiny_config_dict(tmp_path / "out")
        cfg["train"]["typo_key"] = 1
        path = write_config(tmp_path, cfg)
        with pytest.raises(ConfigError, match="train.typo_key"):
            load_experiment_config(path)

    def test_missing_required_key(self, tmp_path):
        cfg = tiny_config_dict(tmp_path / "out")
        del cfg["output_dir"]
        path = write_config(tmp_path, cfg)
        with pytest.raises(ConfigError, match="output_dir"):
            load_experiment_config(path)

    def test_invalid_value_anchored(self, tmp_path):
        cfg = tiny_config_dict(tmp_path / "out")
        cfg["train"]["epochs"] = "sixty"
        path = write_config(tmp_path, cfg)
        with pytest.raises(ConfigError, match="train.epochs"):
            load_experiment_config(path)

    def test_overrides_apply(self, tmp_path):
        path = write_config(tmp_path, tiny_config_dict(tmp_path / "out"))
        config = load_experiment_config(
            path, {"seed": 9, "epochs": 5, "ablation": "baseline", "gamma": 0.5}
        )
        assert config.seed == 9 and config.train.seed == 9
        assert config.train.epochs == 5
        assert config.train.ablation.value == "baseline"
        assert config.train.gamma == 0.5

    def test_hash_ignores_output_dir_but_not_content(self, tmp_path):
        a = load_experiment_config(write_config(tmp_path, tiny_config_dict(tmp_path / "a")))
        b = load_experiment_config(
            write_config(tmp_path, tiny_config_dict(tmp_path / "b"), name="b.yaml")
        )
        assert config_hash(a) == config_hash(b)
        c = load_experiment_config(write_config(tmp_path, tiny_config_dict(tmp_path / "a")),
                                   {"gamma": 2.0})
        assert config_hash(a) != config_hash(c)


class TestRunExperiment:
    def test_smoke_writes_all_outputs(self, tmp_path, capsys):
        out = tmp_path / "out"
        path = write_config(tmp_path, tiny_config_dict(out))
        assert main(["run", str(path)]) == 0
        for name in RESULT_FILES:
            assert (out / name).exists(), name
        assert (out / "run_manifest.json").exists()
        trace = TrainingTrace.read_csv(out / "fold_0" / "trace.csv")
        assert len(trace.rows) == 3
        payload = json.loads((out / "fold_0" / "metrics.json").read_text())
        assert 0.0 <= payload["acc"] <= 1.0
        assert payload["config_hash"] == json.loads(
            (out / "config_resolved.json").read_text()
        )["config_hash"]

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        out = tmp_path / "out"
        config = load_experiment_config(write_config(tmp_path, tiny_config_dict(out)))
        run_experiment(config, echo=lambda *_: None)
        first = {name: (out / name).read_bytes() for name in RESULT_FILES}
        run_experiment(config, echo=lambda *_: None)
        for name in RESULT_FILES:
            assert (out / name).read_bytes() == first[name], name

    def test_exit_code_2_on_config_problems(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "missing.yaml")]) == 2
        bad = tmp_path / "bad.yaml"
        bad.write_text("output_dir: [unclosed\n")
        assert main(["run", str(bad)]) == 2
        cfg = tiny_config_dict(tmp_path / "out")
        cfg["folds"] = 0
        assert main(["run", str(write_config(tmp_path, cfg, "zero.yaml"))]) == 2
        err = capsys.readouterr().err
        assert "config error" in err

    def test_csv_dataset_source(self, tmp_path):
        from pacedistill.data import generate_synthetic, save_csv

        data_path = tmp_path / "data.csv"
        save_csv(data_path, generate_synthetic(200, 4, 2, 2.0, 0.1, seed=3))
        cfg = tiny_config_dict(tmp_path / "out")
        cfg["dataset"] = {
            "kind": "csv", "path": str(data_path),
            "label_column": "label", "drop_columns": ["clean_label"],
        }
        config = load_experiment_config(write_config(tmp_path, cfg))
        reports = run_experiment(config, echo=lambda *_: None)
        assert len(reports) == 1 and 0.0 <= reports[0].acc <= 1.0


class TestAblationGrid:
    def test_grid_has_four_rows_per_fold(self, tmp_path):
        out = tmp_path / "grid"
        cfg = tiny_config_dict(out)
        cfg["folds"] = 2
        config = load_experiment_config(write_config(tmp_path, cfg))
        results = run_ablation_grid(config, echo=lambda *_: None)
        assert set(results) == {"baseline", "pcl_only", "pcd_only", "full"}
        lines = [
            ln for ln in (out / "ablation_grid.csv").read_text().splitlines()
            if ln and not ln.startswith("#")
        ]
        assert len(lines) - 1 == 4 * 2  # header + 4 arms x 2 folds
        for fold in range(2):
            fold_rows = [ln for ln in lines[1:] if ln.split(",")[1] == str(fold)]
            assert len(fold_rows) == 4
        assert (out / "ablation_summary.csv").exists()

    def test_kind_sweep_emits_four_combinations(self, tmp_path):
        out = tmp_path / "sweep"
        config = load_experiment_config(write_config(tmp_path, tiny_config_dict(out)))
        results = run_ablation_grid(config, kind_sweep=True, echo=lambda *_: None)
        sweep = results["kind_sweep"]
        assert set(sweep) == {
            "pcl_hard_pcd_hard", "pcl_hard_pcd_soft",
            "pcl_soft_pcd_hard", "pcl_soft_pcd_soft",
        }
        assert (out / "kind_sweep_grid.csv").exists()


class TestCurves:
    def test_merge_preserves_runs_and_metrics(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        cfg = tiny_config_dict(out_a)
        config = load_experiment_config(write_config(tmp_path, cfg))
        run_experiment(config, echo=lambda *_: None)
        import dataclasses

        run_experiment(dataclasses.replace(config, output_dir=str(out_b)),
                       echo=lambda *_: None)
        merged = tmp_path / "curves.csv"
        assert main([
            "curves", str(out_a / "fold_0" / "trace.csv"),
            str(out_b / "fold_0" / "trace.csv"), "-o", str(merged),
        ]) == 0
        lines = merged.read_text().splitlines()
        assert lines[0] == "run,epoch,metric,value"
        assert len(lines) - 1 == 2 * 3 * 11  # runs x epochs x metrics
        runs = {ln.split(",")[0] for ln in lines[1:]}
        assert len(runs) == 2
        metrics = {ln.split(",")[2] for ln in lines[1:]}
        assert "frac_w_nonzero" in metrics and "val_acc" in metrics

    def test_malformed_trace_is_exit_3_naming_the_file(self, tmp_path, capsys):
        bad = tmp_path / "nottrace.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["curves", str(bad), "-o", str(tmp_path / "out.csv")]) == 3
        assert "nottrace.csv" in capsys.readouterr().err
        with pytest.raises(ValueError, match="nottrace.csv"):
            emit_curves([str(bad)], tmp_path / "out.csv")


class TestGenData:
    def test_generates_loadable_csv(self, tmp_path):
        spec = tmp_path / "spec.yaml"
        spec.write_text(yaml.safe_dump({
            "kind": "synthetic", "n": 60, "dim": 3, "classes": 2,
            "class_separation": 2.0, "noise_rate": 0.1, "seed": 4,
        }))
        out = tmp_path / "data.csv"
        assert main(["gen-data", str(spec), "-o", str(out)]) == 0
        ds = load_csv(out, "label", drop_columns=("clean_label",))
        assert ds.n == 60 and ds.dim == 3
        header = out.read_text().splitlines()[0]
        assert header == "f0,f1,f2,label,clean_label"

    def test_rejects_csv_spec(self, tmp_path, capsys):
        spec = tmp_path / "spec.yaml"
        spec.write_text(yaml.safe_dump({"kind": "csv", "path": "x.csv"}))
        assert main(["gen-data", str(spec), "-o", str(tmp_path / "d.csv")]) == 2


class TestCliOverrides:
    def test_flag_overrides_reach_resolved_config(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, tiny_config_dict(out))
        assert main(["run", str(path), "--seed", "3", "--epochs", "2",
                     "--ablation", "pcl_only", "--gamma", "0.25"]) == 0
        resolved = json.loads((out / "config_resolved.json").read_text())
        assert resolved["seed"] == 3
        assert resolved["train"]["epochs"] == 2
        assert resolved["train"]["ablation"] == "pcl_only"
        assert resolved["train"]["gamma"] == 0.25
        trace = TrainingTrace.read_csv(out / "fold_0" / "trace.csv")
        assert len(trace.rows) == 2
