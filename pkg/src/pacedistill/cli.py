"""Experiment runner: seeded resampled folds, ablation grids, curve export.

Each fold is an independent seeded train/val/test resample (fold k uses
base seed + k for both the split and training). Every result file carries
the hash of the resolved config that produced it; wall-clock information
is confined to run_manifest.json so repeated runs of one config are
byte-identical everywhere else.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from . import __version__, backend, model
from .curriculum import Ablation, TrainConfig, TrainingTrace, train, TRACE_COLUMNS
from .data import Dataset, SplitSpec, generate_synthetic, load_csv, save_csv, split, standardize
from .exceptions import ConfigError, DivergenceError
from .metrics import MetricsReport, evaluate
from .regularizer import RegularizerKind
from .schedule import LearningRateSchedule, PaceSchedule

METRIC_FIELDS = ("acc", "sen", "spe", "auc", "ece", "nll")
ABLATION_ARMS = (Ablation.BASELINE, Ablation.PCL_ONLY, Ablation.PCD_ONLY, Ablation.FULL)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 2000
    dim: int = 20
    classes: int = 2
    class_separation: float = 2.0
    noise_rate: float = 0.2
    seed: int = 2024


@dataclass(frozen=True)
class CsvSpec:
    path: str
    label_column: Union[str, int] = "label"
    class_count: Optional[int] = None
    drop_columns: tuple = ()


@dataclass
class ExperimentConfig:
    output_dir: str
    dataset: Union[SyntheticSpec, CsvSpec] = SyntheticSpec()
    folds: int = 4
    seed: int = 0
    split_fracs: tuple = (0.7, 0.15, 0.15)
    eval_on_clean: bool = True
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)

    def validate(self):
        if self.folds < 1:
            raise ConfigError(f"folds must be >= 1, got {self.folds}")
        try:
            SplitSpec(*self.split_fracs, seed=0)
        except ValueError as e:
            raise ConfigError(f"split: {e}") from None
        self.train.validate()

    def to_dict(self) -> dict:
        d = {
            "output_dir": self.output_dir,
            "folds": self.folds,
            "seed": self.seed,
            "split": {
                "train": self.split_fracs[0],
                "val": self.split_fracs[1],
                "test": self.split_fracs[2],
            },
            "eval_on_clean": self.eval_on_clean,
            "dataset": dataclasses.asdict(self.dataset),
            "train": {
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "gamma": self.train.gamma,
                "ablation": self.train.ablation.value,
                "hidden_sizes": list(self.train.hidden_sizes),
                "ece_bins": self.train.ece_bins,
                "pcl": {
                    "kind": self.train.pcl_kind.value,
                    "lambda0": self.train.pcl_schedule.lambda0,
                    "alpha": self.train.pcl_schedule.alpha,
                },
                "pcd": {
                    "kind": self.train.pcd_kind.value,
                    "lambda0": self.train.pcd_schedule.lambda0,
                    "alpha": self.train.pcd_schedule.alpha,
                },
                "lr": {
                    "init": self.train.lr_schedule.lr_init,
                    "peak": self.train.lr_schedule.lr_peak,
                    "warmup_epochs": self.train.lr_schedule.warmup_epochs,
                },
            },
        }
        if isinstance(self.dataset, SyntheticSpec):
            d["dataset"]["kind"] = "synthetic"
        else:
            d["dataset"]["kind"] = "csv"
            d["dataset"]["drop_columns"] = list(self.dataset.drop_columns)
        return d


def config_hash(config: ExperimentConfig) -> str:
    # output_dir identifies a location, not an experiment
    canon = {k: v for k, v in config.to_dict().items() if k != "output_dir"}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode("utf-8")).hexdigest()[:16]


class _Section:
    """Dict wrapper that tracks consumed keys and anchors errors to key paths."""

    def __init__(self, raw, path):
        if not isinstance(raw, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(raw).__name__}")
        self.raw = dict(raw)
        self.path = path

    def _anchor(self, key):
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, default=None, required=False, cast=None):
        if key not in self.raw:
            if required:
                raise ConfigError(f"missing required config key {self._anchor(key)!r}")
            return default
        value = self.raw.pop(key)
        if cast is not None:
            try:
                return cast(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{self._anchor(key)}: {e}") from None
        return value

    def section(self, key) -> "_Section":
        return _Section(self.take(key, default={}), self._anchor(key))

    def finish(self):
        if self.raw:
            raise ConfigError(f"unknown config keys: "
                              f"{sorted(self._anchor(k) for k in self.raw)}")


def _parse_train(section: _Section, seed: int) -> TrainConfig:
    pcl = section.section("pcl")
    pcd = section.section("pcd")
    lr = section.section("lr")
    try:
        cfg = TrainConfig(
            epochs=section.take("epochs", 60, cast=int),
            batch_size=section.take("batch_size", 64, cast=int),
            gamma=section.take("gamma", 1.0, cast=float),
            pcl_kind=RegularizerKind.parse(section.take("pcl_kind", pcl.take("kind", "hard"))),
            pcd_kind=RegularizerKind.parse(section.take("pcd_kind", pcd.take("kind", "soft"))),
            pcl_schedule=PaceSchedule(
                pcl.take("lambda0", 0.6, cast=float), pcl.take("alpha", 0.006, cast=float)
            ),
            pcd_schedule=PaceSchedule(
                pcd.take("lambda0", 0.8, cast=float), pcd.take("alpha", 0.003, cast=float)
            ),
            lr_schedule=LearningRateSchedule(
                lr.take("init", 1e-6, cast=float),
                lr.take("peak", 1e-4, cast=float),
                lr.take("warmup_epochs", 10, cast=int),
            ),
            seed=seed,
            ablation=Ablation.parse(section.take("ablation", "full")),
            hidden_sizes=tuple(int(h) for h in section.take("hidden_sizes", (32, 32))),
            ece_bins=section.take("ece_bins", 10, cast=int),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None
    for sub in (pcl, pcd, lr):
        sub.finish()
    section.finish()
    return cfg


def _parse_dataset(section: _Section):
    kind = str(section.take("kind", "synthetic")).lower()
    if kind == "synthetic":
        spec = SyntheticSpec(
            n=section.take("n", 2000, cast=int),
            dim=section.take("dim", 20, cast=int),
            classes=section.take("classes", 2, cast=int),
            class_separation=section.take("class_separation", 2.0, cast=float),
            noise_rate=section.take("noise_rate", 0.2, cast=float),
            seed=section.take("seed", 2024, cast=int),
        )
    elif kind == "csv":
        spec = CsvSpec(
            path=section.take("path", required=True, cast=str),
            label_column=section.take("label_column", "label"),
            class_count=section.take("class_count", None),
            drop_columns=tuple(section.take("drop_columns", ())),
        )
    else:
        raise ConfigError(f"dataset.kind must be 'synthetic' or 'csv', got {kind!r}")
    section.finish()
    return spec


def parse_experiment_config(raw: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a parsed YAML mapping."""
    overrides = dict(overrides or {})
    top = _Section(raw, "")
    seed = overrides.pop("seed", None)
    if seed is None:
        seed = top.take("seed", 0, cast=int)
    else:
        top.take("seed", 0)
    split_sec = top.section("split")
    fracs = (
        split_sec.take("train", 0.7, cast=float),
        split_sec.take("val", 0.15, cast=float),
        split_sec.take("test", 0.15, cast=float),
    )
    split_sec.finish()
    train_raw = top.take("train", {})
    if not isinstance(train_raw, dict):
        raise ConfigError("train: expected a mapping")
    for key in ("epochs", "gamma", "ablation"):
        if key in overrides:
            train_raw = {**train_raw, key: overrides.pop(key)}
    config = ExperimentConfig(
        output_dir=top.take("output_dir", required=True, cast=str),
        dataset=_parse_dataset(top.section("dataset")),
        folds=top.take("folds", 4, cast=int),
        seed=int(seed),
        split_fracs=fracs,
        eval_on_clean=bool(top.take("eval_on_clean", True)),
        train=_parse_train(_Section(train_raw, "train"), seed=int(seed)),
    )
    top.finish()
    if overrides:
        raise ConfigError(f"unknown overrides: {sorted(overrides)}")
    config.validate()
    return config


def load_experiment_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from None
    if raw is None:
        raw = {}
    return parse_experiment_config(raw, overrides)


def build_dataset(spec) -> Dataset:
    if isinstance(spec, SyntheticSpec):
        return generate_synthetic(
            spec.n, spec.dim, spec.classes, spec.class_separation, spec.noise_rate, spec.seed
        )
    return load_csv(
        spec.path, spec.label_column, class_count=spec.class_count,
        drop_columns=spec.drop_columns,
    )


def _eval_view(ds: Dataset, eval_on_clean: bool) -> Dataset:
    """Evaluation copy of a split, scored against clean labels when available."""
    if eval_on_clean and ds.clean_labels is not None:
        return Dataset(ds.features, ds.clean_labels, ds.class_count)
    return ds


def _fmt(value) -> str:
    if value is None:
        return "nan"
    return repr(float(value))


def _write_per_fold_csv(path, rows, chash, extra_cols=()):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# config_hash={chash}\n")
        f.write(",".join((*extra_cols, "fold", *METRIC_FIELDS, "n_samples")) + "\n")
        for head, fold, report in rows:
            cells = [*head, str(fold)]
            cells += [_fmt(getattr(report, m)) for m in METRIC_FIELDS]
            cells.append(str(report.n_samples))
            f.write(",".join(cells) + "\n")


def _write_summary_csv(path, groups, chash, extra_cols=()):
    """groups: list of (head_tuple, reports). Mean/std per metric (std ddof=1 when >1 fold)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# config_hash={chash}\n")
        f.write(",".join((*extra_cols, "metric", "mean", "std")) + "\n")
        for head, reports in groups:
            for m in METRIC_FIELDS:
                values = np.array(
                    [np.nan if getattr(r, m) is None else getattr(r, m) for r in reports]
                )
                mean = float(np.mean(values))
                std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
                f.write(",".join((*head, m, repr(mean), repr(std))) + "\n")


def run_experiment(config: ExperimentConfig, echo=print) -> list:
    """Split, train, and evaluate each fold. Returns the per-fold MetricsReports."""
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(config)
    base = build_dataset(config.dataset)

    reports = []
    for fold in range(config.folds):
        fold_seed = config.seed + fold
        spec = SplitSpec(*config.split_fracs, seed=fold_seed)
        train_ds, val_ds, test_ds = standardize(*split(base, spec))
        fold_cfg = dataclasses.replace(config.train, seed=fold_seed)
        params, trace = train(
            fold_cfg, train_ds, _eval_view(val_ds, config.eval_on_clean)
        )
        test_view = _eval_view(test_ds, config.eval_on_clean)
        report = evaluate(
            model.predict_probs(params, test_view.features),
            test_view.labels,
            fold_cfg.ece_bins,
        )
        fold_dir = out / f"fold_{fold}"
        fold_dir.mkdir(exist_ok=True)
        trace.write_csv(fold_dir / "trace.csv", config_hash=chash)
        model.save_params(
            fold_dir / "model.params", params,
            epoch=fold_cfg.epochs - 1, meta={"config_hash": chash},
        )
        payload = dataclasses.asdict(report)
        payload.update({"config_hash": chash, "fold": fold})
        (fold_dir / "metrics.json").write_text(
            json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
        )
        reports.append(report)
        echo(f"[{config.train.ablation.value}] fold {fold}: acc={report.acc:.4f} "
             f"auc={report.auc if report.auc is None else round(report.auc, 4)} "
             f"nll={report.nll:.4f}")

    _write_per_fold_csv(
        out / "per_fold_metrics.csv", [((), f, r) for f, r in enumerate(reports)], chash
    )
    _write_summary_csv(out / "summary.csv", [((), reports)], chash)
    (out / "config_resolved.json").write_text(
        json.dumps({**config.to_dict(), "config_hash": chash}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    (out / "run_manifest.json").write_text(
        json.dumps(
            {
                "created_unix": time.time(),
                "backend": backend.active_name(),
                "numpy": np.__version__,
                "package_version": __version__,
            },
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return reports


def run_ablation_grid(config: ExperimentConfig, kind_sweep: bool = False, echo=print) -> dict:
    """Run all four ablation arms with shared seeds and splits.

    Optionally sweeps the four hard/soft combinations of the two pace
    channels on the full objective. Returns {arm name: per-fold reports}.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(config)

    results = {}
    for arm in ABLATION_ARMS:
        arm_cfg = dataclasses.replace(
            config,
            output_dir=str(out / arm.value),
            train=dataclasses.replace(config.train, ablation=arm),
        )
        results[arm.value] = run_experiment(arm_cfg, echo=echo)

    grid_rows = [
        ((arm.value,), fold, report)
        for arm in ABLATION_ARMS
        for fold, report in enumerate(results[arm.value])
    ]
    grid_rows.sort(key=lambda row: (row[1], ABLATION_ARMS.index(Ablation(row[0][0]))))
    _write_per_fold_csv(out / "ablation_grid.csv", grid_rows, chash, extra_cols=("arm",))
    _write_summary_csv(
        out / "ablation_summary.csv",
        [((arm.value,), results[arm.value]) for arm in ABLATION_ARMS],
        chash,
        extra_cols=("arm",),
    )

    if kind_sweep:
        sweep = {}
        for pcl_kind in (RegularizerKind.HARD, RegularizerKind.SOFT):
            for pcd_kind in (RegularizerKind.HARD, RegularizerKind.SOFT):
                name = f"pcl_{pcl_kind.value}_pcd_{pcd_kind.value}"
                sweep_cfg = dataclasses.replace(
                    config,
                    output_dir=str(out / "kind_sweep" / name),
                    train=dataclasses.replace(
                        config.train,
                        ablation=Ablation.FULL,
                        pcl_kind=pcl_kind,
                        pcd_kind=pcd_kind,
                    ),
                )
                sweep[name] = run_experiment(sweep_cfg, echo=echo)
        _write_per_fold_csv(
            out / "kind_sweep_grid.csv",
            [((name,), fold, r) for name, reps in sweep.items() for fold, r in enumerate(reps)],
            chash,
            extra_cols=("arm",),
        )
        _write_summary_csv(
            out / "kind_sweep_summary.csv",
            [((name,), reps) for name, reps in sweep.items()],
            chash,
            extra_cols=("arm",),
        )
        results["kind_sweep"] = sweep
    return results


def emit_curves(trace_paths, out_path):
    """Merge trace CSVs into one long-format (run, epoch, metric, value) CSV."""
    if not trace_paths:
        raise ValueError("need at least one trace file")
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("run,epoch,metric,value\n")
        for path in trace_paths:
            trace = TrainingTrace.read_csv(path)
            run = str(Path(path).with_suffix(""))
            for row in trace.rows:
                for metric in TRACE_COLUMNS[1:]:
                    f.write(f"{run},{row.epoch},{metric},{repr(float(getattr(row, metric)))}\n")


def generate_dataset_file(spec_path, out_path):
    """Materialize a synthetic dataset spec (YAML) as a CSV with clean labels."""
    try:
        with open(spec_path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"cannot read dataset spec {spec_path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse dataset spec {spec_path}: {e}") from None
    section = _Section(raw, "")
    spec = _parse_dataset(section)
    section.finish()
    if not isinstance(spec, SyntheticSpec):
        raise ConfigError("gen-data expects a synthetic dataset spec")
    save_csv(out_path, build_dataset(spec))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pacedistill",
        description="Paced-curriculum self-distillation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_overrides(p):
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--epochs", type=int, default=None, help="override train.epochs")
        p.add_argument(
            "--ablation", choices=[a.value for a in Ablation], default=None,
            help="override train.ablation",
        )
        p.add_argument("--gamma", type=float, default=None, help="override train.gamma")

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config")
    add_overrides(run_p)

    ablate_p = sub.add_parser("ablate", help="run the four-arm ablation grid")
    ablate_p.add_argument("config")
    ablate_p.add_argument(
        "--kind-sweep", action="store_true",
        help="also sweep hard/soft for both pace channels",
    )
    add_overrides(ablate_p)

    curves_p = sub.add_parser("curves", help="merge traces into plot-ready CSV")
    curves_p.add_argument("traces", nargs="+")
    curves_p.add_argument("-o", "--output", required=True)

    gen_p = sub.add_parser("gen-data", help="write a synthetic dataset to CSV")
    gen_p.add_argument("spec")
    gen_p.add_argument("-o", "--output", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "ablate"):
            overrides = {
                k: v
                for k, v in (
                    ("seed", args.seed),
                    ("epochs", args.epochs),
                    ("ablation", args.ablation),
                    ("gamma", args.gamma),
                )
                if v is not None
            }
            config = load_experiment_config(args.config, overrides)
            if args.command == "run":
                run_experiment(config)
            else:
                run_ablation_grid(config, kind_sweep=args.kind_sweep)
        elif args.command == "curves":
            emit_curves(args.traces, args.output)
        else:
            generate_dataset_file(args.spec, args.output)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DivergenceError, ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
