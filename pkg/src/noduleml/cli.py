"""Command-line front end.

Commands: summarize, cv, bootstrap, importance, compare, synth, all. Each
command validates its configuration before computing, writes fixed-name CSV
and JSON outputs into the output directory, and drops the resolved
configuration next to them (minus the execution-only keys `workers` and
`out`, so identical runs produce identical files regardless of parallelism
or destination).

Exit codes: 0 success, 2 configuration errors, 3 data errors, 4 computation
errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import schema
from .config import RunConfig, build_config
from .dataset import Dataset, load_csv, preprocess, read_mapping, summarize, write_csv
from .encoding import EncodedMatrix, encode
from .errors import ComputeError, ConfigError, DataError, NodulemlError
from .evaluation import make_fold_plan, run_bootstrap, run_cv
from .importance import cv_importance, malignancy_profile
from .metrics import MetricSet, confusion, f1_from, metrics_from_confusion
from .models import ModelSpec, classify
from .reports import (
    write_bootstrap,
    write_compare,
    write_cv,
    write_importance,
    write_profiles,
    write_summary,
)
from .synth import DEFAULT_SIGNAL, STRONG_SIGNAL, synthesize

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4

_EXECUTION_KEYS = ("workers", "out")


def _signal_map(config: RunConfig) -> dict[str, float]:
    preset = config["synth.signal"]
    if preset == "strong":
        return dict(STRONG_SIGNAL)
    if preset == "none":
        return {}
    return dict(DEFAULT_SIGNAL)


def _load_dataset(config: RunConfig) -> Dataset:
    path = config["data.path"]
    if path is not None:
        mapping = None
        if config["data.mapping"] is not None:
            mapping = read_mapping(config["data.mapping"])
        return preprocess(load_csv(path, mapping))
    ds = synthesize(
        config["synth.patients"],
        seed=config.seed_for("synth"),
        signal=_signal_map(config),
        base_rate=config["synth.base_rate"],
    )
    return preprocess(ds)


def _specs(config: RunConfig) -> list[ModelSpec]:
    return [ModelSpec(kind, hyperparameters=config.model_overrides(kind),
                      seed=config.model_seed(kind))
            for kind in config.model_kinds()]


def _out_dir(config: RunConfig) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_resolved(config: RunConfig, out: Path) -> None:
    lines = [line for line in config.render().splitlines()
             if line.split(" =")[0] not in _EXECUTION_KEYS]
    (out / "resolved_config.txt").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8")


def _plan_for(config: RunConfig, m: EncodedMatrix):
    patients = sorted(set(m.groups))
    return make_fold_plan(patients, k=config["cv.folds"], reps=config["cv.reps"],
                          seed=config.seed_for("cv"))


def cmd_summarize(config: RunConfig) -> None:
    out = _out_dir(config)
    ds = _load_dataset(config)
    write_summary(summarize(ds), out)
    _write_resolved(config, out)
    print(f"summarize: {len(ds)} records -> {out / 'summary.csv'}")


def cmd_cv(config: RunConfig) -> None:
    out = _out_dir(config)
    ds = _load_dataset(config)
    m = encode(ds)
    plan = _plan_for(config, m)
    result = run_cv(m, _specs(config), plan, workers=config["workers"],
                    threshold=config["threshold"], macro=config["cv.macro"])
    write_cv(result, out)
    _write_resolved(config, out)
    print(f"cv: {len(result.kinds)} models x {plan.reps} reps -> {out / 'cv_metrics.csv'}")


def cmd_bootstrap(config: RunConfig) -> None:
    out = _out_dir(config)
    ds = _load_dataset(config)
    m = encode(ds)
    plan = _plan_for(config, m)
    summary = run_bootstrap(
        m, _specs(config), plan,
        B=config["bootstrap.replicates"],
        seed=config.seed_for("bootstrap"),
        workers=config["workers"],
        threshold=config["threshold"],
        identity=config["bootstrap.identity"],
        patient_level=config["bootstrap.patient_level"],
    )
    write_bootstrap(summary, out)
    _write_resolved(config, out)
    print(f"bootstrap: B={summary.replicate_count} -> {out / 'bootstrap_summary.csv'}")


def cmd_importance(config: RunConfig) -> None:
    out = _out_dir(config)
    ds = _load_dataset(config)
    m = encode(ds)
    plan = _plan_for(config, m)
    table = cv_importance(m, _specs(config), plan,
                          R=config["importance.shuffles"],
                          seed=config.seed_for("importance"),
                          workers=config["workers"])
    write_importance(table, out)
    profiled = [v for v in table.variables
                if v == "size" or schema.is_categorical(v)][:6]
    write_profiles([malignancy_profile(ds, v) for v in profiled], out)
    _write_resolved(config, out)
    print(f"importance: top variable '{table.variables[0]}' -> {out / 'importance.csv'}")


def read_expert(path: str | Path, ds: Dataset) -> dict[tuple[str, str], str | None]:
    """Expert assessments keyed by (patient_id, location).

    CSV columns: patient_id, location, assessment. Empty/NA assessments mark
    unassessed nodules. Keys must identify nodules of the dataset.
    """
    known = {(r.patient_id, r.location) for r in ds.records}
    out: dict[tuple[str, str], str | None] = {}
    unknown = []
    with Path(path).open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        required = {"patient_id", "location", "assessment"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(f"expert file needs columns {sorted(required)}")
        for row in reader:
            key = (row["patient_id"].strip(), row["location"].strip().lower())
            if key not in known:
                unknown.append(key)
                continue
            cell = row["assessment"].strip().lower()
            if cell in ("", "na", "n/a", "not assessed"):
                out[key] = None
            elif cell in ("benign", "malignant"):
                out[key] = cell
            else:
                raise DataError(f"expert assessment {cell!r} for {key} is not "
                                "'benign', 'malignant', or empty")
    if unknown:
        raise DataError(f"expert file keys not in the dataset: {unknown[:5]}"
                        + ("..." if len(unknown) > 5 else ""))
    return out


def cmd_compare(config: RunConfig) -> None:
    out = _out_dir(config)
    if config["expert.path"] is None:
        raise ConfigError("compare requires an expert assessment file (--expert)")
    ds = _load_dataset(config)
    expert = read_expert(config["expert.path"], ds)

    truth = ds.labels()
    assessed_rows = []
    predicted = []
    for i, rec in enumerate(ds.records):
        level = expert.get((rec.patient_id, rec.location))
        if level is not None:
            assessed_rows.append(i)
            predicted.append(1 if level == "malignant" else 0)
    if not assessed_rows:
        raise DataError("expert file assesses no nodules of this dataset")
    excluded = len(ds) - len(assessed_rows)
    expert_cm = confusion(np.array(predicted), truth[np.array(assessed_rows)])
    expert_metrics = metrics_from_confusion(expert_cm)

    kind = config["compare.model"]
    m = encode(ds)
    plan = _plan_for(config, m)
    spec = ModelSpec(kind, hyperparameters=config.model_overrides(kind),
                     seed=config.model_seed(kind))
    result = run_cv(m, [spec], plan, workers=config["workers"],
                    threshold=config["threshold"], macro=config["cv.macro"])
    means = result.means[kind]
    # the comparison F1 is derived from the averaged precision/sensitivity
    model_metrics = means.as_dict()
    if means.precision is not None and means.sensitivity is not None:
        model_metrics["f1"] = f1_from(means.precision, means.sensitivity)
    first_rep = classify(result.scores[kind][0], result.thresholds[kind])
    model_cm = confusion(first_rep, truth)

    write_compare(expert_metrics, model_metrics, kind, expert_cm, model_cm,
                  excluded, out)
    _write_resolved(config, out)
    print(f"compare: expert vs {kind} ({excluded} unassessed) -> "
          f"{out / 'compare_metrics.csv'}")


def cmd_synth(config: RunConfig) -> None:
    out = _out_dir(config)
    ds = synthesize(
        config["synth.patients"],
        seed=config.seed_for("synth"),
        signal=_signal_map(config),
        base_rate=config["synth.base_rate"],
    )
    write_csv(ds, out / "synthetic.csv")
    _write_resolved(config, out)
    print(f"synth: {len(ds)} nodules from {config['synth.patients']} patients "
          f"-> {out / 'synthetic.csv'}")


def cmd_all(config: RunConfig) -> None:
    cmd_summarize(config)
    cmd_cv(config)
    cmd_bootstrap(config)
    cmd_importance(config)
    if config["expert.path"] is not None:
        cmd_compare(config)


_COMMANDS = {
    "summarize": cmd_summarize,
    "cv": cmd_cv,
    "bootstrap": cmd_bootstrap,
    "importance": cmd_importance,
    "compare": cmd_compare,
    "synth": cmd_synth,
    "all": cmd_all,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noduleml",
        description="Thyroid nodule malignancy prediction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--data", help="clinical CSV path (omit to synthesize)")
        p.add_argument("--mapping", help="column mapping file for --data")
        p.add_argument("--expert", help="expert assessment CSV (compare)")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--workers", type=int, help="parallel worker count")
        p.add_argument("--out", help="output directory")
        p.add_argument("--bootstrap-reps", type=int, dest="bootstrap_reps",
                       help="bootstrap replicate count B")
        p.add_argument("--shuffle-reps", type=int, dest="shuffle_reps",
                       help="importance shuffle repetitions R")
        p.add_argument("--threshold", type=float,
                       help="classification threshold for probability scores")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    cli_entries = {
        "data.path": args.data,
        "data.mapping": args.mapping,
        "expert.path": args.expert,
        "seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "bootstrap.replicates": args.bootstrap_reps,
        "importance.shuffles": args.shuffle_reps,
        "threshold": args.threshold,
    }
    try:
        config = build_config(config_path=args.config, cli_entries=cli_entries)
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ComputeError, NodulemlError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return 0


if __name__ == "__main__":
    sys.exit(main())
