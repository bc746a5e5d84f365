"""CSV and JSON renderings of the result tables and figure data.

CSV cells are rounded to 4 decimals to match the reference tables; the JSON
files keep full precision. File names are fixed; every writer is
deterministic so reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .evaluation import BootstrapSummary, CvResult, DistSummary
from .importance import ImportanceTable, MalignancyProfile
from .metrics import ConfusionMatrix, MetricSet

TABLE_METRICS = ("accuracy", "auroc", "sensitivity", "specificity", "precision")
COMPARE_METRICS = ("accuracy", "f1", "sensitivity", "specificity", "precision")


def _cell(value, places: int = 4) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return f"{value:.{places}f}"
    return str(value)


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_summary(rows: list[dict], out: Path) -> None:
    header = ["field", "statistic", "level", "value", "spread", "percent"]
    csv_rows = []
    for row in rows:
        csv_rows.append([
            row["field"], row["statistic"], row.get("level", ""),
            _cell(row["value"]) if isinstance(row["value"], float) else row["value"],
            _cell(row["spread"]) if "spread" in row else "",
            _cell(row["percent"], 2) if "percent" in row else "",
        ])
    _write_rows(out / "summary.csv", header, csv_rows)
    _write_json(out / "summary.json", rows)


def _best_marks(values_by_kind: dict[str, MetricSet], metrics) -> dict[str, list[str]]:
    marks: dict[str, list[str]] = {k: [] for k in values_by_kind}
    for name in metrics:
        defined = {k: getattr(ms, name) for k, ms in values_by_kind.items()
                   if getattr(ms, name) is not None}
        if not defined:
            continue
        top = max(defined.values())
        for kind, value in defined.items():
            if value == top:
                marks[kind].append(name)
    return marks


def write_cv(cv: CvResult, out: Path) -> None:
    marks = _best_marks(cv.means, TABLE_METRICS)
    header = ["model", *TABLE_METRICS, "best"]
    rows = []
    for kind in cv.kinds:
        ms = cv.means[kind]
        rows.append([kind, *(_cell(getattr(ms, name)) for name in TABLE_METRICS),
                     ";".join(marks[kind])])
    _write_rows(out / "cv_metrics.csv", header, rows)
    payload = {
        "means": {k: cv.means[k].as_dict() for k in cv.kinds},
        "per_repetition": {k: [ms.as_dict() for ms in cv.per_rep[k]] for k in cv.kinds},
        "skipped_undefined": cv.skipped,
        "thresholds": cv.thresholds,
        "degenerate_folds": [list(d) for d in cv.degenerate],
        "best": marks,
    }
    _write_json(out / "cv_metrics.json", payload)


def _dist_dict(ds: DistSummary) -> dict:
    return {"mean": ds.mean, "sd": ds.sd, "q025": ds.q025, "q50": ds.q50,
            "q975": ds.q975, "n": ds.n, "n_undefined": ds.n_undefined}


def write_bootstrap(bs: BootstrapSummary, out: Path) -> None:
    header = ["model", "metric", "mean", "sd", "ci_low", "median", "ci_high",
              "n", "n_undefined"]
    rows = []
    for kind in bs.kinds:
        for metric in ("accuracy", "auroc", "sensitivity", "specificity",
                       "precision", "f1"):
            st = bs.stats[kind][metric]
            rows.append([kind, metric, _cell(st.mean), _cell(st.sd),
                         _cell(st.q025), _cell(st.q50), _cell(st.q975),
                         st.n, st.n_undefined])
    _write_rows(out / "bootstrap_summary.csv", header, rows)
    _write_json(out / "bootstrap_summary.json", {
        "replicate_count": bs.replicate_count,
        "stats": {k: {m: _dist_dict(st) for m, st in by.items()}
                  for k, by in bs.stats.items()},
        "degenerate_replicates": [list(d) for d in bs.degenerate],
    })
    long_rows = []
    for kind in bs.kinds:
        for metric, values in sorted(bs.replicates[kind].items()):
            for i, value in enumerate(values):
                long_rows.append([kind, metric, i,
                                  "undefined" if np.isnan(value) else repr(float(value))])
    _write_rows(out / "bootstrap_replicates.csv",
                ["model", "metric", "replicate", "value"], long_rows)


def write_importance(table: ImportanceTable, out: Path) -> None:
    kinds = sorted(table.per_model)
    header = ["variable", "mean_drop", "normalized", *[f"drop_{k}" for k in kinds]]
    rows = []
    for variable in table.variables:
        rows.append([
            variable, _cell(table.mean_drop[variable]),
            _cell(table.normalized[variable]),
            *[_cell(table.per_model[k][variable]) for k in kinds],
        ])
    _write_rows(out / "importance.csv", header, rows)
    _write_json(out / "importance.json", {
        "variables": list(table.variables),
        "mean_drop": table.mean_drop,
        "normalized": table.normalized,
        "per_model": table.per_model,
        "shuffles": table.shuffles,
        "normalization_skipped": table.normalization_skipped,
    })
    # bar-plot export: negative drops render as 0, raw values stay above
    bar_rows = [[v, _cell(max(table.normalized[v], 0.0))] for v in table.variables]
    _write_rows(out / "importance_bars.csv", ["variable", "value"], bar_rows)


def write_profiles(profiles: list[MalignancyProfile], out: Path) -> None:
    rows = []
    for prof in profiles:
        for level in prof.levels:
            pct = prof.percent_malignant[level]
            rows.append([prof.variable, level, prof.counts[level],
                         "undefined" if pct is None else _cell(pct, 2)])
    _write_rows(out / "malignancy_profiles.csv",
                ["variable", "level", "count", "percent_malignant"], rows)


def write_compare(expert_metrics: MetricSet, model_metrics: dict[str, float | None],
                  model_kind: str, expert_cm: ConfusionMatrix,
                  model_cm: ConfusionMatrix, excluded: int, out: Path) -> None:
    values_by_kind = {
        "expert": expert_metrics,
        model_kind: MetricSet(**{k: model_metrics.get(k) for k in
                                 ("accuracy", "auroc", "sensitivity",
                                  "specificity", "precision", "f1")}),
    }
    marks = _best_marks(values_by_kind, COMPARE_METRICS)
    header = ["method", *COMPARE_METRICS, "best"]
    rows = []
    for method, ms in values_by_kind.items():
        rows.append([method, *(_cell(getattr(ms, name)) for name in COMPARE_METRICS),
                     ";".join(marks[method])])
    _write_rows(out / "compare_metrics.csv", header, rows)

    cm_rows = []
    for method, cm in (("expert", expert_cm), (model_kind, model_cm)):
        cm_rows.append([method, "benign", cm.tn, cm.fn])
        cm_rows.append([method, "malignant", cm.fp, cm.tp])
    _write_rows(out / "confusion_matrices.csv",
                ["method", "prediction", "truth_benign", "truth_malignant"], cm_rows)
    _write_json(out / "compare_metrics.json", {
        "expert": expert_metrics.as_dict(),
        model_kind: model_metrics,
        "expert_confusion": {"tp": expert_cm.tp, "fp": expert_cm.fp,
                             "tn": expert_cm.tn, "fn": expert_cm.fn},
        "model_confusion": {"tp": model_cm.tp, "fp": model_cm.fp,
                            "tn": model_cm.tn, "fn": model_cm.fn},
        "expert_unassessed": excluded,
        "best": marks,
    })
