"""Permutation predictor importance and per-level malignancy profiles.

A variable's importance is the AUROC decrease when its values are randomly
shuffled across the scored rows, breaking the variable-label association.
All encoded columns of a clinical variable move together as one unit, so
multi-level categoricals are measured as whole variables. Shuffles repeat R
times per variable; drops may be negative and are kept as-is in averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import schema
from .dataset import Dataset
from .encoding import EncodedMatrix
from .errors import ComputeError, DataError
from .metrics import auroc
from .models import TrainedModel, score
from .rng import substream

DEFAULT_SHUFFLES = 10
SIZE_THRESHOLD_CM = 0.8


def permutation_importance(
    model: TrainedModel,
    m: EncodedMatrix,
    rows,
    variable: str,
    R: int = DEFAULT_SHUFFLES,
    seed: int = 0,
) -> float:
    """Baseline AUROC minus the mean AUROC over R shuffles of one variable."""
    if variable not in m.var_columns:
        raise DataError(f"unknown variable '{variable}'")
    if R < 1:
        raise DataError("shuffle repetition count R must be >= 1")
    rows = np.asarray(rows, dtype=np.int64)
    truth = m.labels[rows]
    baseline = auroc(score(model, m, rows), truth)

    cols = list(m.var_columns[variable])
    shuffled_areas = np.empty(R)
    values = m.values
    raw = m.raw
    for r in range(R):
        perm = substream(seed, "shuffle", variable, r).permutation(rows.size)
        values_mod = values.copy()
        values_mod[np.ix_(rows, cols)] = values[np.ix_(rows[perm], cols)]
        raw_mod = raw.copy()
        raw_mod[np.ix_(rows, cols)] = raw[np.ix_(rows[perm], cols)]
        m_mod = EncodedMatrix(
            values=values_mod, labels=m.labels, groups=m.groups,
            var_columns=m.var_columns, column_names=m.column_names,
            column_mean=m.column_mean, column_sd=m.column_sd,
            standardized=m.standardized, raw=raw_mod,
        )
        shuffled_areas[r] = auroc(score(model, m_mod, rows), truth)
    return float(baseline - shuffled_areas.mean())


@dataclass(frozen=True)
class ImportanceTable:
    variables: tuple[str, ...]  # sorted by normalized value, descending
    per_model: dict[str, dict[str, float]]  # kind -> variable -> mean drop
    mean_drop: dict[str, float]
    normalized: dict[str, float]
    shuffles: int
    normalization_skipped: bool  # set when no variable has a positive drop


def aggregate_importance(per_model: dict[str, dict[str, float]],
                         shuffles: int = DEFAULT_SHUFFLES) -> ImportanceTable:
    """Average drops across models per variable, normalize by the maximum."""
    kinds = list(per_model)
    if not kinds:
        raise DataError("no per-model importance tables given")
    variables = set(per_model[kinds[0]])
    for kind in kinds[1:]:
        if set(per_model[kind]) != variables:
            raise DataError("per-model tables disagree on the variable set")
    mean_drop = {v: float(np.mean([per_model[k][v] for k in kinds]))
                 for v in variables}
    top = max(mean_drop.values())
    skipped = top <= 0.0
    if skipped:
        normalized = dict(mean_drop)
    else:
        normalized = {v: d / top for v, d in mean_drop.items()}
    order = tuple(sorted(variables, key=lambda v: (-normalized[v], v)))
    return ImportanceTable(
        variables=order,
        per_model={k: dict(t) for k, t in per_model.items()},
        mean_drop=mean_drop,
        normalized=normalized,
        shuffles=shuffles,
        normalization_skipped=skipped,
    )


def _importance_cell(m: EncodedMatrix, specs, plan, R: int, seed: int,
                     cell: tuple[int, int]) -> dict:
    from .evaluation import _rows_by_patient, _split_rows
    from .models import train

    rep, fold = cell
    train_rows, test_rows = _split_rows(m, plan, rep, fold, _rows_by_patient(m))
    cell_seed = seed + 1_000_003 * rep + fold
    drops: dict[str, dict[str, float]] = {}
    for spec in specs:
        model = train(spec, m, train_rows)
        per_var = {}
        for variable in m.var_columns:
            try:
                per_var[variable] = permutation_importance(
                    model, m, test_rows, variable, R=R, seed=cell_seed)
            except ComputeError:
                per_var[variable] = np.nan  # single-class fold: AUROC undefined
        drops[spec.kind] = per_var
    return {"rep": rep, "fold": fold, "drops": drops}


def cv_importance(
    m: EncodedMatrix,
    specs,
    plan,
    R: int = DEFAULT_SHUFFLES,
    seed: int | None = None,
    workers: int = 1,
) -> ImportanceTable:
    """Held-out permutation importance within the CV structure.

    For every (rep, fold) each model is trained on the non-fold patients and
    shuffling happens on the fold's test rows; drops are averaged over folds
    and repetitions per model, then aggregated across models.
    """
    from functools import partial

    from .evaluation import _check_plan, _pmap

    _check_plan(m, plan)
    if seed is None:
        seed = plan.seed
    cells = [(rep, fold) for rep in range(plan.reps) for fold in range(plan.k)]
    results = _pmap(partial(_importance_cell, m, tuple(specs), plan, R, seed),
                    cells, workers)
    kinds = [s.kind for s in specs]
    per_model: dict[str, dict[str, float]] = {}
    for kind in kinds:
        per_var = {}
        for variable in m.var_columns:
            values = np.array([res["drops"][kind][variable] for res in results])
            defined = values[~np.isnan(values)]
            if defined.size == 0:
                raise ComputeError(f"AUROC undefined on every fold for '{variable}'")
            per_var[variable] = float(defined.mean())
        per_model[kind] = per_var
    return aggregate_importance(per_model, shuffles=R)


@dataclass(frozen=True)
class MalignancyProfile:
    variable: str
    levels: tuple[str, ...]
    counts: dict[str, int]
    percent_malignant: dict[str, float | None]  # None for empty levels


def malignancy_profile(ds: Dataset, variable: str,
                       size_threshold: float = SIZE_THRESHOLD_CM) -> MalignancyProfile:
    """Percent malignant per level of a categorical, or per size bin."""
    if len(ds) == 0:
        raise DataError("cannot profile an empty dataset")
    if variable == "size":
        low = f"<={size_threshold:g}cm"
        high = f">{size_threshold:g}cm"
        levels = (low, high)
        keys = [high if r.size > size_threshold else low for r in ds.records]
    elif schema.is_categorical(variable):
        levels = schema.levels(variable)
        keys = [getattr(r, variable) for r in ds.records]
    else:
        raise DataError(f"'{variable}' is not a categorical variable or 'size'")

    counts = {lvl: 0 for lvl in levels}
    malignant = {lvl: 0 for lvl in levels}
    for key, rec in zip(keys, ds.records):
        counts[key] += 1
        if rec.malignancy == "malignant":
            malignant[key] += 1
    percent = {lvl: (100.0 * malignant[lvl] / counts[lvl] if counts[lvl] else None)
               for lvl in levels}
    return MalignancyProfile(variable=variable, levels=levels,
                             counts=counts, percent_malignant=percent)
