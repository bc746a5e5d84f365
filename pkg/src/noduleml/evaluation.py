"""Patient-grouped cross-validation with repetitions, and the fold-level
bootstrap that yields empirical performance distributions.

Folds partition patients, never nodules, so a patient's nodules cannot
straddle train and test; that freedom from leakage is asserted on every run.
Metrics are pooled over all test predictions within a repetition
(micro-average) by default and then averaged across repetitions; a macro
switch averages per-fold metrics instead. All randomness is drawn from
streams keyed by (seed, rep, fold, replicate), so outputs are identical for
any worker count and any execution order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .encoding import EncodedMatrix
from .errors import ComputeError, ConfigError, DataError
from .metrics import (
    METRIC_NAMES,
    MetricSet,
    auroc,
    confusion,
    mean_metrics,
    metrics_from_confusion,
)
from .models import ModelSpec, TrainedModel, classify, score, train
from .rng import substream


@dataclass(frozen=True)
class FoldPlan:
    k: int
    reps: int
    seed: int
    # assignment[rep][fold] -> tuple of patient ids forming that test fold
    assignment: tuple[tuple[tuple[str, ...], ...], ...]

    def patients(self) -> frozenset[str]:
        return frozenset(p for rep in self.assignment for fold in rep for p in fold)


def make_fold_plan(patients, k: int, reps: int, seed: int) -> FoldPlan:
    """Independent uniform patient shuffles per repetition, k near-equal folds."""
    ids = sorted(set(patients))
    if k < 2:
        raise ConfigError("fold count k must be at least 2")
    if reps < 1:
        raise ConfigError("repetition count must be at least 1")
    if k > len(ids):
        raise ConfigError(f"k={k} exceeds the {len(ids)} available patients")
    ids_arr = np.array(ids, dtype=object)
    assignment = []
    for rep in range(reps):
        order = substream(seed, "fold-plan", rep).permutation(len(ids))
        shuffled = ids_arr[order]
        folds = [tuple(chunk) for chunk in np.array_split(shuffled, k)]
        assignment.append(tuple(folds))
    return FoldPlan(k=k, reps=reps, seed=seed, assignment=tuple(assignment))


@dataclass(frozen=True)
class CvResult:
    kinds: tuple[str, ...]
    # per_rep[kind][rep] -> MetricSet of that repetition's pooled predictions
    per_rep: dict[str, tuple[MetricSet, ...]]
    means: dict[str, MetricSet]
    skipped: dict[str, dict[str, int]]
    # scores[kind] has shape (reps, n_rows): pooled test scores per repetition
    scores: dict[str, np.ndarray]
    thresholds: dict[str, float]
    degenerate: tuple[tuple[str, int, int], ...]  # (kind, rep, fold)


@dataclass(frozen=True)
class DistSummary:
    mean: float | None
    sd: float | None
    q025: float | None
    q50: float | None
    q975: float | None
    n: int
    n_undefined: int


@dataclass(frozen=True)
class BootstrapSummary:
    kinds: tuple[str, ...]
    replicate_count: int
    # replicates[kind][metric]: length B*reps, NaN marks undefined entries
    replicates: dict[str, dict[str, np.ndarray]]
    stats: dict[str, dict[str, DistSummary]]
    degenerate: tuple[tuple[str, int, int, int], ...]  # (kind, rep, fold, replicate)


def summarize_distribution(values) -> DistSummary:
    """Mean, sample SD and (2.5, 50, 97.5)% empirical quantiles.

    ``values`` may contain None/NaN for undefined replicates; they are
    excluded and counted. An all-undefined input yields an undefined summary.
    """
    arr = np.array([np.nan if v is None else float(v) for v in values], dtype=float)
    if arr.size == 0:
        raise DataError("cannot summarize an empty value vector")
    defined = arr[~np.isnan(arr)]
    n_undef = int(arr.size - defined.size)
    if defined.size == 0:
        return DistSummary(None, None, None, None, None, n=0, n_undefined=n_undef)
    q025, q50, q975 = np.quantile(defined, [0.025, 0.5, 0.975], method="linear")
    sd = float(np.std(defined, ddof=1)) if defined.size > 1 else 0.0
    return DistSummary(
        mean=float(np.mean(defined)), sd=sd,
        q025=float(q025), q50=float(q50), q975=float(q975),
        n=int(defined.size), n_undefined=n_undef,
    )


def _rows_by_patient(m: EncodedMatrix) -> dict[str, np.ndarray]:
    by: dict[str, list[int]] = {}
    for i, g in enumerate(m.groups):
        by.setdefault(g, []).append(i)
    return {g: np.array(rows, dtype=np.int64) for g, rows in by.items()}


def _check_plan(m: EncodedMatrix, plan: FoldPlan) -> None:
    missing = sorted(set(m.groups) - plan.patients())
    if missing:
        raise DataError(f"fold plan does not cover patients: {missing[:5]}"
                        + ("..." if len(missing) > 5 else ""))


def _split_rows(m: EncodedMatrix, plan: FoldPlan, rep: int, fold: int,
                by_patient: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    fold_patients = set(plan.assignment[rep][fold])
    test_atoms = [by_patient[p] for p in plan.assignment[rep][fold] if p in by_patient]
    test_rows = (np.sort(np.concatenate(test_atoms)) if test_atoms
                 else np.empty(0, dtype=np.int64))
    mask = np.array([g not in fold_patients for g in m.groups])
    train_rows = np.nonzero(mask)[0].astype(np.int64)
    # leakage guard: asserted on every run, not sampled
    train_patients = {m.groups[i] for i in train_rows}
    if train_patients & fold_patients:
        raise ComputeError(f"leakage: rep {rep} fold {fold} shares patients across the split")
    return train_rows, test_rows


def _metric_set(scores: np.ndarray, truth: np.ndarray, threshold: float) -> MetricSet:
    cm = confusion(classify(scores, threshold), truth)
    base = metrics_from_confusion(cm)
    try:
        area = auroc(scores, truth)
    except ComputeError:
        area = None
    return MetricSet(accuracy=base.accuracy, auroc=area,
                     sensitivity=base.sensitivity, specificity=base.specificity,
                     precision=base.precision, f1=base.f1)


def _cv_cell(m: EncodedMatrix, specs: tuple[ModelSpec, ...], plan: FoldPlan,
             cell: tuple[int, int]) -> dict:
    rep, fold = cell
    by_patient = _rows_by_patient(m)
    train_rows, test_rows = _split_rows(m, plan, rep, fold, by_patient)
    out_scores: dict[str, np.ndarray] = {}
    degenerate = []
    for spec in specs:
        if train_rows.size == 0:
            raise DataError(f"rep {rep} fold {fold}: empty training split")
        model = train(spec, m, train_rows)
        if model.degenerate:
            degenerate.append((spec.kind, rep, fold))
        out_scores[spec.kind] = (score(model, m, test_rows)
                                 if test_rows.size else np.empty(0))
    return {"rep": rep, "fold": fold, "test_rows": test_rows,
            "scores": out_scores, "degenerate": degenerate}


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _default_threshold(kind: str, threshold: float | None) -> float:
    if kind in ("svm_radial", "svm_linear"):
        return 0.0
    return 0.5 if threshold is None else float(threshold)


def run_cv(
    m: EncodedMatrix,
    specs: list[ModelSpec],
    plan: FoldPlan,
    workers: int = 1,
    threshold: float | None = None,
    macro: bool = False,
) -> CvResult:
    """Train/score every spec over every (rep, fold); metrics per repetition."""
    _check_plan(m, plan)
    specs = tuple(specs)
    kinds = tuple(s.kind for s in specs)
    if len(set(kinds)) != len(kinds):
        raise ConfigError("duplicate model kinds in the spec list")
    cells = [(rep, fold) for rep in range(plan.reps) for fold in range(plan.k)]
    results = _pmap(partial(_cv_cell, m, specs, plan), cells, workers)

    n = m.n_rows
    truth = m.labels
    scores = {k: np.full((plan.reps, n), np.nan) for k in kinds}
    fold_sets: dict[tuple[str, int, int], MetricSet] = {}
    degenerate: list[tuple[str, int, int]] = []
    for res in results:
        rep, fold, rows = res["rep"], res["fold"], res["test_rows"]
        degenerate.extend(res["degenerate"])
        for kind in kinds:
            if np.isfinite(scores[kind][rep, rows]).any():
                raise ComputeError(f"rep {rep}: a nodule was scored twice")
            scores[kind][rep, rows] = res["scores"][kind]
            if macro and rows.size:
                fold_sets[(kind, rep, fold)] = _metric_set(
                    res["scores"][kind], truth[rows],
                    _default_threshold(kind, threshold))

    per_rep: dict[str, tuple[MetricSet, ...]] = {}
    means: dict[str, MetricSet] = {}
    skipped: dict[str, dict[str, int]] = {}
    for kind in kinds:
        rep_sets = []
        for rep in range(plan.reps):
            if np.isnan(scores[kind][rep]).any():
                raise ComputeError(f"rep {rep}: test folds do not cover every nodule")
            if macro:
                folds = [fold_sets[(kind, rep, f)] for f in range(plan.k)
                         if (kind, rep, f) in fold_sets]
                rep_set, _ = mean_metrics(folds)
            else:
                rep_set = _metric_set(scores[kind][rep], truth,
                                      _default_threshold(kind, threshold))
            rep_sets.append(rep_set)
        per_rep[kind] = tuple(rep_sets)
        means[kind], skipped[kind] = mean_metrics(rep_sets)
    thresholds = {k: _default_threshold(k, threshold) for k in kinds}
    return CvResult(kinds=kinds, per_rep=per_rep, means=means, skipped=skipped,
                    scores=scores, thresholds=thresholds,
                    degenerate=tuple(degenerate))


def _resample_rows(train_rows: np.ndarray, groups, rng: np.random.Generator,
                   patient_level: bool, max_redraws: int, labels: np.ndarray):
    """Bootstrap resample of the training rows; redraws single-class draws."""
    for _ in range(max_redraws + 1):
        if patient_level:
            train_patients = list(dict.fromkeys(groups[i] for i in train_rows))
            by = {}
            for i in train_rows:
                by.setdefault(groups[i], []).append(i)
            drawn = rng.integers(0, len(train_patients), len(train_patients))
            rows = np.concatenate([np.array(by[train_patients[d]], dtype=np.int64)
                                   for d in drawn])
        else:
            rows = train_rows[rng.integers(0, train_rows.size, train_rows.size)]
        if np.unique(labels[rows]).size > 1:
            return rows, False
    return rows, True


def _bootstrap_cell(m: EncodedMatrix, specs: tuple[ModelSpec, ...], plan: FoldPlan,
                    B: int, seed: int, identity: bool, patient_level: bool,
                    max_redraws: int, cell: tuple[int, int]) -> dict:
    rep, fold = cell
    by_patient = _rows_by_patient(m)
    train_rows, test_rows = _split_rows(m, plan, rep, fold, by_patient)
    labels = m.labels
    out = {kind: np.empty((B, test_rows.size)) for kind in (s.kind for s in specs)}
    degenerate = []
    for b in range(B):
        if identity:
            rows, flagged = train_rows, False
        else:
            rng = substream(seed, "bootstrap", rep, fold, b)
            rows, flagged = _resample_rows(train_rows, m.groups, rng,
                                           patient_level, max_redraws, labels)
        for spec in specs:
            model = train(spec, m, rows)
            if flagged or model.degenerate:
                degenerate.append((spec.kind, rep, fold, b))
            out[spec.kind][b] = (score(model, m, test_rows)
                                 if test_rows.size else np.empty(0))
    return {"rep": rep, "fold": fold, "test_rows": test_rows,
            "scores": out, "degenerate": degenerate}


def run_bootstrap(
    m: EncodedMatrix,
    specs: list[ModelSpec],
    plan: FoldPlan,
    B: int = 1000,
    seed: int | None = None,
    workers: int = 1,
    threshold: float | None = None,
    identity: bool = False,
    patient_level: bool = False,
    max_redraws: int = 100,
) -> BootstrapSummary:
    """Per replicate and (rep, fold): resample training rows with replacement,
    train, score the untouched test fold; summarize the B*reps pooled values.

    With ``identity=True`` the resampling step is disabled and the replicate
    metrics reproduce run_cv exactly.
    """
    if B < 1:
        raise ConfigError("bootstrap replicate count B must be >= 1")
    _check_plan(m, plan)
    specs = tuple(specs)
    kinds = tuple(s.kind for s in specs)
    if seed is None:
        seed = plan.seed
    truth = m.labels
    n = m.n_rows

    replicates: dict[str, dict[str, list]] = {
        k: {name: [] for name in METRIC_NAMES} for k in kinds}
    degenerate: list[tuple[str, int, int, int]] = []
    for rep in range(plan.reps):
        cells = [(rep, fold) for fold in range(plan.k)]
        results = _pmap(partial(_bootstrap_cell, m, specs, plan, B, seed,
                                identity, patient_level, max_redraws),
                        cells, workers)
        pooled = {k: np.full((B, n), np.nan) for k in kinds}
        for res in results:
            rows = res["test_rows"]
            degenerate.extend(res["degenerate"])
            for kind in kinds:
                pooled[kind][:, rows] = res["scores"][kind]
        for kind in kinds:
            if np.isnan(pooled[kind]).any():
                raise ComputeError(f"rep {rep}: test folds do not cover every nodule")
            thr = _default_threshold(kind, threshold)
            for b in range(B):
                ms = _metric_set(pooled[kind][b], truth, thr)
                for name in METRIC_NAMES:
                    value = getattr(ms, name)
                    replicates[kind][name].append(np.nan if value is None else value)

    rep_arrays = {k: {name: np.array(vals) for name, vals in by.items()}
                  for k, by in replicates.items()}
    stats = {k: {name: summarize_distribution(arr) for name, arr in by.items()}
             for k, by in rep_arrays.items()}
    return BootstrapSummary(kinds=kinds, replicate_count=B,
                            replicates=rep_arrays, stats=stats,
                            degenerate=tuple(degenerate))
