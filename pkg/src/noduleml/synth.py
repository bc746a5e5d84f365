"""Seeded surrogate datasets with known ground truth.

Patients receive 1-3 nodules in distinct thyroid locations. Laterality is
derived from that structure (a patient's only nodule is unilateral), and the
nodule-count/location constants below are solved so the resulting marginals
match the reference dataset targets. All other categoricals are drawn from
their target marginals; numerics follow the location/scale targets in the
schema. Malignancy comes from a logistic model over a configurable signal
map, with the intercept calibrated so the marginal malignant rate hits the
requested base rate.
"""

from __future__ import annotations

import math

import numpy as np

from . import schema
from .dataset import Dataset, NoduleRecord
from .errors import ConfigError, DataError
from .rng import substream

# P(patient has 1/2/3 nodules) and the location distribution of single
# nodules. Two-nodule patients occupy {right, left}; three-nodule patients
# occupy all locations. Solved against mean 1.7017 nodules per patient,
# unilateral fraction 0.2321 and the location marginals.
_NODULE_COUNT_P = (0.39497, 0.50836, 0.09667)
_SINGLE_LOCATION_P = (0.50832, 0.38266, 0.10902)

# Weights of the default planted signal, applied to standardized numeric
# values and to categorical level indicators.
DEFAULT_SIGNAL: dict[str, float] = {
    "calcification=present": 1.6,
    "blood_flow=enriched": 1.2,
    "size": 0.9,
    "composition=solid": 1.2,
}

# Same variables, boosted until the generator's Bayes AUROC exceeds 0.9;
# used by signal-recovery checks that need headroom over model error.
STRONG_SIGNAL: dict[str, float] = {
    "calcification=present": 3.0,
    "blood_flow=enriched": 2.5,
    "size": 2.0,
    "composition=solid": 2.5,
}

_Z75 = 0.6744897501960817  # 75% standard normal quantile


def _lognormal_params(target: schema.NumericTarget) -> tuple[float, float]:
    if target.kind == "lognormal_mean_sd":
        sigma2 = math.log(1.0 + (target.scale / target.loc) ** 2)
        return math.log(target.loc) - sigma2 / 2.0, math.sqrt(sigma2)
    if target.kind == "lognormal_median_iqr":
        mu = math.log(target.loc)
        sigma = math.asinh(target.scale / (2.0 * target.loc)) / _Z75
        return mu, sigma
    raise ValueError(target.kind)


def _draw_numeric(field: str, rng: np.random.Generator, n: int) -> np.ndarray:
    target = schema.NUMERIC_TARGETS[field]
    if target.kind == "normal_trunc":
        out = np.empty(n)
        filled = 0
        while filled < n:
            draw = rng.normal(target.loc, target.scale, size=2 * (n - filled))
            keep = draw[(draw >= target.lower) & (draw <= target.upper)][: n - filled]
            out[filled:filled + keep.size] = keep
            filled += keep.size
        return np.round(out) if field == "age" else out
    mu, sigma = _lognormal_params(target)
    return np.exp(rng.normal(mu, sigma, size=n))


def _numeric_standardizer(field: str) -> tuple[float, float]:
    """Target-scale (center, spread) used to weight numeric signal terms."""
    target = schema.NUMERIC_TARGETS[field]
    if target.kind == "normal_trunc":
        return target.loc, target.scale
    if target.kind == "lognormal_mean_sd":
        return target.loc, target.scale
    return target.loc, max(target.scale, 1e-12)


def validate_signal(signal: dict[str, float]) -> None:
    for key in signal:
        if key in schema.NUMERIC_FIELDS:
            continue
        if "=" in key:
            field, _, level = key.partition("=")
            if field in schema.CATEGORICAL_LEVELS and level in schema.levels(field):
                continue
        raise ConfigError(
            f"unknown signal variable '{key}'; expected a numeric field name "
            "or '<categorical>=<level>'"
        )


def signal_variables(signal: dict[str, float]) -> tuple[str, ...]:
    """Clinical variable names the signal map touches."""
    out = dict.fromkeys(k.partition("=")[0] for k in signal)
    return tuple(out)


def synthesize(
    n_patients: int,
    seed: int,
    signal: dict[str, float] | None = None,
    base_rate: float = schema.MALIGNANT_RATE,
    intercept: float | None = None,
) -> Dataset:
    """Generate a complete, preprocessed-shape synthetic Dataset.

    With ``intercept`` unset it is calibrated by bisection so the mean
    malignancy probability over the drawn records equals ``base_rate``; an
    all-zero signal then implies a flat per-record rate of ``base_rate``.
    """
    if n_patients < 10:
        raise DataError("n_patients must be at least 10")
    if signal is None:
        signal = dict(DEFAULT_SIGNAL)
    validate_signal(signal)
    rng = substream(seed, "synth")

    counts = rng.choice([1, 2, 3], size=n_patients, p=_NODULE_COUNT_P)
    singles = rng.choice(3, size=n_patients, p=_SINGLE_LOCATION_P)
    location_levels = schema.levels("location")

    rows: list[dict] = []
    width = len(str(n_patients))
    for p in range(n_patients):
        pid = f"P{p + 1:0{width}d}"
        c = int(counts[p])
        if c == 1:
            locs = [location_levels[singles[p]]]
        elif c == 2:
            locs = [location_levels[0], location_levels[1]]
        else:
            locs = list(location_levels)
        laterality = "unilateral" if c == 1 else "multilateral"
        for loc in locs:
            rows.append({"patient_id": pid, "location": loc, "laterality": laterality})

    n = len(rows)
    # Patient-level attributes: demographics, blood tests, gland echogenicity.
    patient_fields: dict[str, np.ndarray] = {}
    for field in ("age", "ft3", "ft4", "tsh", "tpo", "tgab"):
        patient_fields[field] = _draw_numeric(field, rng, n_patients)
    sex_levels = schema.levels("sex")
    sex_p = [schema.MARGINAL_FREQUENCIES["sex"][l] for l in sex_levels]
    patient_sex = rng.choice(len(sex_levels), size=n_patients, p=np.array(sex_p) / sum(sex_p))
    te_levels = schema.levels("thyroid_echogenicity")
    te_p = [schema.MARGINAL_FREQUENCIES["thyroid_echogenicity"][l] for l in te_levels]
    patient_te = rng.choice(len(te_levels), size=n_patients, p=np.array(te_p) / sum(te_p))

    patient_index = {f"P{p + 1:0{width}d}": p for p in range(n_patients)}
    for row in rows:
        p = patient_index[row["patient_id"]]
        for field in ("age", "ft3", "ft4", "tsh", "tpo", "tgab"):
            row[field] = float(patient_fields[field][p])
        row["sex"] = sex_levels[patient_sex[p]]
        row["thyroid_echogenicity"] = te_levels[patient_te[p]]

    # Nodule-level attributes.
    row_size = _draw_numeric("size", rng, n)
    for i, row in enumerate(rows):
        row["size"] = float(row_size[i])
    for field in ("multifocality", "shape", "margin", "calcification",
                  "nodule_echogenicity", "blood_flow", "composition"):
        levels = schema.levels(field)
        p_levels = np.array([schema.MARGINAL_FREQUENCIES[field][l] for l in levels])
        draws = rng.choice(len(levels), size=n, p=p_levels / p_levels.sum())
        for i, row in enumerate(rows):
            row[field] = levels[draws[i]]

    # Linear predictor of the planted signal, then label draws.
    eta = np.zeros(n)
    for key, weight in signal.items():
        if key in schema.NUMERIC_FIELDS:
            center, spread = _numeric_standardizer(key)
            eta += weight * (np.array([r[key] for r in rows]) - center) / spread
        else:
            field, _, level = key.partition("=")
            eta += weight * np.array([1.0 if r[field] == level else 0.0 for r in rows])
    if intercept is None:
        intercept = _calibrate_intercept(eta, base_rate)
    prob = 1.0 / (1.0 + np.exp(-(eta + intercept)))
    labels = rng.random(n) < prob

    records = []
    for i, row in enumerate(rows):
        row["malignancy"] = "malignant" if labels[i] else "benign"
        records.append(NoduleRecord(**row))
    return Dataset(records=tuple(records), provenance="synthetic")


def _calibrate_intercept(eta: np.ndarray, base_rate: float) -> float:
    if not 0.0 < base_rate < 1.0:
        raise ConfigError(f"base_rate must be in (0, 1), got {base_rate}")
    lo, hi = -30.0, 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.mean(1.0 / (1.0 + np.exp(-(eta + mid)))) < base_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
