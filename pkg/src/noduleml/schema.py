"""Clinical variable schema: 18 predictors plus the malignancy label.

Level order is the canonical presentation order of the source dataset; the
first level of each categorical is the reference level dropped during
indicator encoding. The marginal frequencies and numeric distribution targets
below drive the synthetic data generator and the summary report layout.
"""

from __future__ import annotations

from dataclasses import dataclass

NUMERIC_FIELDS = ("age", "ft3", "ft4", "tsh", "tpo", "tgab", "size")

CATEGORICAL_LEVELS: dict[str, tuple[str, ...]] = {
    "sex": ("male", "female"),
    "thyroid_echogenicity": ("even", "uneven"),
    "location": ("right", "left", "isthmus"),
    "multifocality": ("unifocal", "multifocal"),
    "shape": ("regular", "irregular"),
    "margin": ("clear", "unclear"),
    "calcification": ("absent", "present"),
    "nodule_echogenicity": ("none", "isoechoic", "medium", "hyper", "hypo"),
    "blood_flow": ("normal", "enriched"),
    "composition": ("cystic", "mixed", "solid"),
    "laterality": ("unilateral", "multilateral"),
}

LABEL_FIELD = "malignancy"
LABEL_LEVELS = ("benign", "malignant")

# Presentation order of the 18 predictors (and the summary report).
PREDICTOR_FIELDS = (
    "age",
    "sex",
    "ft3",
    "ft4",
    "tsh",
    "tpo",
    "tgab",
    "thyroid_echogenicity",
    "size",
    "location",
    "multifocality",
    "shape",
    "margin",
    "calcification",
    "nodule_echogenicity",
    "blood_flow",
    "composition",
    "laterality",
)

ALL_FIELDS = PREDICTOR_FIELDS + (LABEL_FIELD,)

# Empirical level frequencies of the reference clinical dataset; the
# synthesizer draws categoricals from these marginals.
MARGINAL_FREQUENCIES: dict[str, dict[str, float]] = {
    "sex": {"male": 0.1623, "female": 0.8377},
    "thyroid_echogenicity": {"even": 0.8912, "uneven": 0.1088},
    "location": {"right": 0.4740, "left": 0.4448, "isthmus": 0.0822},
    "multifocality": {"unifocal": 0.5390, "multifocal": 0.4610},
    "shape": {"regular": 0.7930, "irregular": 0.2070},
    "margin": {"clear": 0.3295, "unclear": 0.6705},
    "calcification": {"absent": 0.6006, "present": 0.3994},
    "nodule_echogenicity": {
        "none": 0.0130,
        "isoechoic": 0.0121,
        "medium": 0.1169,
        "hyper": 0.0057,
        "hypo": 0.8523,
    },
    "blood_flow": {"normal": 0.6380, "enriched": 0.3620},
    "composition": {"cystic": 0.0244, "mixed": 0.0787, "solid": 0.8969},
    "laterality": {"unilateral": 0.2321, "multilateral": 0.7679},
}

# Target marginal rate of the malignant label.
MALIGNANT_RATE = 0.6648


@dataclass(frozen=True)
class NumericTarget:
    """Location/scale target for one numeric field."""

    kind: str  # "normal_trunc" or "lognormal_mean_sd" or "lognormal_median_iqr"
    loc: float
    scale: float
    lower: float | None = None
    upper: float | None = None


# Marginal shape targets for the numeric synthesizer. Lab values are
# right-skewed, so they are drawn log-normally from median/IQR targets.
NUMERIC_TARGETS: dict[str, NumericTarget] = {
    "age": NumericTarget("normal_trunc", 46.61, 12.44, lower=13.0, upper=82.0),
    "size": NumericTarget("lognormal_mean_sd", 1.73, 1.31),
    "ft3": NumericTarget("lognormal_median_iqr", 4.35, 0.82),
    "ft4": NumericTarget("lognormal_median_iqr", 14.51, 2.56),
    "tsh": NumericTarget("lognormal_median_iqr", 1.46, 1.63),
    "tpo": NumericTarget("lognormal_median_iqr", 0.63, 5.37),
    "tgab": NumericTarget("lognormal_median_iqr", 2.69, 11.88),
}

# Numeric fields summarized as mean +/- SD; the five lab tests use
# median +/- IQR instead.
MEAN_SD_FIELDS = ("age", "size")
MEDIAN_IQR_FIELDS = ("ft3", "ft4", "tsh", "tpo", "tgab")


def is_numeric(field: str) -> bool:
    return field in NUMERIC_FIELDS


def is_categorical(field: str) -> bool:
    return field in CATEGORICAL_LEVELS


def levels(field: str) -> tuple[str, ...]:
    if field == LABEL_FIELD:
        return LABEL_LEVELS
    return CATEGORICAL_LEVELS[field]
