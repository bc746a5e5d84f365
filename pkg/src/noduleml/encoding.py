"""Numeric design matrix with a variable -> column-group map.

Numeric fields are copied (z-scored against the sample SD when the matrix is
built with standardize=True); each categorical with L levels becomes L-1
indicator columns against its first level. Tree models are split-invariant to
the affine rescaling, so both views describe the same information; linear
models and SVMs should consume the standardized view.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import schema
from .dataset import Dataset
from .errors import DataError


@dataclass(frozen=True)
class EncodedMatrix:
    values: np.ndarray  # raw if standardized is False, z-scored otherwise
    labels: np.ndarray  # 1 = malignant
    groups: tuple[str, ...]  # patient_id per row
    var_columns: dict[str, tuple[int, ...]]
    column_names: tuple[str, ...]
    column_mean: np.ndarray  # identity (0, 1) for indicator columns
    column_sd: np.ndarray
    standardized: bool
    raw: np.ndarray = dc_field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def standardized_values(self) -> np.ndarray:
        if self.standardized:
            return self.values
        return (self.raw - self.column_mean) / self.column_sd

    def raw_values(self) -> np.ndarray:
        return self.raw


def encode(ds: Dataset, standardize: bool = False) -> EncodedMatrix:
    """Build the design matrix for a preprocessed Dataset."""
    if len(ds) == 0:
        raise DataError("cannot encode an empty dataset")
    incomplete = [i for i, r in enumerate(ds.records) if not r.is_complete()]
    if incomplete:
        raise DataError(f"dataset has incomplete records at rows {incomplete[:5]}; preprocess first")

    columns: list[np.ndarray] = []
    names: list[str] = []
    var_columns: dict[str, tuple[int, ...]] = {}
    for field in schema.PREDICTOR_FIELDS:
        start = len(columns)
        if schema.is_numeric(field):
            columns.append(np.array([getattr(r, field) for r in ds.records], dtype=float))
            names.append(field)
        else:
            levels = schema.levels(field)
            values = [getattr(r, field) for r in ds.records]
            for level in levels[1:]:  # first level is the reference
                columns.append(np.array([1.0 if v == level else 0.0 for v in values]))
                names.append(f"{field}={level}")
        var_columns[field] = tuple(range(start, len(columns)))

    raw = np.column_stack(columns)
    mean = np.zeros(raw.shape[1])
    sd = np.ones(raw.shape[1])
    for field in schema.NUMERIC_FIELDS:
        (j,) = var_columns[field]
        mean[j] = raw[:, j].mean()
        col_sd = raw[:, j].std(ddof=1) if raw.shape[0] > 1 else 0.0
        if col_sd == 0.0:
            warnings.warn(f"constant column '{field}': SD clamped to 1", stacklevel=2)
            col_sd = 1.0
        sd[j] = col_sd

    values = (raw - mean) / sd if standardize else raw
    return EncodedMatrix(
        values=values,
        labels=ds.labels(),
        groups=tuple(r.patient_id for r in ds.records),
        var_columns=var_columns,
        column_names=tuple(names),
        column_mean=mean,
        column_sd=sd,
        standardized=standardize,
        raw=raw,
    )


def decode_row(m: EncodedMatrix, row: int) -> dict[str, object]:
    """Read one encoded row back into field values via var_columns."""
    out: dict[str, object] = {}
    for field, cols in m.var_columns.items():
        if schema.is_numeric(field):
            out[field] = float(m.raw[row, cols[0]])
        else:
            levels = schema.levels(field)
            level = levels[0]
            for j, candidate in zip(cols, levels[1:]):
                if m.raw[row, j] == 1.0:
                    level = candidate
                    break
            out[field] = level
    return out
