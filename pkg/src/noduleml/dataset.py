"""Dataset ingestion and preprocessing.

CSV rows become NoduleRecord objects via a ColumnMapping that names the source
column for every schema field and a value dictionary translating raw cell text
to canonical enum levels. Cells that cannot be parsed at all raise a RowError;
cells that parse but violate a range constraint are treated like missing values
and rejected during preprocess, never silently coerced.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from . import schema
from .errors import ConfigError, DataError, RowError, SchemaError

MISSING_DEFAULT = ("", "NA", "N/A")

# Header spellings tried by the default mapping, matched case-insensitively
# after stripping spaces/underscores. The source CSV headers are not fixed
# anywhere, so this list is a guess; a mapping file overrides it.
_HEADER_ALIASES: dict[str, tuple[str, ...]] = {
    "patient_id": ("patientid", "patient", "id", "pid", "patientno", "patientnumber"),
    "age": ("age", "ageyears"),
    "sex": ("sex", "gender"),
    "ft3": ("ft3", "freet3", "ft3pmoll"),
    "ft4": ("ft4", "freet4", "ft4pmoll"),
    "tsh": ("tsh",),
    "tpo": ("tpo", "tpoab", "antitpo"),
    "tgab": ("tgab", "tg", "antitg", "tgantibody"),
    "thyroid_echogenicity": ("thyroidechogenicity", "thyroidecho", "glandechogenicity"),
    "size": ("size", "sizecm", "nodulesize", "diameter"),
    "location": ("location", "site", "position"),
    "multifocality": ("multifocality", "multifocal", "focality"),
    "shape": ("shape",),
    "margin": ("margin", "border"),
    "calcification": ("calcification", "calcifications", "calc"),
    "nodule_echogenicity": ("noduleechogenicity", "noduleecho", "echogenicity", "echopattern"),
    "blood_flow": ("bloodflow", "vascularity", "flow"),
    "composition": ("composition", "structure", "content"),
    "laterality": ("laterality", "lateral"),
    "malignancy": ("malignancy", "malignant", "pathology", "diagnosis", "label"),
}

# Raw spellings accepted for each enum level by the default mapping.
_LEVEL_ALIASES: dict[str, tuple[str, ...]] = {
    "male": ("male", "m"),
    "female": ("female", "f"),
    "even": ("even", "homogeneous"),
    "uneven": ("uneven", "heterogeneous"),
    "right": ("right", "rightlobe", "r"),
    "left": ("left", "leftlobe", "l"),
    "isthmus": ("isthmus", "i"),
    "unifocal": ("unifocal", "single", "uni"),
    "multifocal": ("multifocal", "multiple", "multi"),
    "regular": ("regular",),
    "irregular": ("irregular",),
    "clear": ("clear", "welldefined"),
    "unclear": ("unclear", "illdefined", "notclear"),
    "absent": ("absent", "no", "none", "without"),
    "present": ("present", "yes", "with"),
    "none": ("none", "noecho", "anechoic"),
    "isoechoic": ("isoechoic", "iso"),
    "medium": ("medium", "mediumechogenic", "medium-echogenic"),
    "hyper": ("hyper", "hyperechogenic", "hyperechoic"),
    "hypo": ("hypo", "hypoechogenic", "hypoechoic"),
    "normal": ("normal",),
    "enriched": ("enriched", "rich", "increased"),
    "cystic": ("cystic",),
    "mixed": ("mixed",),
    "solid": ("solid",),
    "unilateral": ("unilateral",),
    "multilateral": ("multilateral", "bilateral"),
    "benign": ("benign", "0"),
    "malignant": ("malignant", "1"),
}

_RANGES = {"age": (0.0, 130.0), "size": (0.0, float("inf"))}


@dataclass(frozen=True)
class NoduleRecord:
    """One nodule: patient identifier, 18 predictors, malignancy label.

    Numeric fields are floats, categorical fields canonical level strings.
    None marks a missing (or constraint-violating) value; preprocess removes
    such records.
    """

    patient_id: str
    age: float | None = None
    sex: str | None = None
    ft3: float | None = None
    ft4: float | None = None
    tsh: float | None = None
    tpo: float | None = None
    tgab: float | None = None
    thyroid_echogenicity: str | None = None
    size: float | None = None
    location: str | None = None
    multifocality: str | None = None
    shape: str | None = None
    margin: str | None = None
    calcification: str | None = None
    nodule_echogenicity: str | None = None
    blood_flow: str | None = None
    composition: str | None = None
    laterality: str | None = None
    malignancy: str | None = None

    def missing_fields(self) -> tuple[str, ...]:
        return tuple(f for f in schema.ALL_FIELDS if getattr(self, f) is None)

    def is_complete(self) -> bool:
        return not self.missing_fields()


@dataclass(frozen=True)
class Dataset:
    records: tuple[NoduleRecord, ...]
    provenance: str = "real"  # "real" or "synthetic"

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> np.ndarray:
        return np.array([1 if r.malignancy == "malignant" else 0 for r in self.records])

    def patient_ids(self) -> tuple[str, ...]:
        seen = dict.fromkeys(r.patient_id for r in self.records)
        return tuple(seen)


@dataclass
class ColumnMapping:
    """Field -> CSV column names plus raw-spelling dictionaries per enum level.

    ``columns[field]`` is the exact source header. ``values[field][spelling]``
    maps a normalized raw cell to a canonical level. ``missing`` lists cell
    spellings treated as absent values.
    """

    columns: dict[str, str]
    values: dict[str, dict[str, str]] = dc_field(default_factory=dict)
    missing: tuple[str, ...] = MISSING_DEFAULT

    def __post_init__(self):
        mapped = set(self.columns)
        wanted = {"patient_id", *schema.ALL_FIELDS}
        absent = sorted(wanted - mapped)
        if absent:
            raise ConfigError(f"mapping does not cover fields: {', '.join(absent)}")
        extra = sorted(mapped - wanted)
        if extra:
            raise ConfigError(f"mapping names unknown fields: {', '.join(extra)}")
        for field, table in self.values.items():
            domain = set(schema.levels(field))
            bad = sorted(set(table.values()) - domain)
            if bad:
                raise ConfigError(
                    f"mapping for '{field}' targets levels outside its domain: {bad}"
                )


def _normalize(cell: str) -> str:
    return cell.strip().lower().replace(" ", "").replace("_", "").replace("-", "")


def default_value_table(field: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for level in schema.levels(field):
        for alias in _LEVEL_ALIASES[level]:
            table[_normalize(alias)] = level
    return table


def default_mapping(headers: list[str] | None = None) -> ColumnMapping:
    """Mapping that guesses common header spellings.

    With ``headers`` given, each schema field is resolved against the actual
    CSV header row; unresolvable fields raise a SchemaError naming them.
    Without headers, the first alias of each field is assumed.
    """
    columns: dict[str, str] = {}
    if headers is None:
        for field, aliases in _HEADER_ALIASES.items():
            columns[field] = aliases[0]
    else:
        normalized = {_normalize(h): h for h in headers}
        unresolved = []
        for field, aliases in _HEADER_ALIASES.items():
            hit = next((a for a in aliases if a in normalized), None)
            if hit is None and _normalize(field) in normalized:
                hit = _normalize(field)
            if hit is None:
                unresolved.append(field)
            else:
                columns[field] = normalized[hit]
        if unresolved:
            raise SchemaError(
                "could not guess CSV columns for: "
                + ", ".join(unresolved)
                + "; provide a mapping file"
            )
    values = {f: default_value_table(f) for f in list(schema.CATEGORICAL_LEVELS) + [schema.LABEL_FIELD]}
    return ColumnMapping(columns=columns, values=values)


def read_mapping(path: str | Path) -> ColumnMapping:
    """Parse a mapping file.

    Grammar (one statement per line, '#' starts a comment):
        missing = <spelling>,<spelling>,...
        column.<field> = <csv header>
        value.<field>.<level> = <raw spelling>|<raw spelling>|...
    Omitted value tables fall back to the built-in spellings.
    """
    columns: dict[str, str] = {}
    values: dict[str, dict[str, str]] = {}
    missing = MISSING_DEFAULT
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "missing":
            missing = tuple(v.strip() for v in val.split(","))
        elif key.startswith("column."):
            columns[key[len("column."):]] = val
        elif key.startswith("value."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: expected value.<field>.<level>")
            _, field, level = parts
            if field not in schema.CATEGORICAL_LEVELS and field != schema.LABEL_FIELD:
                raise ConfigError(f"{path}:{lineno}: '{field}' is not a categorical field")
            if level not in schema.levels(field):
                raise ConfigError(f"{path}:{lineno}: '{level}' is not a level of '{field}'")
            table = values.setdefault(field, {})
            for spelling in val.split("|"):
                table[_normalize(spelling)] = level
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
    # unlisted columns/fields fall back to defaults
    base = default_mapping()
    merged_cols = dict(base.columns)
    merged_cols.update(columns)
    merged_vals = {f: dict(t) for f, t in base.values.items()}
    for field, table in values.items():
        merged_vals[field] = table
    return ColumnMapping(columns=merged_cols, values=merged_vals, missing=missing)


def _parse_numeric(cell: str, row_index: int, field: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        raise RowError(row_index, field, f"cannot parse {cell!r} as a number") from None
    if not np.isfinite(value):
        raise RowError(row_index, field, f"non-finite value {cell!r}")
    lo, hi = _RANGES.get(field, (-float("inf"), float("inf")))
    if field == "size" and value <= 0:
        return None  # constraint violation -> preprocess-time rejection
    if not (lo <= value <= hi):
        return None
    if field in ("ft3", "ft4", "tsh", "tpo", "tgab") and value < 0:
        return None
    return value


def load_csv(path: str | Path, mapping: ColumnMapping | None = None) -> Dataset:
    """Read a CSV file into a raw Dataset (one record per data row).

    Missing mapped columns raise a SchemaError naming them; unparseable cells
    raise a RowError carrying the row index and field.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            headers = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, header row required") from None
        if mapping is None:
            mapping = default_mapping(headers)
        col_index: dict[str, int] = {}
        missing_cols = []
        for field, column in mapping.columns.items():
            try:
                col_index[field] = headers.index(column)
            except ValueError:
                missing_cols.append(f"{field} (column '{column}')")
        if missing_cols:
            raise SchemaError(f"{path}: missing mapped columns: {'; '.join(missing_cols)}")

        width = max(col_index.values()) + 1
        records = []
        for row_index, row in enumerate(reader):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) < width:
                row = row + [""] * (width - len(row))
            fields: dict[str, object] = {}
            pid = row[col_index["patient_id"]].strip()
            if pid in mapping.missing:
                raise RowError(row_index, "patient_id", "missing patient identifier")
            fields["patient_id"] = pid
            for field in schema.ALL_FIELDS:
                cell = row[col_index[field]]
                if cell.strip() in mapping.missing:
                    fields[field] = None
                elif schema.is_numeric(field):
                    fields[field] = _parse_numeric(cell.strip(), row_index, field)
                else:
                    table = mapping.values.get(field) or default_value_table(field)
                    level = table.get(_normalize(cell))
                    if level is None:
                        raise RowError(
                            row_index, field,
                            f"unrecognized value {cell!r}; known spellings: "
                            + ", ".join(sorted(set(table))),
                        )
                    fields[field] = level
            records.append(NoduleRecord(**fields))  # type: ignore[arg-type]
    return Dataset(records=tuple(records), provenance="real")


def preprocess(raw: Dataset) -> Dataset:
    """Largest nodule per (patient, location), then drop incomplete records.

    The largest-nodule rule runs first so that a smaller but complete nodule
    never displaces a larger one merely because the larger had a gap; rows
    surviving the size rule are then removed if any field is missing. Output
    order is (patient_id, location) with locations in schema order.
    """
    best: dict[tuple[str, str | None], NoduleRecord] = {}
    keyless = []
    for rec in raw.records:
        key = (rec.patient_id, rec.location)
        if rec.location is None:
            keyless.append(rec)  # cannot deduplicate; dropped below if incomplete
            continue
        cur = best.get(key)
        if cur is None:
            best[key] = rec
        else:
            cur_size = cur.size if cur.size is not None else -np.inf
            new_size = rec.size if rec.size is not None else -np.inf
            if new_size > cur_size:
                best[key] = rec
    survivors = [r for r in list(best.values()) + keyless if r.is_complete()]
    loc_order = {lvl: i for i, lvl in enumerate(schema.levels("location"))}
    survivors.sort(key=lambda r: (r.patient_id, loc_order[r.location]))
    if not survivors:
        raise DataError("preprocessing removed every record")
    return Dataset(records=tuple(survivors), provenance=raw.provenance)


def summarize(ds: Dataset) -> list[dict]:
    """Descriptive statistics rows in the reference report layout.

    Numeric fields report mean +/- sample SD (age, size; single records get
    SD 0) or median +/- IQR (lab tests); categoricals report per-level counts
    and percentages.
    """
    if len(ds) == 0:
        raise DataError("cannot summarize an empty dataset")
    rows: list[dict] = []
    n = len(ds)

    def numeric_values(field):
        return np.array([getattr(r, field) for r in ds.records], dtype=float)

    for field in schema.ALL_FIELDS:
        if field in schema.MEAN_SD_FIELDS:
            v = numeric_values(field)
            sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
            rows.append({"field": field, "statistic": "mean_sd",
                         "value": float(np.mean(v)), "spread": sd})
            rows.append({"field": field, "statistic": "range",
                         "value": float(np.min(v)), "spread": float(np.max(v))})
        elif field in schema.MEDIAN_IQR_FIELDS:
            v = numeric_values(field)
            q25, q50, q75 = np.percentile(v, [25, 50, 75])
            rows.append({"field": field, "statistic": "median_iqr",
                         "value": float(q50), "spread": float(q75 - q25)})
        else:
            counts: dict[str, int] = {lvl: 0 for lvl in schema.levels(field)}
            for r in ds.records:
                counts[getattr(r, field)] += 1
            for lvl, count in counts.items():
                rows.append({"field": field, "statistic": "count", "level": lvl,
                             "value": count, "percent": 100.0 * count / n})
    rows.append({"field": "total", "statistic": "count", "value": n})
    return rows


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset in the canonical column layout load_csv reads back."""
    path = Path(path)
    header = ["patient_id", *schema.ALL_FIELDS]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in ds.records:
            row = [rec.patient_id]
            for field in schema.ALL_FIELDS:
                value = getattr(rec, field)
                if value is None:
                    row.append("")
                elif isinstance(value, float):
                    row.append(repr(value))
                else:
                    row.append(value)
            writer.writerow(row)


def canonical_mapping() -> ColumnMapping:
    """Mapping for CSVs produced by write_csv (fields as headers)."""
    columns = {"patient_id": "patient_id"}
    columns.update({f: f for f in schema.ALL_FIELDS})
    values = {f: default_value_table(f) for f in list(schema.CATEGORICAL_LEVELS) + [schema.LABEL_FIELD]}
    return ColumnMapping(columns=columns, values=values)
