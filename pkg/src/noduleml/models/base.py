"""One train/score interface over the six classifier kinds.

Every trained model exposes a monotone malignancy score: probabilities in
[0, 1] for gbm/logistic/lda/random_forest, signed margins for the SVMs.
Training on single-class rows yields a flagged degenerate model that scores
the constant class. Fitted models serialize to a versioned JSON form.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from ..encoding import EncodedMatrix
from ..errors import ConfigError, DataError, SchemaError
from ..rng import substream_seed
from .forest import Forest, fit_forest
from .gbm import Boosted, fit_gbm
from .linear import LdaModel, LogisticModel, fit_lda, fit_logistic
from .svm import SvmModel, fit_svm

FORMAT_VERSION = 1

MODEL_KINDS = ("gbm", "logistic", "lda", "svm_radial", "svm_linear", "random_forest")

# Kinds that consume the standardized feature view; tree ensembles take the
# raw encoding (their splits are scale-invariant anyway).
_STANDARDIZED_KINDS = frozenset({"logistic", "lda", "svm_radial", "svm_linear"})
_MARGIN_KINDS = frozenset({"svm_radial", "svm_linear"})

_DEFAULTS: dict[str, dict[str, Any]] = {
    "gbm": {"n_trees": 100, "depth": 3, "shrinkage": 0.1, "min_leaf": 10},
    "logistic": {"ridge": 1e-8, "tol": 1e-8, "max_iter": 50},
    "lda": {"ridge_scale": 1e-6},
    "svm_radial": {"cost": 1.0, "gamma": None, "tol": 1e-3, "max_iter": 500_000},
    "svm_linear": {"cost": 1.0, "tol": 1e-3, "max_iter": 500_000},
    "random_forest": {"n_trees": 500, "mtry": None, "depth": None,
                      "min_leaf": 1, "bootstrap": True},
}


def _validate_hyper(kind: str, hp: dict[str, Any]) -> None:
    if kind in ("gbm", "random_forest") and hp.get("n_trees", 1) < 1:
        raise ConfigError(f"{kind}: n_trees must be >= 1")
    if kind == "gbm" and not 0.0 < hp.get("shrinkage", 0.1) <= 1.0:
        raise ConfigError("gbm: shrinkage must be in (0, 1]")
    if kind in _MARGIN_KINDS and hp.get("cost", 1.0) <= 0:
        raise ConfigError(f"{kind}: cost must be > 0")
    if kind == "svm_radial" and hp.get("gamma") is not None and hp["gamma"] <= 0:
        raise ConfigError("svm_radial: gamma must be > 0")
    if kind == "random_forest" and hp.get("min_leaf", 1) < 1:
        raise ConfigError("random_forest: min_leaf must be >= 1")
    if kind == "logistic" and hp.get("max_iter", 50) < 1:
        raise ConfigError("logistic: max_iter must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparameters: dict[str, Any] = dc_field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind '{self.kind}'; valid: {MODEL_KINDS}")
        unknown = set(self.hyperparameters) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        _validate_hyper(self.kind, self.resolved())

    def resolved(self) -> dict[str, Any]:
        merged = dict(_DEFAULTS[self.kind])
        merged.update(self.hyperparameters)
        return merged


@dataclass(frozen=True)
class ConstantModel:
    value: float

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        return np.full(np.asarray(rows).size, self.value)

    def to_jsonable(self) -> dict:
        return {"value": self.value}

    @classmethod
    def from_jsonable(cls, blob: dict) -> "ConstantModel":
        return cls(value=float(blob["value"]))


_IMPL_CLASSES = {
    "constant": ConstantModel,
    "logistic": LogisticModel,
    "lda": LdaModel,
    "svm": SvmModel,
    "forest": Forest,
    "gbm": Boosted,
}


@dataclass(frozen=True)
class TrainedModel:
    kind: str
    impl: Any
    impl_type: str
    n_features: int
    degenerate: bool = False
    diagnostics: dict[str, Any] = dc_field(default_factory=dict)

    @property
    def threshold(self) -> float:
        """Default classification threshold: 0 for margins, 0.5 otherwise."""
        return 0.0 if self.kind in _MARGIN_KINDS else 0.5

    @property
    def uses_standardized(self) -> bool:
        return self.kind in _STANDARDIZED_KINDS

    def to_json_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "impl_type": self.impl_type,
            "n_features": self.n_features,
            "degenerate": self.degenerate,
            "diagnostics": self.diagnostics,
            "impl": self.impl.to_jsonable(),
        }

    @classmethod
    def from_json_dict(cls, blob: dict) -> "TrainedModel":
        version = blob.get("format_version")
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported model format version {version!r}")
        impl_cls = _IMPL_CLASSES[blob["impl_type"]]
        return cls(
            kind=blob["kind"],
            impl=impl_cls.from_jsonable(blob["impl"]),
            impl_type=blob["impl_type"],
            n_features=int(blob["n_features"]),
            degenerate=bool(blob["degenerate"]),
            diagnostics=dict(blob["diagnostics"]),
        )


def _feature_view(kind: str, m: EncodedMatrix) -> np.ndarray:
    return m.standardized_values() if kind in _STANDARDIZED_KINDS else m.raw_values()


def train(spec: ModelSpec, m: EncodedMatrix, rows) -> TrainedModel:
    """Fit one model on the given rows; deterministic given (spec, m, rows)."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise DataError("cannot train on an empty row set")
    X = _feature_view(spec.kind, m)
    if not np.isfinite(X[rows]).all():
        raise DataError("training rows contain non-finite feature values")
    y = m.labels
    hp = spec.resolved()

    classes = np.unique(y[rows])
    if classes.size == 1:
        only = int(classes[0])
        if spec.kind in _MARGIN_KINDS:
            value = 1.0 if only == 1 else -1.0
        else:
            value = float(only)
        return TrainedModel(kind=spec.kind, impl=ConstantModel(value),
                            impl_type="constant", n_features=m.n_cols,
                            degenerate=True,
                            diagnostics={"reason": "single-class training rows"})

    if spec.kind == "logistic":
        impl = fit_logistic(X, y, rows, ridge=hp["ridge"], tol=hp["tol"],
                            max_iter=hp["max_iter"])
        diag = {"iterations": impl.iterations, "converged": impl.converged,
                "separation": impl.separation, "gradient_norm": impl.gradient_norm}
        impl_type = "logistic"
    elif spec.kind == "lda":
        impl = fit_lda(X, y, rows, ridge_scale=hp["ridge_scale"])
        diag = {}
        impl_type = "lda"
    elif spec.kind in _MARGIN_KINDS:
        kernel = "rbf" if spec.kind == "svm_radial" else "linear"
        impl = fit_svm(X, y, rows, kernel=kernel, cost=hp["cost"],
                       gamma=hp.get("gamma"), tol=hp["tol"], max_iter=hp["max_iter"])
        diag = {"iterations": impl.iterations, "converged": impl.converged,
                "dual_objective": impl.dual_objective,
                "kkt_violation": impl.kkt_violation,
                "n_support": int(impl.sv_coef.size)}
        impl_type = "svm"
    elif spec.kind == "random_forest":
        impl = fit_forest(X, y, rows, n_trees=hp["n_trees"], mtry=hp["mtry"],
                          seed=substream_seed(spec.seed, "forest"),
                          depth=hp["depth"], min_leaf=hp["min_leaf"],
                          bootstrap=hp["bootstrap"])
        diag = {"n_trees": len(impl.trees)}
        impl_type = "forest"
    elif spec.kind == "gbm":
        impl = fit_gbm(X, y, rows, n_trees=hp["n_trees"], depth=hp["depth"],
                       shrinkage=hp["shrinkage"], min_leaf=hp["min_leaf"])
        diag = {"rounds": len(impl.trees), "final_loss": impl.train_loss[-1] if impl.train_loss else None}
        impl_type = "gbm"
    else:  # pragma: no cover - guarded by ModelSpec
        raise ConfigError(f"unknown model kind '{spec.kind}'")

    return TrainedModel(kind=spec.kind, impl=impl, impl_type=impl_type,
                        n_features=m.n_cols, diagnostics=diag)


def score(model: TrainedModel, m: EncodedMatrix, rows) -> np.ndarray:
    """Malignancy scores for the given rows, one finite value per row."""
    if m.n_cols != model.n_features:
        raise SchemaError(
            f"matrix has {m.n_cols} columns but the model was trained on "
            f"{model.n_features}"
        )
    rows = np.asarray(rows, dtype=np.int64)
    X = _feature_view(model.kind, m)
    out = model.impl.predict_rows(X, rows)
    if not np.isfinite(out).all():
        raise DataError("scoring produced non-finite values")
    return out


def classify(scores, threshold: float) -> np.ndarray:
    """Label 1 iff score >= threshold."""
    if not np.isfinite(threshold):
        raise ConfigError("classification threshold must be finite")
    return (np.asarray(scores, dtype=float) >= threshold).astype(int)
