from .base import (
    MODEL_KINDS,
    ModelSpec,
    TrainedModel,
    classify,
    score,
    train,
)
from .forest import Forest, fit_forest
from .gbm import Boosted, fit_gbm
from .linear import LdaModel, LogisticModel, fit_lda, fit_logistic
from .svm import SvmModel, fit_svm, smo_solve
from .tree import Tree, fit_tree

__all__ = [
    "MODEL_KINDS",
    "ModelSpec",
    "TrainedModel",
    "classify",
    "score",
    "train",
    "Forest",
    "fit_forest",
    "Boosted",
    "fit_gbm",
    "LdaModel",
    "LogisticModel",
    "fit_lda",
    "fit_logistic",
    "SvmModel",
    "fit_svm",
    "smo_solve",
    "Tree",
    "fit_tree",
]
