"""Gradient boosting on logistic loss.

Boosting starts from the log-odds of the training base rate; each round fits
a shallow regression tree to the residuals y - p and applies a Newton leaf
update sum(y - p) / sum(p (1 - p)), scaled by the shrinkage factor. Scores
are the sigmoid of the additive model. The procedure is deterministic: no row
or feature subsampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import Tree, fit_tree

_LEAF_CLAMP = 20.0  # log-odds step bound; pure leaves would otherwise blow up


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


@dataclass(frozen=True)
class Boosted:
    base_score: float  # initial log-odds
    shrinkage: float
    trees: tuple[Tree, ...]
    train_loss: tuple[float, ...]  # mean log-loss after each round

    def raw_rows(self, X: np.ndarray, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        f = np.full(rows.size, self.base_score)
        for tree in self.trees:
            f += self.shrinkage * tree.predict_rows(X, rows)
        return f

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        return _sigmoid(self.raw_rows(X, rows))

    def to_jsonable(self) -> dict:
        return {
            "base_score": self.base_score,
            "shrinkage": self.shrinkage,
            "trees": [t.to_jsonable() for t in self.trees],
            "train_loss": list(self.train_loss),
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "Boosted":
        return cls(
            base_score=float(blob["base_score"]),
            shrinkage=float(blob["shrinkage"]),
            trees=tuple(Tree.from_jsonable(t) for t in blob["trees"]),
            train_loss=tuple(float(v) for v in blob["train_loss"]),
        )


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def fit_gbm(
    X: np.ndarray,
    y: np.ndarray,
    rows,
    n_trees: int = 100,
    depth: int = 3,
    shrinkage: float = 0.1,
    min_leaf: int = 10,
) -> Boosted:
    rows = np.asarray(rows, dtype=np.int64)
    yr = np.asarray(y, dtype=float)

    base_rate = float(np.clip(yr[rows].mean(), 1e-10, 1.0 - 1e-10))
    base_score = float(np.log(base_rate / (1.0 - base_rate)))
    f = np.full(rows.size, base_score)

    residual = np.zeros(X.shape[0])
    hessian = np.zeros(X.shape[0])
    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(n_trees):
        p = _sigmoid(f)
        residual[rows] = yr[rows] - p
        hessian[rows] = p * (1.0 - p)
        tree = fit_tree(X, residual, rows, depth=depth, min_leaf=min_leaf,
                        regression=True, leaf_den=hessian)
        tree = Tree(tree.feature, tree.threshold, tree.left, tree.right,
                    np.clip(tree.value, -_LEAF_CLAMP, _LEAF_CLAMP))
        trees.append(tree)
        f = f + shrinkage * tree.predict_rows(X, rows)
        losses.append(_log_loss(yr[rows], _sigmoid(f)))
    return Boosted(base_score=base_score, shrinkage=shrinkage,
                   trees=tuple(trees), train_loss=tuple(losses))
