"""Random forest: bootstrapped CART trees with per-split feature sampling.

Each tree draws its bootstrap rows and feature-subset stream from a seed
keyed by (run seed, tree index), so adding trees never reshuffles earlier
ones and any subset of trees can be rebuilt independently. The score is the
mean of per-tree leaf malignant fractions; with fully grown trees leaves are
pure and this coincides with the fraction of trees voting malignant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import substream, substream_seed
from .tree import Tree, fit_tree


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        acc = np.zeros(rows.size)
        for tree in self.trees:
            acc += tree.predict_rows(X, rows)
        return acc / len(self.trees)

    def to_jsonable(self) -> dict:
        return {"trees": [t.to_jsonable() for t in self.trees]}

    @classmethod
    def from_jsonable(cls, blob: dict) -> "Forest":
        return cls(trees=tuple(Tree.from_jsonable(t) for t in blob["trees"]))


def default_mtry(n_features: int) -> int:
    return int(math.ceil(math.sqrt(n_features)))


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    rows,
    n_trees: int = 500,
    mtry: int | None = None,
    seed: int = 0,
    depth: int | None = None,
    min_leaf: int = 1,
    bootstrap: bool = True,
) -> Forest:
    rows = np.asarray(rows, dtype=np.int64)
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if mtry is None:
        mtry = default_mtry(X.shape[1])
    trees = []
    for t in range(n_trees):
        if bootstrap:
            draw = substream(seed, "forest-rows", t).integers(0, rows.size, rows.size)
            tree_rows = rows[draw]
        else:
            tree_rows = rows
        trees.append(fit_tree(
            X, y, tree_rows,
            depth=depth, min_leaf=min_leaf, mtry=mtry,
            mtry_seed=substream_seed(seed, "forest-mtry", t),
        ))
    return Forest(trees=tuple(trees))
