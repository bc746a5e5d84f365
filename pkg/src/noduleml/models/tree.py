"""CART trees: greedy binary splits, Gini or squared-error criterion.

The build and predict kernels are numba-compiled; trees are stored as flat
arrays (feature, threshold, left, right, leaf value). Split candidates are
midpoints between consecutive distinct sorted values, and ties in gain break
to the lowest feature index, then the lowest threshold, so rebuilds are
reproducible. Splitting decisions depend only on row partitions, never on raw
feature magnitudes, which makes tree structure invariant to strictly monotone
per-feature transformations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_UNLIMITED = 1 << 30


@njit(cache=True)
def _build(X, split_y, leaf_num, leaf_den, row_idx, max_depth, min_leaf, mtry, use_gini, rng_seed):
    n = row_idx.size
    p = X.shape[1]
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)

    idx = row_idx.copy()
    if mtry < p:
        np.random.seed(rng_seed)
    perm = np.arange(p)

    stk_node = np.empty(max_nodes, np.int64)
    stk_start = np.empty(max_nodes, np.int64)
    stk_end = np.empty(max_nodes, np.int64)
    stk_depth = np.empty(max_nodes, np.int64)
    stk_node[0] = 0
    stk_start[0] = 0
    stk_end[0] = n
    stk_depth[0] = 0
    top = 1
    n_nodes = 1

    buf_v = np.empty(n)
    buf_t = np.empty(n)
    tmp = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        node = stk_node[top]
        start = stk_start[top]
        end = stk_end[top]
        depth = stk_depth[top]
        m = end - start

        num = 0.0
        den = 0.0
        pos = 0.0
        total = 0.0
        s_min = np.inf
        s_max = -np.inf
        for i in range(start, end):
            r = idx[i]
            num += leaf_num[r]
            den += leaf_den[r]
            t = split_y[r]
            pos += t
            total += t
            if t < s_min:
                s_min = t
            if t > s_max:
                s_max = t
        value[node] = num / den if den > 1e-12 else 0.0

        if depth >= max_depth or m < 2 * min_leaf or s_min == s_max:
            continue

        if use_gini:
            neg = m - pos
            parent_score = (pos * pos + neg * neg) / m
        else:
            parent_score = (total * total) / m

        k = mtry if mtry < p else p
        if k < p:
            # partial Fisher-Yates, then sort the subset for stable ties
            for j in range(k):
                swap = j + np.random.randint(0, p - j)
                t_swap = perm[j]
                perm[j] = perm[swap]
                perm[swap] = t_swap
            chosen = np.sort(perm[:k].copy())
        else:
            chosen = perm[:p]

        best_score = parent_score
        best_f = -1
        best_thr = 0.0
        for fi in range(k):
            f = chosen[fi]
            for i in range(m):
                buf_v[i] = X[idx[start + i], f]
                buf_t[i] = split_y[idx[start + i]]
            order = np.argsort(buf_v[:m], kind="mergesort")

            run = 0.0
            cnt = 0
            for oi in range(m - 1):
                a = order[oi]
                run += buf_t[a]
                cnt += 1
                va = buf_v[a]
                vb = buf_v[order[oi + 1]]
                if va == vb:
                    continue
                n_l = cnt
                n_r = m - cnt
                if n_l < min_leaf or n_r < min_leaf:
                    continue
                if use_gini:
                    pos_l = run
                    neg_l = n_l - pos_l
                    pos_r = pos - pos_l
                    neg_r = n_r - pos_r
                    score = (pos_l * pos_l + neg_l * neg_l) / n_l \
                        + (pos_r * pos_r + neg_r * neg_r) / n_r
                else:
                    s_l = run
                    s_r = total - s_l
                    score = (s_l * s_l) / n_l + (s_r * s_r) / n_r
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (va + vb)
                    if not (va <= thr < vb):
                        thr = va
                    best_thr = thr

        if best_f < 0:
            continue

        # stable two-pass partition of the node's rows around the split
        w = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_thr:
                tmp[w] = idx[i]
                w += 1
        n_left = w
        for i in range(start, end):
            if X[idx[i], best_f] > best_thr:
                tmp[w] = idx[i]
                w += 1
        for i in range(m):
            idx[start + i] = tmp[i]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stk_node[top] = n_nodes
        stk_start[top] = start
        stk_end[top] = start + n_left
        stk_depth[top] = depth + 1
        stk_node[top + 1] = n_nodes + 1
        stk_start[top + 1] = start + n_left
        stk_end[top + 1] = end
        stk_depth[top + 1] = depth + 1
        top += 2
        n_nodes += 2

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


@njit(cache=True)
def _predict(feature, threshold, left, right, value, X, rows):
    out = np.empty(rows.size)
    for i in range(rows.size):
        r = rows[i]
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        return _predict(self.feature, self.threshold, self.left, self.right,
                        self.value, np.ascontiguousarray(X, dtype=np.float64),
                        np.ascontiguousarray(rows, dtype=np.int64))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_rows(X, np.arange(X.shape[0], dtype=np.int64))

    def to_jsonable(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "Tree":
        return cls(
            feature=np.array(blob["feature"], dtype=np.int64),
            threshold=np.array(blob["threshold"], dtype=float),
            left=np.array(blob["left"], dtype=np.int64),
            right=np.array(blob["right"], dtype=np.int64),
            value=np.array(blob["value"], dtype=float),
        )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    rows,
    depth: int | None = None,
    min_leaf: int = 1,
    mtry: int | None = None,
    mtry_seed: int = 0,
    regression: bool = False,
    leaf_den: np.ndarray | None = None,
) -> Tree:
    """Grow one CART tree on X[rows].

    Classification (default) splits on Gini impurity of binary ``y`` and
    leaves hold class-1 fractions. With ``regression=True`` splits minimize
    squared error of ``y`` and leaves hold ``sum(y)/sum(leaf_den)`` (pass
    ``leaf_den`` for Newton-style leaf values; defaults to plain means).
    ``rows`` may repeat indices, which acts as integer row weighting.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if leaf_den is None:
        leaf_den = np.ones_like(y)
    else:
        leaf_den = np.ascontiguousarray(leaf_den, dtype=np.float64)
    max_depth = _UNLIMITED if depth is None or depth < 0 else int(depth)
    p = X.shape[1]
    mtry_eff = p if mtry is None else max(1, min(int(mtry), p))
    parts = _build(X, y, y, leaf_den, rows, max_depth, int(min_leaf),
                   mtry_eff, not regression, int(mtry_seed) & 0xFFFFFFFF)
    return Tree(*(np.ascontiguousarray(a) for a in parts))
