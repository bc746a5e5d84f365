"""Soft-margin SVM solved by sequential minimal optimization.

Pairwise coordinate ascent on the dual with maximal-violating-pair working
set selection. The solver stops when the KKT violation m(a) - M(a) drops
below the tolerance; scores are raw decision values (margins), positive for
the malignant side, with classification threshold 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TAU = 1e-12  # curvature floor for degenerate pairs


def _kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel '{kernel}'")


@dataclass(frozen=True)
class SvmModel:
    kernel: str
    gamma: float
    sv_x: np.ndarray  # support vectors (rows with alpha > 0)
    sv_coef: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    dual_objective: float
    iterations: int
    converged: bool
    kkt_violation: float

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        if self.sv_x.shape[0] == 0:
            return np.full(rows.size, self.bias)
        K = _kernel_matrix(np.asarray(X, dtype=float)[rows], self.sv_x,
                           self.kernel, self.gamma)
        return K @ self.sv_coef + self.bias

    def to_jsonable(self) -> dict:
        return {
            "kernel": self.kernel,
            "gamma": self.gamma,
            "n_features": int(self.sv_x.shape[1]),
            "sv_x": self.sv_x.tolist(),
            "sv_coef": self.sv_coef.tolist(),
            "bias": self.bias,
            "dual_objective": self.dual_objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_violation": self.kkt_violation,
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "SvmModel":
        return cls(
            kernel=blob["kernel"],
            gamma=float(blob["gamma"]),
            sv_x=np.array(blob["sv_x"], dtype=float).reshape(-1, int(blob["n_features"])),
            sv_coef=np.array(blob["sv_coef"], dtype=float),
            bias=float(blob["bias"]),
            dual_objective=float(blob["dual_objective"]),
            iterations=int(blob["iterations"]),
            converged=bool(blob["converged"]),
            kkt_violation=float(blob["kkt_violation"]),
        )


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Solve the dual on a precomputed kernel matrix.

    Returns (alpha, bias, dual_objective, iterations, kkt_violation).
    Maximizes sum(a) - 0.5 a' Q a with Q = yy' * K, 0 <= a <= C, y'a = 0.
    """
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the minimization form 0.5 a'Qa - sum(a)
    pos = y > 0

    it = 0
    violation = np.inf
    while it < max_iter:
        crit = -y * grad
        up = (pos & (alpha < C)) | (~pos & (alpha > 0.0))
        low = (~pos & (alpha < C)) | (pos & (alpha > 0.0))
        if not up.any() or not low.any():
            violation = 0.0
            break
        crit_up = np.where(up, crit, -np.inf)
        crit_low = np.where(low, crit, np.inf)
        i = int(np.argmax(crit_up))
        j = int(np.argmin(crit_low))
        violation = crit_up[i] - crit_low[j]
        if violation <= tol:
            break

        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        d = violation / max(eta, _TAU)
        cap_i = C - alpha[i] if pos[i] else alpha[i]
        cap_j = alpha[j] if pos[j] else C - alpha[j]
        d = min(d, cap_i, cap_j)

        alpha[i] += d if pos[i] else -d
        alpha[j] += -d if pos[j] else d
        for t in (i, j):
            if alpha[t] < 1e-12:
                alpha[t] = 0.0
            elif alpha[t] > C - 1e-12 * C:
                alpha[t] = C
        grad += d * y * (K[:, i] - K[:, j])
        it += 1

    # bias from free vectors when available, else the midpoint of the bounds
    crit = -y * grad
    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        bias = float(np.mean(crit[free]))
    else:
        up = (pos & (alpha < C)) | (~pos & (alpha > 0.0))
        low = (~pos & (alpha < C)) | (pos & (alpha > 0.0))
        hi = np.max(crit[up]) if up.any() else 0.0
        lo = np.min(crit[low]) if low.any() else 0.0
        bias = float(0.5 * (hi + lo))

    # grad = Q a - 1, so a'Qa = a . (grad + 1)
    dual = float(np.sum(alpha) - 0.5 * np.dot(alpha, grad + 1.0))
    return alpha, bias, dual, it, float(max(violation, 0.0))


def fit_svm(
    X: np.ndarray,
    y: np.ndarray,
    rows,
    kernel: str = "rbf",
    cost: float = 1.0,
    gamma: float | None = None,
    tol: float = 1e-3,
    max_iter: int = 500_000,
) -> SvmModel:
    rows = np.asarray(rows, dtype=np.int64)
    Xr = np.asarray(X, dtype=float)[rows]
    ypm = np.where(np.asarray(y)[rows] == 1, 1.0, -1.0)
    if gamma is None:
        gamma = 1.0 / max(Xr.shape[1], 1)
    K = _kernel_matrix(Xr, Xr, kernel, gamma)
    alpha, bias, dual, it, violation = smo_solve(K, ypm, cost, tol, max_iter)
    keep = alpha > 0.0
    return SvmModel(
        kernel=kernel,
        gamma=gamma,
        sv_x=Xr[keep],
        sv_coef=alpha[keep] * ypm[keep],
        bias=bias,
        dual_objective=dual,
        iterations=it,
        converged=violation <= tol,
        kkt_violation=violation,
    )
