"""Logistic regression via iteratively reweighted least squares, and LDA.

Logistic scores are class probabilities. LDA scores are posterior malignancy
probabilities under Gaussian class conditionals with a pooled, ridge-
regularized covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SEPARATION_NORM = 1e6  # coefficient blow-up marks (quasi-)separation
_FALLBACK_RIDGE = 1.0


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


@dataclass(frozen=True)
class LogisticModel:
    coef: np.ndarray
    intercept: float
    iterations: int
    converged: bool
    separation: bool
    gradient_norm: float  # max-abs penalized score residual at exit

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        return _sigmoid(X[rows] @ self.coef + self.intercept)

    def to_jsonable(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "iterations": self.iterations,
            "converged": self.converged,
            "separation": self.separation,
            "gradient_norm": self.gradient_norm,
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "LogisticModel":
        return cls(
            coef=np.array(blob["coef"], dtype=float),
            intercept=float(blob["intercept"]),
            iterations=int(blob["iterations"]),
            converged=bool(blob["converged"]),
            separation=bool(blob["separation"]),
            gradient_norm=float(blob["gradient_norm"]),
        )


def _irls(X, y, ridge, tol, max_iter):
    n, p = X.shape
    beta = np.zeros(p + 1)  # intercept last, unpenalized
    Z = np.column_stack([X, np.ones(n)])
    penalty = np.full(p + 1, ridge)
    penalty[-1] = 0.0
    prob = np.full(n, 0.5)
    grad_norm = np.inf
    diverged = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = _sigmoid(Z @ beta)
        grad = Z.T @ (y - prob) - penalty * beta
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            break
        w = np.maximum(prob * (1.0 - prob), 1e-10)
        hess = (Z * w[:, None]).T @ Z + np.diag(penalty + 1e-12)
        beta = beta + np.linalg.solve(hess, grad)
        if np.max(np.abs(beta)) > _SEPARATION_NORM:
            diverged = True
            break
    # all residuals vanishing means a perfect in-sample fit: the unpenalized
    # optimum sits at infinity and only the ridge kept the norm finite
    if not diverged and n > 0 and float(np.max(np.abs(y - prob))) < 1e-4:
        diverged = True
    return beta, it, grad_norm, diverged


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    rows,
    ridge: float = 1e-8,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> LogisticModel:
    rows = np.asarray(rows, dtype=np.int64)
    Xr = np.asarray(X, dtype=float)[rows]
    yr = np.asarray(y, dtype=float)[rows]
    beta, it, grad_norm, diverged = _irls(Xr, yr, ridge, tol, max_iter)
    separation = False
    if diverged:
        # separable data: refit with a real ridge and flag the model
        separation = True
        beta, it, grad_norm, _ = _irls(Xr, yr, _FALLBACK_RIDGE, tol, max_iter)
    return LogisticModel(
        coef=beta[:-1],
        intercept=float(beta[-1]),
        iterations=it,
        converged=grad_norm < tol,
        separation=separation,
        gradient_norm=grad_norm,
    )


@dataclass(frozen=True)
class LdaModel:
    coef: np.ndarray
    intercept: float
    means: np.ndarray  # (2, p), benign then malignant
    priors: np.ndarray

    def predict_rows(self, X: np.ndarray, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        return _sigmoid(X[rows] @ self.coef + self.intercept)

    def to_jsonable(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "means": self.means.tolist(),
            "priors": self.priors.tolist(),
        }

    @classmethod
    def from_jsonable(cls, blob: dict) -> "LdaModel":
        return cls(
            coef=np.array(blob["coef"], dtype=float),
            intercept=float(blob["intercept"]),
            means=np.array(blob["means"], dtype=float),
            priors=np.array(blob["priors"], dtype=float),
        )


def fit_lda(X: np.ndarray, y: np.ndarray, rows, ridge_scale: float = 1e-6) -> LdaModel:
    """Class means, pooled covariance with trace-scaled ridge, prior odds."""
    rows = np.asarray(rows, dtype=np.int64)
    Xr = np.asarray(X, dtype=float)[rows]
    yr = np.asarray(y, dtype=int)[rows]
    n, p = Xr.shape
    mu0 = Xr[yr == 0].mean(axis=0)
    mu1 = Xr[yr == 1].mean(axis=0)
    n1 = int(yr.sum())
    n0 = n - n1
    centered = Xr - np.where(yr[:, None] == 1, mu1, mu0)
    denom = max(n - 2, 1)
    cov = centered.T @ centered / denom
    lam = max(ridge_scale * np.trace(cov) / p, 1e-12)
    cov = cov + lam * np.eye(p)
    diff = mu1 - mu0
    w = np.linalg.solve(cov, diff)
    b = -0.5 * (mu1 + mu0) @ w + np.log(n1 / n0)
    return LdaModel(coef=w, intercept=float(b),
                    means=np.stack([mu0, mu1]),
                    priors=np.array([n0 / n, n1 / n]))
