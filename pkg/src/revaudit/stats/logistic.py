"""L2-regularized logistic regression via damped Newton iterations.

The objective is the mean negative log-likelihood plus ``l2/2 * ||w||^2``
with an unpenalized intercept.  Newton steps are damped by an Armijo
backtracking line search, so the loss is non-increasing across iterations,
and convergence is declared on the gradient norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

from revaudit.errors import IllPosedError, NonConvergenceError

DEFAULT_L2 = 1e-2
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


@dataclass
class LogisticModel:
    """Fitted coefficients plus the metadata needed to reuse them."""

    column_names: list[str] | None
    coefficients: np.ndarray
    intercept: float
    l2_strength: float
    tol: float
    n_iter: int
    grad_norm: float

    def decision_scores(self, X) -> np.ndarray:
        values, columns = _as_design(X)
        if columns is not None and self.column_names is not None and columns != self.column_names:
            raise ValueError("feature columns do not match the fitted model")
        if values.shape[1] != self.coefficients.shape[0]:
            raise ValueError(
                f"feature count mismatch: model has {self.coefficients.shape[0]}, input has {values.shape[1]}"
            )
        return values @ self.coefficients + self.intercept


def _as_design(X) -> tuple[np.ndarray, list[str] | None]:
    if hasattr(X, "values") and hasattr(X, "columns"):
        return np.asarray(X.values, dtype=float), list(X.columns)
    return np.asarray(X, dtype=float), None


def _loss_grad(values, y, beta, l2):
    """Penalized mean NLL, its gradient, and the per-sample probabilities.

    ``beta`` holds the weights with the intercept last; ``values`` already
    carries the appended all-ones column.
    """
    s = values @ beta
    # log(1 + e^s) - y*s equals the per-sample NLL for y in {0, 1}
    nll = float(np.mean(np.logaddexp(0.0, s) - y * s))
    p = expit(s)
    grad = values.T @ (p - y) / values.shape[0]
    penalty = np.zeros_like(beta)
    penalty[:-1] = l2 * beta[:-1]
    loss = nll + 0.5 * l2 * float(beta[:-1] @ beta[:-1])
    return loss, grad + penalty, p


def _newton_fit(values, y, l2, tol, max_iter):
    n, d = values.shape
    beta = np.zeros(d)
    loss, grad, p = _loss_grad(values, y, beta, l2)
    loss_path = [loss]
    for iteration in range(1, max_iter + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tol:
            return beta, iteration - 1, grad_norm, loss_path
        w = p * (1.0 - p)
        hess = values.T @ (values * w[:, None]) / n
        hess[np.arange(d - 1), np.arange(d - 1)] += l2
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise IllPosedError(
                "singular Hessian: the design is rank-degenerate (or separable) with l2 = 0; "
                "set l2 > 0"
            ) from None
        # Backtracking keeps the penalized loss non-increasing.
        t = 1.0
        accepted = False
        for _ in range(60):
            candidate = beta - t * step
            new_loss, new_grad, new_p = _loss_grad(values, y, candidate, l2)
            if new_loss <= loss:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise NonConvergenceError(
                f"line search stalled at iteration {iteration} (gradient norm {grad_norm:.3e})",
                iterations=iteration,
                grad_norm=grad_norm,
            )
        beta, loss, grad, p = candidate, new_loss, new_grad, new_p
        loss_path.append(loss)
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm <= tol:
        return beta, max_iter, grad_norm, loss_path
    raise NonConvergenceError(
        f"gradient norm {grad_norm:.3e} > tol {tol:.1e} after {max_iter} iterations",
        iterations=max_iter,
        grad_norm=grad_norm,
    )


class LogisticSurrogate(BaseEstimator):
    """sklearn-style binary classifier backed by the Newton solver."""

    def __init__(self, l2: float = DEFAULT_L2, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        values, columns = _as_design(X)
        y = np.asarray(y, dtype=float).ravel()
        if values.shape[0] != y.shape[0]:
            raise ValueError(f"X has {values.shape[0]} rows but y has {y.shape[0]}")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("y must be binary (0/1)")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        ones = np.ones((values.shape[0], 1))
        beta, n_iter, grad_norm, loss_path = _newton_fit(
            np.hstack([values, ones]), y, self.l2, self.tol, self.max_iter
        )
        self.coef_ = beta[:-1]
        self.intercept_ = float(beta[-1])
        self.n_iter_ = n_iter
        self.grad_norm_ = grad_norm
        self.loss_path_ = loss_path
        self.column_names_ = columns
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.model_.decision_scores(X)

    def predict_proba(self, X) -> np.ndarray:
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(int)

    @property
    def model_(self) -> LogisticModel:
        return LogisticModel(
            column_names=self.column_names_,
            coefficients=self.coef_,
            intercept=self.intercept_,
            l2_strength=self.l2,
            tol=self.tol,
            n_iter=self.n_iter_,
            grad_norm=self.grad_norm_,
        )


def fit_logistic(
    X,
    y,
    l2: float = DEFAULT_L2,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LogisticModel:
    """Fit and return the plain model record (see :class:`LogisticSurrogate`)."""
    return LogisticSurrogate(l2=l2, tol=tol, max_iter=max_iter).fit(X, y).model_


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    """Positive-class probability for each row of X."""
    return expit(model.decision_scores(X))


def save_model(model: LogisticModel, path) -> None:
    """Write the model as text; floats keep full round-trip precision."""
    lines = [
        "revaudit-logistic-model v1",
        f"l2\t{model.l2_strength!r}",
        f"tol\t{model.tol!r}",
        f"n_iter\t{model.n_iter}",
        f"grad_norm\t{model.grad_norm!r}",
        f"intercept\t{model.intercept!r}",
        f"n_features\t{len(model.coefficients)}",
    ]
    for i, coef in enumerate(model.coefficients):
        name = model.column_names[i] if model.column_names is not None else f"x{i}"
        lines.append(f"{name}\t{float(coef)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> LogisticModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "revaudit-logistic-model v1":
        raise ValueError(f"{path}: not a saved logistic model")
    header = {}
    for line in lines[1:7]:
        key, _, value = line.partition("\t")
        header[key] = value
    n_features = int(header["n_features"])
    names, coefs = [], []
    for line in lines[7:7 + n_features]:
        name, _, value = line.rpartition("\t")
        names.append(name)
        coefs.append(float(value))
    return LogisticModel(
        column_names=names,
        coefficients=np.array(coefs, dtype=float),
        intercept=float(header["intercept"]),
        l2_strength=float(header["l2"]),
        tol=float(header["tol"]),
        n_iter=int(header["n_iter"]),
        grad_norm=float(header["grad_norm"]),
    )
