"""Multinomial logistic regression fitted by Newton's method.

The most severe class is the reference: its logit is fixed at zero and the
other classes carry an intercept and a coefficient vector each. For class n
with parameters (lam_n, theta_n),

    p(n | x) = exp(lam_n + theta_n . x) / (1 + sum_m exp(lam_m + theta_m . x))

and the reference class takes the remaining mass. The fit minimizes the
negative log-likelihood plus an L2 penalty on the coefficient vectors
(intercepts unpenalized), with step halving so the objective never
increases between iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import softmax, solve_spd


class FitError(RuntimeError):
    """Optimization could not produce a usable model."""


@dataclass(frozen=True)
class MLRConfig:
    alpha: float = 1e-4          # L2 strength on coefficients
    tol: float = 1e-8            # gradient norm convergence threshold
    max_iter: int = 100
    max_halvings: int = 40


@dataclass
class MLRModel:
    """Fitted parameters. Coefficients cover only the masked-in columns."""

    intercepts: np.ndarray        # (n_classes - 1,)
    coefs: np.ndarray             # (n_classes - 1, n_masked)
    mask: np.ndarray              # bool over the full schema width
    n_classes: int = 3
    reference_index: int = 2


@dataclass
class MLRFitReport:
    iterations: int
    converged: bool
    grad_norm: float
    objective_history: list[float] = field(default_factory=list)


def _free_classes(n_classes: int, reference_index: int) -> list[int]:
    return [c for c in range(n_classes) if c != reference_index]


def predict_proba(model: MLRModel, X: np.ndarray) -> np.ndarray:
    """Per-class probabilities, rows summing to one."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.mask.size:
        raise ValueError(
            f"input has {X.shape[1]} columns, model expects {model.mask.size}"
        )
    Xm = X[:, model.mask]
    z = np.zeros((X.shape[0], model.n_classes))
    for row, c in enumerate(_free_classes(model.n_classes, model.reference_index)):
        z[:, c] = model.intercepts[row] + Xm @ model.coefs[row]
    return softmax(z, axis=1)


def predict(model: MLRModel, X: np.ndarray) -> np.ndarray:
    """Class labels; probability ties resolve toward the less severe class."""
    return np.argmax(predict_proba(model, X), axis=1)


def fit_mlr(X: np.ndarray, y: np.ndarray, config: MLRConfig = MLRConfig(),
            mask: np.ndarray | None = None, n_classes: int = 3,
            reference_index: int = 2) -> tuple[MLRModel, MLRFitReport]:
    """Fit by damped Newton iterations.

    Parameters are the stacked [intercept, coefficients] blocks of the
    non-reference classes. Each iteration solves the regularized Newton
    system with a Cholesky factorization, then halves the step until the
    penalized objective does not increase. Convergence is declared when
    the gradient norm drops to ``config.tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if X.shape[0] == 0:
        raise FitError("cannot fit on zero rows")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("labels fall outside the class universe")
    if np.unique(y).size < 2:
        raise FitError("labels contain a single class; need at least two")
    if mask is None:
        mask = np.ones(X.shape[1], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.size != X.shape[1]:
        raise ValueError("mask length must equal the column count")

    Xm = X[:, mask]
    n, d = Xm.shape
    free = _free_classes(n_classes, reference_index)
    k = len(free)
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    rows = np.arange(n)

    params = np.zeros(k * (d + 1))                 # [lam_c, theta_c] per free class

    def unpack(p):
        blocks = p.reshape(k, d + 1)
        return blocks[:, 0], blocks[:, 1:]

    def probabilities(p):
        lam, theta = unpack(p)
        z = np.zeros((n, n_classes))
        for row, c in enumerate(free):
            z[:, c] = lam[row] + Xm @ theta[row]
        return softmax(z, axis=1)

    def objective(p):
        _, theta = unpack(p)
        P = probabilities(p)
        nll = -float(np.sum(np.log(np.maximum(P[rows, y], 1e-300))))
        return nll + 0.5 * config.alpha * float(np.sum(theta ** 2))

    history = [objective(params)]
    obj = history[0]
    converged = False
    grad_norm = np.inf
    it = 0

    for it in range(1, config.max_iter + 1):
        P = probabilities(params)
        _, theta = unpack(params)

        # Gradient per free class: sum of (P_c - Y_c) for the intercept,
        # Xm^T (P_c - Y_c) plus the penalty for the coefficients.
        grad = np.zeros((k, d + 1))
        for row, c in enumerate(free):
            e = P[:, c] - Y[:, c]
            grad[row, 0] = e.sum()
            grad[row, 1:] = Xm.T @ e + config.alpha * theta[row]
        grad = grad.ravel()
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= config.tol:
            converged = True
            break

        # Newton system. Block (a, b) is Xa^T diag(w_ab) Xa with
        # w_ab = P_a (delta_ab - P_b); the penalty sits on coefficient
        # diagonals only.
        Xa = np.hstack([np.ones((n, 1)), Xm])
        m = k * (d + 1)
        H = np.zeros((m, m))
        for ra, ca in enumerate(free):
            for rb, cb in enumerate(free):
                if rb < ra:
                    continue  # symmetric; mirror below
                w = P[:, ca] * (1.0 - P[:, ca]) if ca == cb else -P[:, ca] * P[:, cb]
                block = Xa.T @ (Xa * w[:, None])
                H[ra * (d + 1):(ra + 1) * (d + 1), rb * (d + 1):(rb + 1) * (d + 1)] = block
                if rb != ra:
                    H[rb * (d + 1):(rb + 1) * (d + 1), ra * (d + 1):(ra + 1) * (d + 1)] = block.T
        for row in range(k):
            sl = slice(row * (d + 1) + 1, (row + 1) * (d + 1))
            H[sl, sl] += config.alpha * np.eye(d)

        step = solve_spd(H, grad)

        t = 1.0
        improved = False
        for _ in range(config.max_halvings):
            cand = params - t * step
            cand_obj = objective(cand)
            if cand_obj <= obj + 1e-12:
                params = cand
                obj = cand_obj
                improved = True
                break
            t *= 0.5
        history.append(obj)
        if not improved:
            break  # stalled below representable improvement

    lam, theta = unpack(params)
    model = MLRModel(intercepts=lam.copy(), coefs=theta.copy(), mask=mask,
                     n_classes=n_classes, reference_index=reference_index)
    report = MLRFitReport(iterations=it, converged=converged,
                          grad_norm=grad_norm, objective_history=history)
    return model, report
