"""RBF support vector machines trained by sequential minimal optimization.

The binary solver maximizes the usual dual with box constraints [0, c] and
the equality constraint sum(alpha_i y_i) = 0, picking the maximal
KKT-violating pair each step and updating the cached gradient
incrementally. There is no pass structure: the stop test is the KKT gap
m(alpha) - M(alpha) <= tol, with a hard iteration budget so a degenerate
input cannot spin forever. Multiclass is one-vs-rest over the three
classes with argmax decision values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConvergenceError(RuntimeError):
    """The solver hit its iteration budget before reaching the KKT gap."""


@dataclass(frozen=True)
class SVMConfig:
    gamma: float = 1.0           # grid-search winner on the reference data
    c: float = 100.0
    tol: float = 1e-3
    max_iter: int = 100_000      # pair updates, a budget rather than a target
    n_classes: int = 3


@dataclass
class BinarySVMModel:
    """One margin machine: f(x) = sum_i coef_i K(sv_i, x) + bias."""

    support_vectors: np.ndarray   # (n_sv, d)
    coefs: np.ndarray             # alpha_i y_i at the support vectors
    bias: float
    gamma: float
    c: float
    iterations: int = 0
    converged: bool = True


@dataclass
class SVMModel:
    machines: list[BinarySVMModel]   # one per class, in class order
    n_classes: int
    config: SVMConfig


@dataclass
class SMOReport:
    iterations: int
    converged: bool
    kkt_gap: float
    objective_history: list[float] = field(default_factory=list)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma ||a - b||^2) for every row pair."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError("kernel operands must share the feature dimension")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sq_a = np.sum(A * A, axis=1)[:, None]
    sq_b = np.sum(B * B, axis=1)[None, :]
    d2 = np.maximum(sq_a + sq_b - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


def train_binary_svm(X: np.ndarray, y: np.ndarray, config: SVMConfig,
                     track_objective: bool = False
                     ) -> tuple[BinarySVMModel, SMOReport]:
    """SMO on labels in {-1, +1}.

    Each step selects i maximizing -y_i grad_i over the "up" set and j
    minimizing it over the "down" set, solves the two-variable subproblem
    in closed form with box clipping, and patches the gradient with the
    two touched kernel columns. The bias averages y_i - f_0(x_i) over
    free support vectors, falling back to the KKT gap midpoint when every
    support vector sits on the box.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("binary labels must be -1 or +1")
    if len(set(np.unique(y))) < 2:
        raise ValueError("need both classes to train a margin")
    n = X.shape[0]
    c = float(config.c)

    K = rbf_kernel(X, X, config.gamma)
    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    grad = -np.ones(n)            # gradient of the dual objective (minimized form)
    history = []

    def objective() -> float:
        # W(alpha) = sum(alpha) - alpha^T Q alpha / 2; via the cached gradient.
        return float(0.5 * (alpha.sum() - alpha @ grad))

    if track_objective:
        history.append(objective())

    it = 0
    gap = np.inf
    converged = False
    while it < config.max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        down = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        yg_up = np.where(up, yg, -np.inf)
        yg_down = np.where(down, yg, np.inf)
        i = int(np.argmax(yg_up))
        j = int(np.argmin(yg_down))
        gap = float(yg_up[i] - yg_down[j])
        if gap <= config.tol:
            converged = True
            break

        # Two-variable subproblem along the equality constraint. The exact
        # minimizer moves alpha_i by y_i * gap / quad before box clipping;
        # membership in the up/down sets guarantees room in that direction.
        quad = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        quad = max(quad, 1e-12)
        t = y[i] * (yg[i] - yg[j]) / quad
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] == y[j]:
            # alpha_i + alpha_j is constant: j gives what i takes.
            t = min(t, c - ai_old, aj_old) if t > 0 else max(t, -ai_old, aj_old - c)
            alpha[i] = ai_old + t
            alpha[j] = aj_old - t
        else:
            # alpha_i - alpha_j is constant: both move together.
            t = min(t, c - ai_old, c - aj_old) if t > 0 else max(t, -ai_old, -aj_old)
            alpha[i] = ai_old + t
            alpha[j] = aj_old + t

        d_i = alpha[i] - ai_old
        d_j = alpha[j] - aj_old
        grad += Q[:, i] * d_i + Q[:, j] * d_j
        it += 1
        if track_objective:
            history.append(objective())

    sv = alpha > 1e-10
    free = sv & (alpha < c - 1e-10)
    f0 = (alpha * y) @ K        # decision values without bias
    if free.any():
        bias = float(np.mean(y[free] - f0[free]))
    else:
        yg = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        down = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[down].min() if down.any() else 0.0
        bias = float((hi + lo) / 2.0)

    model = BinarySVMModel(
        support_vectors=X[sv].copy(),
        coefs=(alpha[sv] * y[sv]),
        bias=bias,
        gamma=config.gamma,
        c=c,
        iterations=it,
        converged=converged,
    )
    report = SMOReport(iterations=it, converged=converged, kkt_gap=gap,
                       objective_history=history)
    return model, report


def binary_decision(model: BinarySVMModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    K = rbf_kernel(X, model.support_vectors, model.gamma)
    return K @ model.coefs + model.bias


def svm_fit(X: np.ndarray, y: np.ndarray, config: SVMConfig = SVMConfig()
            ) -> SVMModel:
    """One-vs-rest: train one margin per class against all the others."""
    y = np.asarray(y, dtype=np.int64)
    machines = []
    for cls in range(config.n_classes):
        target = np.where(y == cls, 1.0, -1.0)
        model, _ = train_binary_svm(X, target, config)
        machines.append(model)
    return SVMModel(machines=machines, n_classes=config.n_classes, config=config)


def svm_decision_values(model: SVMModel, X: np.ndarray) -> np.ndarray:
    """Per-class margins, shape (n_rows, n_classes)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.column_stack([binary_decision(m, X) for m in model.machines])


def svm_predict(model: SVMModel, X: np.ndarray) -> np.ndarray:
    """Largest margin wins; ties resolve toward the less severe class."""
    return np.argmax(svm_decision_values(model, X), axis=1)


@dataclass
class GridSearchResult:
    best_gamma: float
    best_c: float
    best_score: float
    scores: dict[tuple[float, float], float] = field(default_factory=dict)
    errors: dict[tuple[float, float], str] = field(default_factory=dict)


def _stratified_folds(y: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Fold id per row: classes shuffled separately, dealt round-robin."""
    from .numerics import RngStream

    y = np.asarray(y)
    folds = np.zeros(len(y), dtype=np.int64)
    rng = RngStream(seed)
    for cls in np.unique(y):
        idx = rng.shuffle(np.flatnonzero(y == cls))
        folds[idx] = np.arange(len(idx)) % n_folds
    return folds


def svm_grid_search(X: np.ndarray, y: np.ndarray,
                    gammas=(0.001, 0.01, 0.1, 1.0),
                    cs=(0.1, 1.0, 10.0, 100.0),
                    n_folds: int = 5, seed: int = 0,
                    base: SVMConfig = SVMConfig()) -> GridSearchResult:
    """Mean cross-validated weighted F1 over the (gamma, c) grid.

    A cell whose fit raises is recorded under ``errors`` and skipped.
    Ties prefer the smaller c, then the smaller gamma, so the search is
    deterministic for a fixed seed.
    """
    from .metrics import evaluate_predictions

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    folds = _stratified_folds(y, n_folds, seed)
    scores: dict[tuple[float, float], float] = {}
    errors: dict[tuple[float, float], str] = {}
    for gamma in gammas:
        for c in cs:
            config = SVMConfig(gamma=gamma, c=c, tol=base.tol,
                               max_iter=base.max_iter, n_classes=base.n_classes)
            try:
                fold_f1 = []
                for f in range(n_folds):
                    hold = folds == f
                    model = svm_fit(X[~hold], y[~hold], config)
                    report = evaluate_predictions(y[hold],
                                                  svm_predict(model, X[hold]))
                    fold_f1.append(report.weighted_f1)
                scores[(gamma, c)] = float(np.mean(fold_f1))
            except Exception as exc:
                errors[(gamma, c)] = f"{type(exc).__name__}: {exc}"
    if not scores:
        raise ValueError("every grid cell failed to fit")
    best_gamma, best_c = min(
        scores, key=lambda gc: (-scores[gc], gc[1], gc[0])
    )
    return GridSearchResult(best_gamma=best_gamma, best_c=best_c,
                            best_score=scores[(best_gamma, best_c)],
                            scores=scores, errors=errors)
