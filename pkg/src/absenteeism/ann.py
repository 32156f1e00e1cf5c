"""Feed-forward network: relu hidden layers, softmax output, Adam updates.

The benchmark architecture is input-400-100-50-20-output. Training runs
mini-batch gradient descent with Adam, a stratified validation carve-out
from the training rows, and early stopping that restores the best epoch's
weights. Everything is float64 numpy, single threaded, so a fixed seed
reproduces the loss history bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream, log_sum_exp, softmax
from .preprocess import stratified_split


class TrainingDivergence(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class ANNConfig:
    hidden: tuple[int, ...] = (400, 100, 50, 20)
    n_classes: int = 3
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 300
    patience: int = 30
    val_fraction: float = 0.15
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


@dataclass
class MLPModel:
    """Weights[i] has shape (fan_in, fan_out); forward is X @ W + b."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    layer_sizes: tuple[int, ...]


@dataclass
class ANNTrainReport:
    epochs_run: int
    best_epoch: int
    stopped_early: bool
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    val_indices: np.ndarray | None = None     # rows of the input used for validation


def init_mlp(layer_sizes: tuple[int, ...], rng: RngStream) -> MLPModel:
    """Scaled-normal init: std sqrt(2 / fan_in) per layer, zero biases."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = rng.normal(fan_in * fan_out).reshape(fan_in, fan_out)
        weights.append(w * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MLPModel(weights=weights, biases=biases, layer_sizes=tuple(layer_sizes))


def _forward_cached(model: MLPModel, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Activations per layer (post-relu) and the final logits."""
    acts = [X]
    h = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        if i == last:
            return acts, z
        h = np.maximum(z, 0.0)
        acts.append(h)
    raise AssertionError("unreachable")


def ann_forward(model: MLPModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities, rows summing to one."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.layer_sizes[0]:
        raise ValueError(
            f"input has {X.shape[1]} columns, network expects {model.layer_sizes[0]}"
        )
    _, logits = _forward_cached(model, X)
    return softmax(logits, axis=1)


def ann_predict(model: MLPModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(ann_forward(model, X), axis=1)


def ann_loss(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of the true classes."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    _, logits = _forward_cached(model, X)
    lse = log_sum_exp(logits, axis=1)
    return float(np.mean(lse - logits[np.arange(len(y)), y]))


def ann_backward(model: MLPModel, X: np.ndarray, y: np.ndarray
                 ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the mean cross-entropy for every weight and bias."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    acts, logits = _forward_cached(model, X)
    P = softmax(logits, axis=1)
    delta = P.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads_w = [np.empty(0)] * len(model.weights)
    grads_b = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)
    return grads_w, grads_b


def _clone_params(model: MLPModel) -> tuple[list[np.ndarray], list[np.ndarray]]:
    return [w.copy() for w in model.weights], [b.copy() for b in model.biases]


def ann_train(X: np.ndarray, y: np.ndarray, config: ANNConfig = ANNConfig()
              ) -> tuple[MLPModel, ANNTrainReport]:
    """Train with Adam and validation-based early stopping.

    A stratified ``val_fraction`` of the rows is carved out before any
    update and only scored, never trained on; the carve indices are part
    of the report so callers can audit them. Training stops after
    ``patience`` epochs without validation improvement (or at the epoch
    cap) and the best-epoch weights are restored. A non-finite loss
    raises TrainingDivergence naming the epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    rng = RngStream(config.seed)

    layer_sizes = (X.shape[1],) + tuple(config.hidden) + (config.n_classes,)
    model = init_mlp(layer_sizes, rng.spawn(1))
    report = ANNTrainReport(epochs_run=0, best_epoch=0, stopped_early=False)
    if config.max_epochs == 0:
        report.val_indices = np.empty(0, dtype=np.int64)
        return model, report

    carve = stratified_split(y, 1.0 - config.val_fraction, seed=rng.spawn(2).seed)
    fit_idx, val_idx = carve.train, carve.test
    report.val_indices = val_idx
    Xf, yf = X[fit_idx], y[fit_idx]
    Xv, yv = X[val_idx], y[val_idx]

    params = model.weights + model.biases
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    t = 0
    shuffle_rng = rng.spawn(3)

    best_val = np.inf
    best_params = _clone_params(model)
    best_epoch = 0
    since_improve = 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(yf))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(yf), config.batch_size):
            batch = order[start:start + config.batch_size]
            gw, gb = ann_backward(model, Xf[batch], yf[batch])
            grads = gw + gb
            t += 1
            for p, g, m, v in zip(params, grads, m_state, v_state):
                m *= config.beta1
                m += (1 - config.beta1) * g
                v *= config.beta2
                v += (1 - config.beta2) * (g * g)
                m_hat = m / (1 - config.beta1 ** t)
                v_hat = v / (1 - config.beta2 ** t)
                p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
            n_batches += 1
        epoch_loss = ann_loss(model, Xf, yf)
        val_loss = ann_loss(model, Xv, yv)
        if not np.isfinite(epoch_loss) or not np.isfinite(val_loss):
            raise TrainingDivergence(f"non-finite loss at epoch {epoch}")
        report.train_losses.append(epoch_loss)
        report.val_losses.append(val_loss)
        report.epochs_run = epoch

        if val_loss < best_val:
            best_val = val_loss
            best_params = _clone_params(model)
            best_epoch = epoch
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience:
                report.stopped_early = True
                break

    model.weights, model.biases = best_params
    report.best_epoch = best_epoch
    return model, report
