"""Numeric primitives shared by every model module.

Matrices are numpy float64 arrays throughout. The deterministic random
stream is our own counter-based generator so that seeded runs reproduce
bit-for-bit on any platform, independent of numpy's RNG evolution.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg


class SingularMatrixError(RuntimeError):
    """Raised when a system stays numerically singular after regularization."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformance check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-d operands, got {a.ndim}-d and {b.ndim}-d")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"non-conforming shapes {a.shape} and {b.shape}")
    return a @ b


def transpose(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"transpose expects a 2-d array, got {a.ndim}-d")
    return a.T.copy()


def solve_spd(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``a x = rhs`` for symmetric positive definite ``a``.

    Uses a Cholesky factorization. If the factorization fails the diagonal
    is inflated by a ridge term that doubles from 1e-8 up to 1e-2; if the
    matrix still does not factor, SingularMatrixError is raised.
    """
    a = np.asarray(a, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(rhs)):
        raise ValueError("solve_spd requires finite entries")
    ridge = 0.0
    while True:
        try:
            cf = scipy.linalg.cho_factor(
                a if ridge == 0.0 else a + ridge * np.eye(a.shape[0]), lower=True
            )
            return scipy.linalg.cho_solve(cf, rhs)
        except scipy.linalg.LinAlgError:
            ridge = 1e-8 if ridge == 0.0 else ridge * 2.0
            if ridge > 1e-2:
                raise SingularMatrixError(
                    "matrix is not positive definite even after ridge inflation"
                ) from None


def log_sum_exp(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """log(sum(exp(v))) with max subtraction so large logits cannot overflow."""
    v = np.asarray(v, dtype=np.float64)
    m = np.max(v, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(v - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Row-wise softmax, stable for logits of any magnitude."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one probe per entry."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f(x)
        flat[i] = orig - h
        down = f(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return g


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer: xor-shift-multiply twice, then a final xor-shift.
    # Wrap-around on uint64 is the point, hence the silenced overflow state.
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class RngStream:
    """Deterministic counter-based random stream.

    Output i is ``mix(key + (i+1) * golden)`` where mix is the SplitMix64
    finalizer. Counter-based means any block of draws vectorizes in numpy
    uint64 arithmetic and two streams with equal (seed, stream) ids produce
    identical sequences on every platform.
    """

    def __init__(self, seed: int, stream: int = 0):
        with np.errstate(over="ignore"):
            base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
            salt = _mix(np.uint64(stream & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + _GOLDEN)
            self._key = np.uint64(_mix(base * _GOLDEN + _GOLDEN) ^ salt)
        self._counter = np.uint64(0)
        self.seed = int(seed)
        self.stream = int(stream)

    def spawn(self, tag: int) -> "RngStream":
        """Child stream decorrelated from the parent by a tag."""
        with np.errstate(over="ignore"):
            child_seed = int(_mix(self._key + np.uint64(tag & 0xFFFFFFFFFFFFFFFF) * _GOLDEN))
        return RngStream(child_seed, stream=tag)

    def _raw(self, n: int) -> np.ndarray:
        with np.errstate(over="ignore"):
            idx = self._counter + np.arange(1, n + 1, dtype=np.uint64)
            self._counter = self._counter + np.uint64(n)
            return _mix(self._key + idx * _GOLDEN)

    def uniform(self, size: int | None = None) -> np.ndarray | float:
        """Uniform draws in [0, 1) with 53-bit resolution."""
        n = 1 if size is None else int(size)
        out = (self._raw(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return float(out[0]) if size is None else out

    def integers(self, low: int, high: int | None = None, size: int | None = None):
        """Uniform integers in [low, high). Modulo reduction, documented bias
        below 2**-40 for every range used in this package."""
        if high is None:
            low, high = 0, low
        span = int(high) - int(low)
        if span <= 0:
            raise ValueError("integers requires high > low")
        n = 1 if size is None else int(size)
        out = (self._raw(n) % np.uint64(span)).astype(np.int64) + int(low)
        return int(out[0]) if size is None else out

    def normal(self, size: int | None = None) -> np.ndarray | float:
        """Standard normal draws via Box-Muller on paired uniforms."""
        n = 1 if size is None else int(size)
        m = (n + 1) // 2
        u1 = np.maximum(self.uniform(m), 2.0 ** -53)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return float(out[0]) if size is None else out

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n) by sorting uniform keys."""
        return np.argsort(self.uniform(n), kind="stable")

    def shuffle(self, a: np.ndarray) -> np.ndarray:
        """Return a shuffled copy (the input is left untouched)."""
        a = np.asarray(a)
        return a[self.permutation(len(a))]

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        """Sample indices from range(n)."""
        if replace:
            return self.integers(0, n, size=size)
        if size > n:
            raise ValueError("cannot sample more than n without replacement")
        return self.permutation(n)[:size]
