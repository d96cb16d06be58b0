"""Pfaffians and the skew matrices built from kernel evaluations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._backend import impl as _impl

BRUTEFORCE_MAX_ORDER = 12


class SkewMatrix:
    """Dense real skew-symmetric matrix of even order.

    Only the strict upper triangle of the input is used; the lower triangle is
    its negated transpose, so skew symmetry holds exactly.
    """

    __slots__ = ("_a",)

    def __init__(self, a):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("skew matrix must be square")
        n = a.shape[0]
        if n < 2 or n % 2:
            raise ValueError(f"skew matrix order must be even and >= 2, got {n}")
        if not np.all(np.isfinite(a)):
            raise ValueError("skew matrix entries must be finite")
        upper = np.triu(a, 1)
        self._a = np.ascontiguousarray(upper - upper.T)
        self._a.setflags(write=False)

    @classmethod
    def from_upper(cls, n: int, entry: Callable[[int, int], float]) -> "SkewMatrix":
        a = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                a[i, j] = entry(i, j)
        return cls(a)

    @property
    def order(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def __repr__(self):
        return f"SkewMatrix(order={self.order})"


@dataclass(frozen=True)
class MatrixKernelBlock:
    k11: float
    k12: float
    k21: float
    k22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.k11, self.k12], [self.k21, self.k22]])

    @property
    def is_skew(self) -> bool:
        return self.k11 == 0.0 and self.k22 == 0.0 and self.k21 == -self.k12


def _as_skew(A) -> SkewMatrix:
    return A if isinstance(A, SkewMatrix) else SkewMatrix(A)


def pfaffian(A) -> float:
    """Pfaffian by pivoted skew ``L T L^T`` elimination, ``pf([[0, a], [-a, 0]]) = a``."""
    return float(_impl.pfaffian(_as_skew(A).array))


def pfaffian_batch(A) -> np.ndarray:
    """Pfaffians of a stack ``(B, 2n, 2n)`` of skew matrices (not re-validated)."""
    a = np.ascontiguousarray(A, dtype=float)
    if a.ndim != 3:
        raise ValueError("expected a (B, n, n) stack")
    return np.asarray(_impl.pfaffian_batch(a))


def pfaffian_bruteforce(A) -> float:
    """Pfaffian by recursive expansion along the first row (order <= 12)."""
    a = _as_skew(A).array
    if a.shape[0] > BRUTEFORCE_MAX_ORDER:
        raise ValueError(f"brute-force Pfaffian refused above order {BRUTEFORCE_MAX_ORDER}")

    def rec(idx):
        if not idx:
            return 1.0
        first, rest = idx[0], idx[1:]
        total = 0.0
        for k, j in enumerate(rest):
            if a[first, j] != 0.0:
                sign = -1.0 if k % 2 else 1.0
                total += sign * a[first, j] * rec(rest[:k] + rest[k + 1:])
        return total

    return rec(tuple(range(a.shape[0])))


def _check_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("need a non-empty 1-d sequence of points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("points must be strictly increasing")
    return x


def assemble_duality_matrix(points: Sequence[float], K: Callable, t: float) -> SkewMatrix:
    """Skew matrix with entries ``K(t, x_i, x_j)`` above the diagonal."""
    x = _check_points(points)
    if not t > 0:
        raise ValueError("t must be positive")
    if x.size % 2:
        raise ValueError("duality matrix needs an even number of points")

    def entry(i, j):
        v = K(t, x[i], x[j])
        return getattr(v, "K", v)

    return SkewMatrix.from_upper(x.size, entry)


def derived_block(ev, theta: float, diagonal: bool = False) -> MatrixKernelBlock:
    """2x2 block from a ``KernelEval``-like object.

    Off the diagonal the block is ``[[K, DxK], [DyK, DxyK]] / (1 + theta)``;
    on it, the skew block with upper entry ``DxK(x, x) / (1 + theta)``.  These
    signs make ``pf`` the (non-negative) correlation function; flipping the sign
    of both derivative entries changes every n-point Pfaffian by ``(-1)**n``.
    """
    c = 1.0 / (1.0 + theta)
    if diagonal:
        d = c * ev.DxK
        return MatrixKernelBlock(0.0, d, -d, 0.0)
    return MatrixKernelBlock(c * ev.K, c * ev.DxK, c * ev.DyK, c * ev.DxyK)


def assemble_intensity_matrix(points: Sequence[float], kernel: Callable, t: float,
                              theta: float) -> SkewMatrix:
    """``2n x 2n`` matrix of derived-form blocks; ``pf`` is the n-point intensity.

    ``kernel(t, x, y)`` returns a ``KernelEval`` for ``x <= y``.
    """
    x = _check_points(points)
    if not t > 0:
        raise ValueError("t must be positive")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    n = x.size
    a = np.zeros((2 * n, 2 * n))
    for i in range(n):
        for j in range(i, n):
            blk = derived_block(kernel(t, x[i], x[j]), theta, diagonal=(i == j)).as_array()
            a[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk
    return SkewMatrix(a)


def intensity_stack(x: np.ndarray, K, DxK, DyK, DxyK, theta: float) -> np.ndarray:
    """Vectorized intensity matrices.

    ``x`` has shape ``(B, n)`` (rows sorted); the kernel arrays have shape
    ``(B, n, n)`` and are read on ``i <= j`` only.
    """
    B, n = x.shape
    c = 1.0 / (1.0 + theta)
    a = np.zeros((B, 2 * n, 2 * n))
    a[:, 0::2, 0::2] = np.triu(c * K, 1)
    a[:, 0::2, 1::2] = np.triu(c * DxK, 0)
    a[:, 1::2, 0::2] = np.triu(c * DyK, 1)
    a[:, 1::2, 1::2] = np.triu(c * DxyK, 1)
    return a - a.transpose(0, 2, 1)


def hadamard_bound(k: int, kernel_sup: float) -> float:
    """``|pf| <= ||K||_inf^k (2k)^(k/2)`` for a ``2k x 2k`` derived-form matrix."""
    if k == 0:
        return 1.0
    return kernel_sup ** k * (2.0 * k) ** (k / 2.0)


def log_hadamard_bound(k: int, kernel_sup: float) -> float:
    if k == 0:
        return 0.0
    if kernel_sup <= 0:
        return -math.inf
    return k * math.log(kernel_sup) + 0.5 * k * math.log(2.0 * k)
