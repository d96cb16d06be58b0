"""Scalar kernel ``K_t(x, y)`` and its first and mixed derivatives.

``K`` is the bounded solution of ``dK/dt = (d_xx + d_yy) K`` on ``{x < y}``
with ``K(x, x) = 1`` and initial data ``f``::

    K_t(x, y) = 1 + int_{x' < y'} G_t(x, y; x', y') (f(x', y') - 1) dx' dy'
    G_t = g_t(x - x', y - y') - g_t(y - x', x - y')
    g_t(a, b) = exp(-(a^2 + b^2) / 4t) / (4 pi t)

Closed forms are used for the empty and maximal data and for weighted atom
spins; every datum can also be integrated by cell-wise Gauss-Legendre
quadrature, which doubles as the cross-check for the closed forms.
Derivatives differentiate the Gaussians under the integral sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc, ndtr

from . import data as _data

SQRT_PI = math.sqrt(math.pi)


def gaussian_g(t: float, x, y):
    """Planar heat kernel ``exp(-(x^2 + y^2) / 4t) / (4 pi t)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.exp(-(x * x + y * y) / (4.0 * t)) / (4.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelEval:
    K: float
    DxK: float
    DyK: float
    DxyK: float
    method: str = "closed"
    converged: bool = True
    quad_error: float = 0.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation radius ``R`` (units of sqrt(t)) and Gauss-Legendre order ``m``."""

    R: float = 10.0
    m: int = 64
    rule: str = "gauss-legendre-cells"
    check_tol: float = 1e-6

    def __post_init__(self):
        if self.R < 8:
            raise ValueError("truncation radius R must be >= 8")
        if self.m < 64:
            raise ValueError("need at least 64 nodes per axis")
        if self.rule != "gauss-legendre-cells":
            raise ValueError(f"unknown rule {self.rule!r}")


@lru_cache(maxsize=None)
def _gl01(m: int):
    u, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


# --------------------------------------------------------------------------
# closed forms


def _maximal(t, x, y):
    s = math.sqrt(8.0 * t)
    w = y - x
    e = np.exp(-(w / s) ** 2)
    K = erfc(w / s)
    DxK = 2.0 / (s * SQRT_PI) * e
    DxyK = -4.0 * w / (s ** 3 * SQRT_PI) * e
    return K, DxK, -DxK, DxyK


def _cell_masses(edges, z, sigma):
    """Masses of N(z, sigma^2) on the cells between ``edges`` and their z-derivatives."""
    z = z[:, None]
    lo = (edges[None, :-1] - z) / sigma
    hi = (edges[None, 1:] - z) / sigma
    # upper-tail cells via the reflected difference avoid 1 - 1 cancellation
    upper = lo > 0
    mass = np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    dens_lo = np.where(np.isfinite(lo), np.exp(-0.5 * lo * lo), 0.0)
    dens_hi = np.where(np.isfinite(hi), np.exp(-0.5 * hi * hi), 0.0)
    dmass = (dens_lo - dens_hi) / (sigma * math.sqrt(2.0 * math.pi))
    return mass, dmass


def _atom_bilinear(q, u):
    """``H[..., j] = sum_{i<j} (Q_ij - 1) u[..., i]`` with ``Q_ij = prod q[i+1..j]``."""
    H = np.zeros_like(u)
    h = np.zeros(u.shape[:-1])
    U = np.zeros(u.shape[:-1])
    for j in range(1, u.shape[-1]):
        h = q[j - 1] * (h + u[..., j - 1])
        U = U + u[..., j - 1]
        H[..., j] = h - U
    return H


def _atoms(t, x, y, pos, q):
    sigma = math.sqrt(2.0 * t)
    edges = np.concatenate([[-np.inf], pos, [np.inf]])
    Px, dPx = _cell_masses(edges, x, sigma)
    Py, dPy = _cell_masses(edges, y, sigma)
    Hx, Hy, Hdx, Hdy = _atom_bilinear(q, np.stack([Px, Py, dPx, dPy]))

    def form(Ha, v):
        return np.sum(Ha * v, axis=-1)

    K = 1.0 + form(Hx, Py) - form(Hy, Px)
    DxK = form(Hdx, Py) - form(Hy, dPx)
    DyK = form(Hx, dPy) - form(Hdy, Px)
    DxyK = form(Hdx, dPy) - form(Hdy, dPx)
    return K, DxK, DyK, DxyK


def has_closed_form(f) -> bool:
    return isinstance(f, _data.Maximal) or _data.closed_form_atoms(f, 0.5) is not None


def _closed(f, theta, t, x, y):
    if isinstance(f, _data.Maximal):
        return _maximal(t, x, y)
    atoms = _data.closed_form_atoms(f, theta)
    if atoms is None:
        raise ValueError(f"no closed form for {f.variant} data")
    pos, q = atoms
    if pos.size == 0:
        one = np.ones_like(x)
        zero = np.zeros_like(x)
        return one, zero, zero.copy(), zero.copy()
    return _atoms(t, x, y, pos, q)


# --------------------------------------------------------------------------
# quadrature


def _cells(f, theta, lo, hi, extra):
    """Cell edges inside [lo, hi] and the constant value of f - 1 on each cell pair."""
    bp = np.asarray(f.breakpoints(), dtype=float)
    edges = np.unique(np.concatenate([[lo, hi], bp[(bp > lo) & (bp < hi)], extra]))
    edges = edges[(edges >= lo) & (edges <= hi)]
    ne = edges.size - 1
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    i, j = np.triu_indices(ne)
    xs = np.where(i == j, left[i] + (right[i] - left[i]) / 3.0, mid[i])
    ys = np.where(i == j, left[i] + 2.0 * (right[i] - left[i]) / 3.0, mid[j])
    fval = np.asarray(f.spin(theta, xs, ys), dtype=float) - 1.0
    keep = fval != 0.0
    return edges, i[keep], j[keep], fval[keep]


def _quad_nodes(edges, ci, cj, m):
    u, w = _gl01(m)
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(w, w)
    a0, a1 = edges[ci][:, None], edges[ci + 1][:, None]
    b0, b1 = edges[cj][:, None], edges[cj + 1][:, None]
    rect = (ci != cj)[:, None]
    # rectangles: tensor rule; diagonal cells: collapsed triangle x' < y'
    yp = b0 + (b1 - b0) * V.ravel()[None, :]
    xp_rect = a0 + (a1 - a0) * U.ravel()[None, :]
    xp_tri = a0 + (yp - a0) * U.ravel()[None, :]
    xp = np.where(rect, xp_rect, xp_tri)
    jac = np.where(rect, (a1 - a0) * (b1 - b0), (b1 - b0) * (yp - a0))
    return xp, yp, jac * W.ravel()[None, :]


def _quad_point(f, theta, t, x, y, q: QuadratureSpec, m: int):
    r = q.R * math.sqrt(t)
    lo, hi = min(x, y) - r, max(x, y) + r
    edges, ci, cj, fval = _cells(f, theta, lo, hi, np.array([x, y]))
    if ci.size == 0:
        return 1.0, 0.0, 0.0, 0.0
    xp, yp, wt = _quad_nodes(edges, ci, cj, m)
    wt = wt * fval[:, None]
    c = 1.0 / (4.0 * math.pi * t)
    a1, b1 = x - xp, y - yp          # direct term
    a2, b2 = y - xp, x - yp          # image term
    g1 = c * np.exp(-(a1 * a1 + b1 * b1) / (4.0 * t))
    g2 = c * np.exp(-(a2 * a2 + b2 * b2) / (4.0 * t))
    K = 1.0 + np.sum(wt * (g1 - g2))
    DxK = np.sum(wt * (-a1 * g1 + b2 * g2)) / (2.0 * t)
    DyK = np.sum(wt * (-b1 * g1 + a2 * g2)) / (2.0 * t)
    DxyK = np.sum(wt * (a1 * b1 * g1 - a2 * b2 * g2)) / (4.0 * t * t)
    return float(K), float(DxK), float(DyK), float(DxyK)


def quadrature_eval(f, theta: float, t: float, x: float, y: float,
                    q: QuadratureSpec | None = None) -> KernelEval:
    """Generic quadrature with an m vs 2m convergence check."""
    q = q or QuadratureSpec()
    coarse = _quad_point(f, theta, t, x, y, q, q.m)
    fine = _quad_point(f, theta, t, x, y, q, 2 * q.m)
    err = max(abs(a - b) for a, b in zip(coarse, fine))
    return KernelEval(*fine, method="quadrature", converged=err <= q.check_tol, quad_error=err)


# --------------------------------------------------------------------------
# public evaluators


def _check_args(f, theta, t):
    f.validate(theta)
    if not t > 0:
        raise ValueError("t must be positive")


def kernel_arrays(f, theta: float, t: float, x, y, method: str = "auto",
                  q: QuadratureSpec | None = None):
    """Vectorized ``(K, DxK, DyK, DxyK)`` for arrays with ``x <= y``."""
    _check_args(f, theta, t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    if np.any(y < x):
        raise ValueError("kernel is defined for x <= y")
    shape = x.shape
    xf, yf = x.ravel(), y.ravel()
    if method == "auto":
        method = "closed" if has_closed_form(f) else "quadrature"
    if method == "closed":
        out = _closed(f, theta, t, xf, yf)
    elif method == "quadrature":
        q = q or QuadratureSpec()
        vals = [_quad_point(f, theta, t, a, b, q, q.m) for a, b in zip(xf, yf)]
        out = tuple(np.array(v, dtype=float) for v in zip(*vals)) if vals else (np.empty(0),) * 4
    else:
        raise ValueError(f"unknown method {method!r}")
    return tuple(np.asarray(o, dtype=float).reshape(shape) for o in out)


def kernel_eval(f, theta: float, t: float, x: float, y: float,
                q: QuadratureSpec | None = None, method: str = "auto") -> KernelEval:
    """Kernel and derivatives at one point ``x <= y``.

    ``method`` is ``"auto"`` (closed form when available), ``"closed"`` or
    ``"quadrature"``; quadrature results carry an m vs 2m convergence flag.
    """
    _check_args(f, theta, t)
    if y < x:
        raise ValueError("kernel is defined for x <= y")
    if method == "auto":
        method = "closed" if has_closed_form(f) else "quadrature"
    if method == "quadrature":
        return quadrature_eval(f, theta, t, x, y, q)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    K, DxK, DyK, DxyK = kernel_arrays(f, theta, t, x, y, method="closed")
    return KernelEval(float(K), float(DxK), float(DyK), float(DxyK), method="closed")


def scalar_kernel(f, theta: float, method: str = "auto", q: QuadratureSpec | None = None):
    """``K(t, x, y) -> float`` evaluator for the duality matrix assembly."""
    def K(t, x, y):
        return float(kernel_arrays(f, theta, t, x, y, method=method, q=q)[0])
    return K


def kernel_evaluator(f, theta: float, method: str = "auto", q: QuadratureSpec | None = None):
    """``(t, x, y) -> KernelEval`` evaluator for the intensity matrix assembly."""
    def ev(t, x, y):
        return kernel_eval(f, theta, t, x, y, q=q, method=method)
    return ev


def heat_residual(f, theta: float, t: float, x: float, y: float, h: float,
                  method: str = "auto", q: QuadratureSpec | None = None) -> float:
    """``|dK/dt - (d_xx + d_yy) K|`` by central differences of step ``h``."""
    if not (t - h > 0):
        raise ValueError("need t > h")
    if (y - x) / math.sqrt(2.0) < 3.0 * h:
        raise ValueError("stencil too close to the diagonal")
    xs = np.array([x, x, x + h, x - h, x, x, x])
    ys = np.array([y, y, y, y, y + h, y - h, y])
    ts = [t + h, t - h, t, t, t, t, t]
    vals = np.array([kernel_arrays(f, theta, tt, a, b, method=method, q=q)[0]
                     for tt, a, b in zip(ts, xs, ys)], dtype=float).ravel()
    dt = (vals[0] - vals[1]) / (2.0 * h)
    lap = (vals[2] + vals[3] + vals[4] + vals[5] - 4.0 * vals[6]) / (h * h)
    return float(abs(dt - lap))
