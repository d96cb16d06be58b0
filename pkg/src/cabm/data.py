"""Initial data and spin functions on the wedge ``V2 = {x < y}``.

Four representations are supported:

``FiniteSpin``
    ``(-theta) ** mu(x, y)`` for a finite point measure ``mu`` (atoms may
    carry multiplicities).
``Product``
    ``f(x) f(y)`` for a step function ``f`` with values in ``[-1, 1]``;
    only meaningful for the annihilating case ``theta = 1``.
``ClosedSetAvoid``
    ``1(S_c & (x, y) empty) * (-theta) ** (sum of weights of isolated points
    in (x, y))`` where ``S_c`` is a finite union of closed intervals and the
    isolated points carry weights in ``{1, 2, ...} | {inf}``; ``theta < 1``.
``Maximal``
    ``f == 0``, a particle at every point.

Powers use the convention ``0 ** 0 = 1`` and ``(-theta) ** inf = 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

INF_WEIGHT = math.inf


def theta_power(theta: float, k) -> np.ndarray:
    """``(-theta) ** k`` elementwise, with ``0**0 = 1`` and ``k = inf -> 0``."""
    k = np.asarray(k, dtype=float)
    finite = np.isfinite(k)
    kk = np.where(finite, k, 0.0).astype(np.int64)
    out = np.where(kk == 0, 1.0, np.power(-float(theta), kk.astype(float)))
    out = np.where(finite, out, 0.0) + 0.0
    return out


def _check_theta(theta: float) -> None:
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must lie in [0, 1], got {theta}")


@dataclass(frozen=True)
class PointMeasure:
    """Finite point measure as ``((position, multiplicity), ...)``."""

    atoms: tuple = ()

    def __post_init__(self):
        atoms = tuple((float(p), int(m)) for p, m in self.atoms)
        pos = [p for p, _ in atoms]
        if any(not math.isfinite(p) for p in pos):
            raise ValueError("atom positions must be finite")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("atom positions must be strictly increasing")
        if any(m < 1 for _, m in atoms):
            raise ValueError("multiplicities must be positive integers")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "PointMeasure":
        """Build from a list of positions, merging repeats into multiplicities."""
        merged: dict = {}
        for p in sorted(float(p) for p in points):
            merged[p] = merged.get(p, 0) + 1
        return cls(tuple(merged.items()))

    @property
    def positions(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    @property
    def is_simple(self) -> bool:
        return all(m == 1 for _, m in self.atoms)

    @property
    def total(self) -> int:
        return sum(m for _, m in self.atoms)

    def count(self, a, b) -> np.ndarray:
        """Mass of the open interval ``(a, b)``."""
        return _open_count(self.positions, self.weights, a, b)

    def __len__(self):
        return len(self.atoms)


def _open_count(pos, w, a, b):
    w = np.asarray(w, dtype=float)
    inf = np.isinf(w)
    # infinite weights are tallied apart so inf - inf never occurs
    cw = np.concatenate([[0.0], np.cumsum(np.where(inf, 0.0, w))])
    ci = np.concatenate([[0], np.cumsum(inf)])
    lo = np.searchsorted(pos, a, side="right")
    hi = np.maximum(np.searchsorted(pos, b, side="left"), lo)
    n = cw[hi] - cw[lo]
    return np.where(ci[hi] > ci[lo], math.inf, n)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function.

    ``values[0]`` applies on ``(-inf, breakpoints[0])``, ``values[i]`` on
    ``[breakpoints[i-1], breakpoints[i])`` and ``values[-1]`` beyond the last
    breakpoint.
    """

    breakpoints: tuple = ()
    values: tuple = (1.0,)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bp) + 1:
            raise ValueError("need exactly len(breakpoints) + 1 values")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not all(math.isfinite(b) for b in bp) or not all(math.isfinite(v) for v in vals):
            raise ValueError("breakpoints and values must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c: float) -> "StepFunction":
        return cls((), (c,))

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "StepFunction":
        return cls((a, b), (0.0, value, 0.0))

    def __call__(self, x):
        idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right")
        return np.asarray(self.values)[idx]

    def pieces(self):
        """``(left, right, value)`` triples covering the real line."""
        edges = (-math.inf,) + self.breakpoints + (math.inf,)
        return [(edges[i], edges[i + 1], v) for i, v in enumerate(self.values)]

    def integral(self, a: float, b: float) -> float:
        total = 0.0
        for lo, hi, v in self.pieces():
            lo, hi = max(lo, a), min(hi, b)
            if hi > lo:
                total += v * (hi - lo)
        return total

    @property
    def sup_abs(self) -> float:
        return max(abs(v) for v in self.values)

    def support(self) -> tuple:
        """Smallest closed interval outside which the function vanishes."""
        if self.values[0] != 0.0 or self.values[-1] != 0.0:
            return (-math.inf, math.inf)
        nz = [(lo, hi) for lo, hi, v in self.pieces() if v != 0.0]
        if not nz:
            return (0.0, 0.0)
        return (nz[0][0], nz[-1][1])


# --------------------------------------------------------------------------
# Initial data variants


@dataclass(frozen=True)
class FiniteSpin:
    mu: PointMeasure = field(default_factory=PointMeasure)
    variant = "finite_spin"

    def validate(self, theta: float) -> None:
        _check_theta(theta)

    def spin(self, theta, x, y):
        return theta_power(theta, self.mu.count(x, y))

    def breakpoints(self) -> np.ndarray:
        return self.mu.positions

    def atoms(self, theta):
        """Atom positions and their factors ``(-theta) ** weight``."""
        return self.mu.positions, theta_power(theta, self.mu.weights)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "atoms": [[p, m] for p, m in self.mu.atoms]}


@dataclass(frozen=True)
class Product:
    f: StepFunction = field(default_factory=lambda: StepFunction.constant(1.0))
    variant = "product"

    def __post_init__(self):
        if self.f.sup_abs > 1.0:
            raise ValueError("product data needs |f| <= 1")

    def validate(self, theta: float) -> None:
        _check_theta(theta)
        if theta != 1.0:
            raise ValueError("product data is only valid for theta = 1")

    def spin(self, theta, x, y):
        self.validate(theta)
        return self.f(x) * self.f(y)

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.f.breakpoints, dtype=float)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "breakpoints": list(self.f.breakpoints),
                "values": list(self.f.values)}


@dataclass(frozen=True)
class ClosedSetAvoid:
    """Avoidance of ``S = S_c | S_i``, isolated points weighted."""

    intervals: tuple = ()
    isolated: tuple = ()
    variant = "closed_set_avoid"

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for a, b in ivs:
            if not b > a:
                raise ValueError("intervals must be non-degenerate; use isolated points")
        if any(c <= b for (_, b), (c, _) in zip(ivs, ivs[1:])):
            raise ValueError("intervals must be disjoint")
        iso = []
        for p, w in sorted(self.isolated, key=lambda pw: float(pw[0])):
            w = INF_WEIGHT if (isinstance(w, str) and w == "inf") or w == math.inf else int(w)
            if w != INF_WEIGHT and w < 1:
                raise ValueError("isolated weights must be >= 1 or inf")
            p = float(p)
            if any(a <= p <= b for a, b in ivs):
                raise ValueError("isolated points must lie outside the intervals")
            iso.append((p, w))
        if any(b[0] <= a[0] for a, b in zip(iso, iso[1:])):
            raise ValueError("isolated points must be distinct")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "isolated", tuple(iso))

    def validate(self, theta: float) -> None:
        _check_theta(theta)
        if theta >= 1.0:
            raise ValueError("closed-set data is only valid for theta in [0, 1)")

    def spin(self, theta, x, y):
        self.validate(theta)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hit = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (x < b) & (y > a)
        pos = np.array([p for p, _ in self.isolated], dtype=float)
        w = np.array([w for _, w in self.isolated], dtype=float)
        val = theta_power(theta, _open_count(pos, w, x, y))
        return np.where(hit, 0.0, val)

    def breakpoints(self) -> np.ndarray:
        pts = [e for iv in self.intervals for e in iv] + [p for p, _ in self.isolated]
        return np.array(sorted(pts), dtype=float)

    def atoms(self, theta):
        pos = np.array([p for p, _ in self.isolated], dtype=float)
        return pos, theta_power(theta, [w for _, w in self.isolated])

    def to_dict(self) -> dict:
        iso = [[p, "inf" if w == INF_WEIGHT else w] for p, w in self.isolated]
        return {"variant": self.variant, "intervals": [list(iv) for iv in self.intervals],
                "isolated": iso}


@dataclass(frozen=True)
class Maximal:
    variant = "maximal"

    def validate(self, theta: float) -> None:
        _check_theta(theta)

    def spin(self, theta, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def to_dict(self) -> dict:
        return {"variant": self.variant}


InitialData = Union[FiniteSpin, Product, ClosedSetAvoid, Maximal]


def empty() -> FiniteSpin:
    return FiniteSpin(PointMeasure())


def finite(points: Sequence[float]) -> FiniteSpin:
    return FiniteSpin(PointMeasure.from_points(points))


def spin_eval(d: InitialData, theta: float, x, y):
    """Value of the spin/initial function ``d`` at ``x < y``."""
    d.validate(theta)
    if np.any(np.asarray(y) <= np.asarray(x)):
        raise ValueError("spin functions live on x < y")
    out = d.spin(theta, x, y)
    return float(out) if np.ndim(out) == 0 else out


def closed_form_atoms(d: InitialData, theta: float):
    """``(positions, factors)`` if ``d`` is a weighted atom spin, else ``None``."""
    if isinstance(d, FiniteSpin):
        return d.atoms(theta)
    if isinstance(d, ClosedSetAvoid) and not d.intervals:
        return d.atoms(theta)
    return None


# --------------------------------------------------------------------------
# Entrance-law arithmetic


def p_k(theta: float, k: int) -> float:
    """Probability that ``k`` co-located particles leave no survivor."""
    _check_theta(theta)
    if k < 0:
        raise ValueError("k must be non-negative")
    return float((theta + theta_power(theta, k)) / (1.0 + theta))


def mixture_initial_identity(theta: float, k: int, points: Sequence[float],
                             atol: float = 1e-12) -> bool:
    """Check the clustered-start identity on the products of pair spins.

    With ``f_j(x, y) = (-theta) ** (j * 1(x < 0 < y))`` this verifies
    ``prod f_k = p_k * prod f_0 + (1 - p_k) * prod f_1`` over the pairs
    ``(x1, x2), (x3, x4), ...``.
    """
    if not (0.0 <= theta < 1.0):
        raise ValueError("theta must lie in [0, 1)")
    if k < 2:
        raise ValueError("k must be at least 2")
    pts = np.asarray(points, dtype=float)
    if pts.size % 2 or pts.size == 0:
        raise ValueError("need a positive even number of points")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    straddle = (pts[0::2] < 0.0) & (pts[1::2] > 0.0)

    def prod(j):
        return float(np.prod(theta_power(theta, j * straddle.astype(float))))

    pk = p_k(theta, k)
    return abs(prod(k) - (pk * prod(0) + (1.0 - pk) * prod(1))) <= atol


# --------------------------------------------------------------------------
# One-point spins and the product approximation


def hat_spin(mu: PointMeasure, x, ref: float | None = None):
    """One-point spin ``(-1) ** mu(between ref and x)``.

    With ``ref=None`` the reference sits at ``-inf`` so that
    ``hat_spin(x) * hat_spin(y) = (-1) ** mu(x, y)`` off the atoms.  A finite
    ``ref`` reproduces the convention anchored at a point, which factorizes
    only when ``ref`` is not an atom.
    """
    pos, w = mu.positions, mu.weights
    x = np.asarray(x, dtype=float)
    if ref is None:
        n = _open_count(pos, w, -math.inf, x)
    else:
        n = np.where(x >= ref, _open_count(pos, w, ref, x), _open_count(pos, w, x, ref))
    out = np.where(n % 2 == 0, 1.0, -1.0)
    return float(out) if out.ndim == 0 else out


def approx_product(f: StepFunction, n: int, tol: float = 1e-12) -> PointMeasure:
    """Sign-change points of the block-wise +-1 approximation of ``f``.

    On each block ``[k/n, (k+1)/n)``, ``k = -n^2 .. n^2 - 1``, the
    approximation is ``+1`` up to a cut point and ``-1`` after it, the cut
    chosen so the block integrals agree; outside ``[-n, n)`` it is ``+1``.
    The returned simple measure satisfies
    ``hat_spin(mu, x) = f_n(x)`` for almost every ``x``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ks = np.arange(-n * n, n * n)
    # scaled coordinate u = n x: block k is [k, k+1)
    scaled = np.zeros(ks.size)
    for lo, hi, v in f.pieces():
        if v == 0.0:
            continue
        a = np.clip(lo * n, ks, ks + 1)
        b = np.clip(hi * n, ks, ks + 1)
        scaled += v * (b - a)
    cut = np.clip(ks + 0.5 * (1.0 + scaled), ks, ks + 1)
    # segments (start, value) in scaled units, then sign changes
    starts, vals = [], []
    plus = cut - ks > tol
    minus = ks + 1 - cut > tol
    for k, c, p, m in zip(ks, cut, plus, minus):
        if p:
            starts.append(float(k))
            vals.append(1.0)
        if m:
            starts.append(float(c) if p else float(k))
            vals.append(-1.0)
    starts.append(float(n * n))
    vals.append(1.0)
    changes = []
    prev = 1.0
    for s, v in zip(starts, vals):
        if v != prev:
            changes.append(s / n)
            prev = v
    return PointMeasure(tuple((c, 1) for c in changes))


def step_pairing(mu: PointMeasure, f: StepFunction, phi_mass: Callable[[float, float], float],
                 sign: float = 1.0) -> float:
    """``( sign * hat_spin(mu) - f , phi )`` computed piecewise exactly.

    ``phi_mass(a, b)`` must return the integral of the test function over
    ``[a, b]``.
    """
    edges = np.union1d(mu.positions, np.asarray(f.breakpoints, dtype=float))
    edges = np.concatenate([[-math.inf], edges, [math.inf]])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isfinite(a) and math.isfinite(b):
            mid = 0.5 * (a + b)
        elif math.isfinite(b):
            mid = b - 1.0
        elif math.isfinite(a):
            mid = a + 1.0
        else:
            mid = 0.0
        diff = sign * hat_spin(mu, mid) - float(f(mid))
        if diff != 0.0:
            total += diff * phi_mass(a, b)
    return total


# --------------------------------------------------------------------------
# JSON


def to_json(d: InitialData) -> str:
    return json.dumps(d.to_dict(), sort_keys=True)


def from_dict(obj: dict) -> InitialData:
    variant = obj.get("variant")
    if variant == "finite_spin":
        return FiniteSpin(PointMeasure(tuple(tuple(a) for a in obj.get("atoms", ()))))
    if variant == "empty":
        return empty()
    if variant == "product":
        return Product(StepFunction(tuple(obj["breakpoints"]), tuple(obj["values"])))
    if variant == "closed_set_avoid":
        return ClosedSetAvoid(tuple(tuple(iv) for iv in obj.get("intervals", ())),
                              tuple(tuple(p) for p in obj.get("isolated", ())))
    if variant == "maximal":
        return Maximal()
    raise ValueError(f"unknown initial-data variant {variant!r}")


def from_json(text: str) -> InitialData:
    return from_dict(json.loads(text))


def parse_descriptor(spec: str) -> InitialData:
    """CLI descriptor: ``maximal``, ``empty``, ``points:-1,0,2``, inline JSON or a path."""
    spec = spec.strip()
    if spec == "maximal":
        return Maximal()
    if spec == "empty":
        return empty()
    if spec.startswith("points:"):
        body = spec[len("points:"):]
        return finite([float(v) for v in body.split(",") if v.strip()])
    if spec.startswith("{"):
        return from_json(spec)
    with open(spec) as fh:
        return from_json(fh.read())
