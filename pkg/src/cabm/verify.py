"""Analytic-versus-Monte-Carlo comparisons.

Every check returns a :class:`CheckReport` that records its inputs, the
analytic value, the Monte Carlo estimate and the tolerance rule
``|analytic - mc| <= z * stderr + bias``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from . import data as D
from . import kernel as Kmod
from . import pfaffian as P
from . import sim as S

SCHEMA_VERSION = 1
CSV_FIELDS = ("check", "param_hash", "analytic", "mc_mean", "mc_stderr", "tolerance", "pass")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return v


def param_hash(inputs: dict) -> str:
    blob = json.dumps(_jsonable(inputs), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class CheckReport:
    check: str
    analytic: float
    mc: S.MCEstimate | None
    z: float
    bias: float
    passed: bool
    inputs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def discrepancy(self) -> float:
        return abs(self.analytic - self.mc.mean) if self.mc is not None else 0.0

    @property
    def tolerance(self) -> float:
        se = self.mc.stderr if self.mc is not None else 0.0
        return self.z * se + self.bias

    @property
    def param_hash(self) -> str:
        return param_hash({"check": self.check, **self.inputs})

    def to_dict(self) -> dict:
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "check": self.check,
            "param_hash": self.param_hash,
            "analytic": self.analytic,
            "mc": None if self.mc is None else self.mc.to_dict(),
            "discrepancy": self.discrepancy,
            "z": self.z,
            "bias": self.bias,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "inputs": self.inputs,
            "details": self.details,
        })

    def csv_row(self) -> tuple:
        mean = "" if self.mc is None else S.fmt12(self.mc.mean)
        se = "" if self.mc is None else S.fmt12(self.mc.stderr)
        return (self.check, self.param_hash, S.fmt12(self.analytic), mean, se,
                S.fmt12(self.tolerance), "true" if self.passed else "false")


def compare(check: str, analytic: float, mc: S.MCEstimate, z: float, bias: float,
            inputs: dict, details: dict | None = None, valid: bool = True) -> CheckReport:
    ok = valid and abs(analytic - mc.mean) <= z * mc.stderr + bias
    return CheckReport(check, float(analytic), mc, z, bias, bool(ok), inputs, details or {})


def reports_json(reports: Sequence[CheckReport], **extra) -> str:
    body = {"schema_version": SCHEMA_VERSION, **_jsonable(extra),
            "reports": [r.to_dict() for r in reports]}
    return json.dumps(body, sort_keys=True, indent=2)


def reports_csv(reports: Sequence[CheckReport]) -> str:
    s = io.StringIO()
    w = csv.writer(s, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow(r.csv_row())
    return s.getvalue()


# ---------------------------------------------------------------------------
# Realizing initial data as particle configurations


@dataclass(frozen=True)
class Realization:
    config: S.PointConfig
    dt_min: float | None
    note: str


def _cluster_size(weight, theta: float) -> int:
    if weight != D.INF_WEIGHT:
        return int(weight)
    if theta == 0.0:
        return 1
    # p_k approaches its limit like theta ** k
    return int(min(40, max(2, math.ceil(math.log(1e-6) / math.log(theta)))))


def _clusters(pos, weights, eps):
    out = []
    for p, w in zip(pos, weights):
        out.extend(p + eps * (np.arange(w) - 0.5 * (w - 1)))
    return np.array(sorted(out), dtype=float)


def realize_initial(f, theta: float, t: float, window: tuple = (0.0, 0.0), *,
                    spacing: float = 4e-3, eps: float = 1e-3, reach: float = 6.0,
                    n_approx: int = 40) -> Realization:
    """Finite configuration whose dynamics approximate data ``f``.

    Dense pieces (maximal data, closed intervals) become grids of ``spacing``
    over ``window`` widened by ``reach`` diffusion lengths; atoms of weight
    ``w`` become clusters of ``w`` particles ``eps`` apart; product data uses
    the sign-change points of ``approx_product``.
    """
    f.validate(theta)
    if isinstance(f, D.FiniteSpin):
        pos, w = f.mu.positions, f.mu.weights.astype(int)
        if np.all(w == 1):
            return Realization(S.PointConfig(tuple(pos)), None, "atoms")
        return Realization(S.PointConfig(tuple(_clusters(pos, w, eps))), S.warmup_dt(eps),
                           f"atom clusters, eps={eps}")
    if isinstance(f, D.Product):
        mu = D.approx_product(f.f, n_approx)
        return Realization(S.PointConfig(tuple(mu.positions)), None,
                           f"approx_product n={n_approx}")
    L = reach * math.sqrt(2.0 * t)
    if isinstance(f, D.Maximal):
        lo, hi = window[0] - L, window[1] + L
        grid = lo + spacing * np.arange(int(math.floor((hi - lo) / spacing)) + 1)
        return Realization(S.PointConfig(tuple(grid)), S.warmup_dt(spacing),
                           f"grid spacing={spacing} on [{lo:.6g}, {hi:.6g}]")
    if isinstance(f, D.ClosedSetAvoid):
        pts = []
        for a, b in f.intervals:
            n = max(1, int(math.ceil((b - a) / spacing)))
            pts.extend(np.linspace(a, b, n + 1))
        iso = [(p, _cluster_size(w, theta)) for p, w in f.isolated]
        if iso:
            pts.extend(_clusters([p for p, _ in iso], [k for _, k in iso], eps))
        dmin = None
        if f.intervals or any(k > 1 for _, k in iso):
            dmin = S.warmup_dt(min(spacing, eps))
        return Realization(S.PointConfig(tuple(sorted(pts))), dmin, "intervals as grids")
    raise TypeError(f"cannot realize {type(f).__name__}")


def _sim_for(real: Realization, sc: S.SimConfig, theta: float, t: float) -> S.SimConfig:
    kw = {"theta": theta, "t_end": t}
    if real.dt_min is not None and sc.dt_min is None:
        kw["dt_min"] = min(real.dt_min, sc.dt)
    return sc.replace(**kw)


def _sim_inputs(sc: S.SimConfig, reps: int) -> dict:
    return {"dt": sc.dt, "dt_min": sc.dt_min, "ramp": sc.ramp, "seed": sc.seed, "reps": reps}


# ---------------------------------------------------------------------------
# Duality


def duality_value(f, theta: float, t: float, points, method: str = "auto"):
    """``pf`` of the duality matrix and whether every kernel value converged."""
    pts = np.asarray(points, dtype=float)
    conv = True
    errs = []

    def K(tt, x, y):
        nonlocal conv
        ev = Kmod.kernel_eval(f, theta, tt, x, y, method=method)
        conv = conv and ev.converged
        errs.append(ev.quad_error)
        return ev.K

    pf = P.pfaffian(P.assemble_duality_matrix(pts, K, t))
    return pf, conv, max(errs)


def duality_check(f, theta: float, t: float, points, sc: S.SimConfig,
                  reps: int | None = None, z: float = 3.0, bias: float = 0.01,
                  realization: Realization | None = None, batch: S.SampleBatch | None = None
                  ) -> CheckReport:
    """Pfaffian of ``K_t`` at ``points`` against the simulated spin statistic."""
    pts = np.asarray(points, dtype=float)
    if pts.size < 2 or pts.size % 2:
        raise ValueError("need an even, non-zero number of points")
    analytic, conv, qerr = duality_value(f, theta, t, pts)
    real = realization or realize_initial(f, theta, t, (pts[0], pts[-1]))
    reps = sc.reps if reps is None else reps
    scr = _sim_for(real, sc, theta, t)
    if batch is None:
        batch = S.simulate_batch(real.config, scr, reps)
    mc = S.MCEstimate.from_samples(S.dual_statistic(batch, theta, pts), scr.seed)
    inputs = {"data": f.to_dict(), "theta": theta, "t": t, "points": pts,
              **_sim_inputs(scr, len(batch))}
    details = {"quadrature_converged": conv, "quad_error": qerr, "realization": real.note}
    return compare(f"duality_n{pts.size // 2}", analytic, mc, z, bias, inputs, details, valid=conv)


# ---------------------------------------------------------------------------
# Intensities


def rho1(f, theta: float, t: float, x) -> np.ndarray:
    """One-point intensity ``DxK(x, x) / (1 + theta)``."""
    x = np.asarray(x, dtype=float)
    return Kmod.kernel_arrays(f, theta, t, x, x)[1] / (1.0 + theta)


def rho_n(f, theta: float, t: float, X) -> np.ndarray:
    """n-point intensities at the rows of ``X`` (shape ``(B, n)``), any order."""
    X = np.sort(np.atleast_2d(np.asarray(X, dtype=float)), axis=1)
    B, n = X.shape
    iu, ju = np.triu_indices(n, 1)
    arrs = [np.zeros((B, n, n)) for _ in range(4)]
    if iu.size:
        for a, v in zip(arrs, Kmod.kernel_arrays(f, theta, t, X[:, iu], X[:, ju])):
            a[:, iu, ju] = v
    d = np.arange(n)
    arrs[1][:, d, d] = Kmod.kernel_arrays(f, theta, t, X, X)[1]
    K, DxK, DyK, DxyK = arrs
    return P.pfaffian_batch(P.intensity_stack(X, K, DxK, DyK, DxyK, theta))


def pair_correlation_ratio(f, theta: float, t: float, x1: float, x2: float) -> float:
    r2 = rho_n(f, theta, t, [[x1, x2]])[0]
    r1 = rho1(f, theta, t, np.array([x1, x2]))
    return float(r2 / (r1[0] * r1[1]))


def _gl(a, b, m):
    u, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * (u + 1.0) + a, 0.5 * (b - a) * w


def _bin_avg_rho1(f, theta, t, edges, m=8):
    out = np.empty(edges.size - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        x, w = _gl(a, b, m)
        out[i] = np.dot(w, rho1(f, theta, t, x)) / (b - a)
    return out


def _bin_avg_rho2(f, theta, t, ea, eb, m=6):
    xa, wa = _gl(ea[0], ea[1], m)
    xb, wb = _gl(eb[0], eb[1], m)
    X = np.stack(np.meshgrid(xa, xb, indexing="ij"), axis=-1).reshape(-1, 2)
    W = np.outer(wa, wb).ravel()
    return float(np.dot(W, rho_n(f, theta, t, X)) / ((ea[1] - ea[0]) * (eb[1] - eb[0])))


def intensity_check(f, theta: float, t: float, bins, sc: S.SimConfig,
                    reps: int | None = None, pairs: Sequence = (), z: float = 3.0,
                    rel_bias: float = 0.02, abs_bias: float = 0.0,
                    realization: Realization | None = None) -> CheckReport:
    """Bin-averaged intensities against histograms; passes if every bin does.

    ``pairs`` lists ``(i, j)`` bin indices for two-point comparisons.  The
    allowance per bin is ``z * stderr + rel_bias * analytic + abs_bias``.
    """
    edges = np.asarray(bins, dtype=float)
    real = realization or realize_initial(f, theta, t, (edges[0], edges[-1]))
    reps = sc.reps if reps is None else reps
    scr = _sim_for(real, sc, theta, t)
    batch = S.simulate_batch(real.config, scr, reps)
    h = S.empirical_intensity(batch, edges)
    a1 = _bin_avg_rho1(f, theta, t, edges)
    tol1 = z * h.stderr + rel_bias * np.abs(a1) + abs_bias
    ok1 = np.abs(a1 - h.density) <= tol1
    rows = [("rho1", i, a1[i], h.density[i], h.stderr[i], tol1[i], ok1[i]) for i in range(a1.size)]
    if pairs:
        ph = S.empirical_pair_intensity(batch, edges)
        for i, j in pairs:
            a2 = _bin_avg_rho2(f, theta, t, edges[i:i + 2], edges[j:j + 2])
            tol = z * ph.stderr[i, j] + rel_bias * abs(a2) + abs_bias
            rows.append(("rho2", (i, j), a2, ph.density[i, j], ph.stderr[i, j], tol,
                         abs(a2 - ph.density[i, j]) <= tol))
    worst = max(rows, key=lambda r: abs(r[2] - r[3]) / r[5] if r[5] > 0 else
                (math.inf if r[2] != r[3] else 0.0))
    passed = all(bool(r[6]) for r in rows)
    mc = S.MCEstimate(float(worst[3]), float(worst[4]), len(batch), scr.seed)
    inputs = {"data": f.to_dict(), "theta": theta, "t": t, "bins": edges, "pairs": list(pairs),
              **_sim_inputs(scr, len(batch))}
    details = {"realization": real.note, "worst": {"kind": worst[0], "bin": worst[1]},
               "bins": [{"kind": r[0], "bin": r[1], "analytic": r[2], "mc_mean": r[3],
                         "mc_stderr": r[4], "tolerance": r[5], "pass": bool(r[6])} for r in rows]}
    # the summary tolerance is the worst bin's own allowance
    rep = CheckReport("intensity", float(worst[2]), mc, z,
                      float(worst[5] - z * worst[4]), passed, inputs, details)
    return rep


# ---------------------------------------------------------------------------
# Fredholm series for Laplace functionals


@dataclass
class FredholmResult:
    value: float
    partial_sums: list
    terms: list
    bounds: list
    tail_bound: float
    k_max: int
    converged: bool
    tol: float
    nodes: list
    kernel_sup: float

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _simplex_rule(n: int, a: float, b: float, m: int):
    """Nodes (ascending rows) and weights on ``{a < x_1 < ... < x_n < b}``."""
    u, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    pts = (a + (b - a) * u)[:, None]
    wts = (b - a) * w
    for _ in range(n - 1):
        top = pts[:, 0]
        newx = a + (top[:, None] - a) * u[None, :]
        neww = wts[:, None] * (top[:, None] - a) * w[None, :]
        pts = np.concatenate([newx.reshape(-1, 1), np.repeat(pts, m, axis=0)], axis=1)
        wts = neww.ravel()
    return pts, wts


def _compositions(k: int, c: int):
    for bars in itertools.combinations(range(k + c - 1), c - 1):
        prev, out = -1, []
        for b in bars + (k + c - 1,):
            out.append(b - prev - 1)
            prev = b
        yield tuple(out)


def _kernel_sup(f, theta, t, lo, hi, n=241):
    """Grid maxima of ``|K|`` and of the scaled derivative entries."""
    x = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    iu = np.triu_indices(n)
    K, DxK, DyK, DxyK = Kmod.kernel_arrays(f, theta, t, X[iu], Y[iu])
    c = 1.0 / (1.0 + theta)
    d = c * max(np.max(np.abs(DxK)), np.max(np.abs(DyK)), np.max(np.abs(DxyK)))
    return float(np.max(np.abs(K))), float(d)


def _tail(k: int, C: float) -> float:
    """``sum_{j > k} C^j (2j)^(j/2) / j!``."""
    if C <= 0:
        return 0.0
    total, j = 0.0, k + 1
    while True:
        lb = j * math.log(C) + 0.5 * j * math.log(2.0 * j) - math.lgamma(j + 1)
        term = math.exp(lb)
        total += term
        if j > k + 5 and term < 1e-18 * max(total, 1e-300):
            return total
        j += 1


def laplace_fredholm(f, theta: float, t: float, phi: D.StepFunction, tol: float = 1e-6,
                     k_max: int = 12, budget: int = 200_000, m_max: int = 48,
                     sup_margin: float = 1.02) -> FredholmResult:
    """``E[prod_i (1 - phi(x_i))]`` as an alternating series of intensity integrals.

    Order ``k`` integrates ``prod phi * rho_k`` over ordered tuples in the
    support of ``phi`` with a collapsed Gauss-Legendre rule.  Summation stops
    once the Hadamard majorant of the remaining orders drops below ``tol``.
    ``kernel_sup`` is a grid maximum of the kernel entries inflated by
    ``sup_margin``.
    """
    S._check_phi(phi)
    f.validate(theta)
    if not t > 0:
        raise ValueError("t must be positive")
    cells = [(lo, hi, v) for lo, hi, v in phi.pieces() if v != 0.0]
    mass = sum((hi - lo) * v for lo, hi, v in cells)
    if not cells:
        return FredholmResult(1.0, [1.0], [], [], 0.0, 0, True, tol, [], 0.0)
    lo, hi = cells[0][0], cells[-1][1]
    ksup, dsup = _kernel_sup(f, theta, t, lo, hi)
    if dsup == 0.0:
        # derivative entries vanish, so every intensity matrix has a zero row
        return FredholmResult(1.0, [1.0], [], [], 0.0, 0, True, tol, [], ksup)
    M = sup_margin * max(ksup, dsup)
    C = mass * M
    total, partial, terms, bounds, nodes = 1.0, [1.0], [], [], []
    k = 0
    tail = _tail(0, C)
    while tail >= tol and k < k_max:
        k += 1
        comps = list(_compositions(k, len(cells)))
        bound = math.exp(k * math.log(C) + 0.5 * k * math.log(2.0 * k) - math.lgamma(k + 1))
        # |term| <= bound, so negligible orders get the cheapest rule
        kb = budget if bound >= 1e-3 * tol else 1
        m = int(min(m_max, max(2, math.floor((kb / len(comps)) ** (1.0 / k)))))
        term, used = 0.0, 0
        for comp in comps:
            parts, weight = [], 1.0
            for (a, b, v), nc in zip(cells, comp):
                if nc:
                    parts.append(_simplex_rule(nc, a, b, m))
                    weight *= v ** nc
            X, W = parts[0]
            for Xp, Wp in parts[1:]:
                X = np.concatenate([np.repeat(X, Xp.shape[0], axis=0),
                                    np.tile(Xp, (len(W), 1))], axis=1)
                W = np.repeat(W, Wp.size) * np.tile(Wp, len(W))
            used += W.size
            acc = 0.0
            step = max(1, 400_000 // (k * k))
            for s in range(0, W.size, step):
                acc += float(np.dot(W[s:s + step], rho_n(f, theta, t, X[s:s + step])))
            term += weight * acc
        term *= (-1) ** k
        total += term
        terms.append(term)
        partial.append(total)
        bounds.append(bound)
        nodes.append(used)
        tail = _tail(k, C)
    return FredholmResult(total, partial, terms, bounds, tail, k, tail < tol, tol, nodes, M)


def laplace_check(f, theta: float, t: float, phi: D.StepFunction, sc: S.SimConfig,
                  reps: int | None = None, tol: float = 1e-6, z: float = 3.0,
                  bias: float = 0.01, realization: Realization | None = None) -> CheckReport:
    fr = laplace_fredholm(f, theta, t, phi, tol=tol)
    lo, hi = phi.support()
    real = realization or realize_initial(f, theta, t, (lo, hi))
    reps = sc.reps if reps is None else reps
    scr = _sim_for(real, sc, theta, t)
    batch = S.simulate_batch(real.config, scr, reps)
    mc = S.MCEstimate.from_samples(S.laplace_statistic(batch, phi), scr.seed)
    inputs = {"data": f.to_dict(), "theta": theta, "t": t,
              "phi": {"breakpoints": list(phi.breakpoints), "values": list(phi.values)},
              "tol": tol, **_sim_inputs(scr, len(batch))}
    details = {"fredholm": fr.to_dict(), "realization": real.note}
    return compare("laplace", fr.value, mc, z, bias, inputs, details, valid=fr.converged)


# ---------------------------------------------------------------------------
# Clustered starts


DEFAULT_BATTERY = ((0.3, -0.5, 0.4), (1.0, -1.0, 1.0), (0.1, 0.05, 0.3), (2.0, -2.0, 0.5))


def kernel_linearity(theta: float, k: int, battery=DEFAULT_BATTERY, atom: float = 0.0,
                     q: Kmod.QuadratureSpec | None = None):
    """Max gap between ``K`` for a weight-``k`` atom and the ``p_k`` mixture, by quadrature."""
    fk = D.FiniteSpin(D.PointMeasure(((atom, k),)))
    f1 = D.FiniteSpin(D.PointMeasure(((atom, 1),)))
    f0 = D.empty()
    pk = D.p_k(theta, k)
    gaps = []
    for t, x, y in battery:
        lhs = Kmod.quadrature_eval(fk, theta, t, x, y, q)
        r0 = Kmod.quadrature_eval(f0, theta, t, x, y, q)
        r1 = Kmod.quadrature_eval(f1, theta, t, x, y, q)
        for name in ("K", "DxK", "DyK", "DxyK"):
            rhs = pk * getattr(r0, name) + (1.0 - pk) * getattr(r1, name)
            gaps.append(abs(getattr(lhs, name) - rhs))
    return max(gaps)


def mixture_check(theta: float, k: int, t: float, points, sc: S.SimConfig,
                  reps: int | None = None, eps: float = 1e-3, kernel_tol: float = 1e-8,
                  survivor_bias: float = 0.02, duality_bias: float = 0.01, z: float = 3.0,
                  battery=DEFAULT_BATTERY) -> list:
    """Three reports: kernel linearity, survivor law, clustered-start duality."""
    if k < 2:
        raise ValueError("k must be >= 2")
    D._check_theta(theta)
    reps = sc.reps if reps is None else reps
    pk = D.p_k(theta, k)
    base = {"theta": theta, "k": k, "t": t}
    reports = []

    gap = kernel_linearity(theta, k, battery)
    reports.append(CheckReport("mixture_kernel", pk, None, 0.0, kernel_tol, gap <= kernel_tol,
                               {**base, "battery": battery},
                               {"max_gap": gap, "p_k": pk}))

    p0, p1 = S.survivor_distribution(k, theta, eps, t, sc, reps)
    h0, h1 = S.survivor_distribution(k, theta, eps / 2, t, sc, reps)
    dsc = sc.replace(theta=theta, t_end=t, dt_min=min(S.warmup_dt(eps), sc.dt))
    reports.append(compare(
        "mixture_survivors", pk, p0, z, survivor_bias,
        {**base, "eps": eps, **_sim_inputs(dsc, reps)},
        {"P1": p1.to_dict(), "P0+P1": p0.mean + p1.mean,
         "eps_half": {"eps": eps / 2, "P0": h0.to_dict(), "P1": h1.to_dict(),
                      "shift": h0.mean - p0.mean}}))

    pts = np.asarray(points, dtype=float)
    one = D.finite([0.0])
    v1, conv, _ = duality_value(one, theta, t, pts)
    v0 = 1.0
    analytic = pk * v0 + (1.0 - pk) * v1
    batch = S.simulate_batch(S.cluster(k, eps, origin=-0.5 * eps * (k - 1)), dsc, reps)
    mc = S.MCEstimate.from_samples(S.dual_statistic(batch, theta, pts), dsc.seed)
    reports.append(compare("mixture_duality", analytic, mc, z, duality_bias,
                           {**base, "eps": eps, "points": pts, **_sim_inputs(dsc, reps)},
                           {"pf_empty": v0, "pf_single": v1}, valid=conv))
    return reports


# ---------------------------------------------------------------------------
# Approximation of product data by spins


def gaussian_phi(center: float = 0.0, width: float = 1.0):
    """Mass function of ``exp(-((x - center) / width)^2)`` and ``sup |phi'|``."""
    c = 0.5 * math.sqrt(math.pi) * width

    def mass(a, b):
        ea = -1.0 if a == -math.inf else erf((a - center) / width)
        eb = 1.0 if b == math.inf else erf((b - center) / width)
        return c * (eb - ea)

    return mass, math.sqrt(2.0 / math.e) / width


def approx_errors(f: D.StepFunction, ns=(10, 20, 40, 80), phi_mass=None):
    """``min over signs |(sign * s_hat(mu_n) - f, phi)|`` for each ``n`` and the log-log slope."""
    phi_mass = phi_mass or gaussian_phi()[0]
    errs = []
    for n in ns:
        mu = D.approx_product(f, n)
        e = min(abs(D.step_pairing(mu, f, phi_mass, s)) for s in (1.0, -1.0))
        errs.append(e)
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0]) if all(e > 0 for e in errs) \
        else -math.inf
    return errs, slope
