"""The seven acceptance criteria as runnable checks.

``run_all(quick=True)`` shrinks replicate counts and batteries so the whole
suite finishes in well under a minute; the full mode uses the stated sizes
and also enforces the stated runtime budgets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from . import data as D
from . import kernel as Kmod
from . import pfaffian as P
from . import sim as S
from . import verify as V


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float | None
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number}. {self.name}: {self.summary} ({self.runtime:.1f}s)"

    def to_dict(self) -> dict:
        return V._jsonable({"number": self.number, "name": self.name, "pass": self.passed,
                            "runtime": self.runtime, "budget": self.budget,
                            "summary": self.summary, "details": self.details})


def _finish(number, name, t0, ok, summary, details, budget, quick):
    rt = time.perf_counter() - t0
    in_budget = budget is None or quick or rt < budget
    details = {**details, "runtime_within_budget": in_budget}
    return CriterionResult(number, name, bool(ok and in_budget), rt, budget, summary, details)


def _random_skew(rng, n):
    a = rng.standard_normal((n, n))
    return a - a.T


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def criterion_pfaffian(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng([seed, 1])
    count = 100 if quick else 500
    worst_det = 0.0
    for _ in range(count):
        n = 2 * int(rng.integers(1, 11))
        a = _random_skew(rng, n)
        pf = P.pfaffian(a)
        sign, logdet = np.linalg.slogdet(a)
        worst_det = max(worst_det, abs(math.expm1(2 * math.log(abs(pf)) - logdet)) if pf else 1.0)
    worst_bf = 0.0
    for n in range(2, 13, 2):
        for _ in range(4 if quick else 10):
            a = _random_skew(rng, n)
            worst_bf = max(worst_bf, _rel(P.pfaffian(a), P.pfaffian_bruteforce(a)))
    # coincident points in a duality matrix drop out as a pair
    worst_red = 0.0
    f = D.finite([-1.0, 0.0, 2.0])
    K = Kmod.scalar_kernel(f, 0.5)
    for _ in range(10 if quick else 40):
        n = 2 * int(rng.integers(2, 6))
        x = np.sort(rng.uniform(-3, 3, n - 1))
        j = int(rng.integers(0, n - 1))
        pts = np.insert(x, j, x[j])
        a = np.zeros((n, n))
        for i in range(n):
            for k in range(i + 1, n):
                a[i, k] = K(0.7, pts[i], pts[k])
        keep = [i for i in range(n) if i not in (j, j + 1)]
        full = P.pfaffian(a)
        minor = P.pfaffian(a[np.ix_(keep, keep)]) if keep else 1.0
        worst_red = max(worst_red, abs(full - minor) / max(abs(minor), 1e-12))
    ok = worst_det <= 1e-9 and worst_bf <= 1e-10 and worst_red <= 1e-9
    summary = f"pf^2/det {worst_det:.1e}, brute force {worst_bf:.1e}, reduction {worst_red:.1e}"
    return _finish(1, "Pfaffian suite", t0, ok, summary,
                   {"det_rel": worst_det, "bruteforce_rel": worst_bf, "reduction_rel": worst_red,
                    "matrices": count}, 10.0, quick)


KERNEL_DATA = (
    ("maximal", D.Maximal(), 0.0),
    ("finite", D.finite([-1.0, 0.0, 2.0]), 0.5),
    ("weighted", D.FiniteSpin(D.PointMeasure(((-0.5, 2), (0.7, 1)))), 0.3),
    ("finite_annihilating", D.finite([-1.0, 0.0, 2.0]), 1.0),
)


def criterion_kernel(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng([seed, 2])
    diag, bound, resid, decay, agree = 0.0, 0.0, 0.0, math.inf, 0.0
    extra = [("closed_set", D.ClosedSetAvoid(((-0.4, 0.1),), ((1.0, 2),)), 0.5),
             ("product", D.Product(D.StepFunction([-0.5, 0.5], [1.0, 0.2, -0.6])), 1.0)]
    for name, f, th in KERNEL_DATA + tuple(extra):
        closed = Kmod.has_closed_form(f)
        npts = (6 if quick else 20) if closed else 3
        for _ in range(npts):
            t = float(rng.uniform(0.1, 2.0))
            x = float(rng.uniform(-2, 2))
            y = x + float(rng.uniform(0.05, 3))
            diag = max(diag, abs(Kmod.kernel_eval(f, th, t, x, x).K - 1.0))
            bound = max(bound, abs(Kmod.kernel_eval(f, th, t, x, y).K) - 1.0)
            if closed:
                fast = Kmod.kernel_eval(f, th, t, x, y)
                slow = Kmod.quadrature_eval(f, th, t, x, y)
                agree = max(agree, *(abs(getattr(fast, c) - getattr(slow, c))
                                     for c in ("K", "DxK", "DyK", "DxyK")))
        t, x, y = 0.8, -0.4, 0.9
        h = 1e-2
        r1 = Kmod.heat_residual(f, th, t, x, y, h)
        r2 = Kmod.heat_residual(f, th, t, x, y, h / 2)
        resid = max(resid, r1, r2)
        if r1 > 1e-9:
            decay = min(decay, r1 / max(r2, 1e-300))
    ref = Kmod.kernel_eval(D.empty(), 0.0, 1.0, -1.0, 1.0)
    mx_closed = Kmod.kernel_eval(D.Maximal(), 0.0, 1.0, -1.0, 1.0).K
    mx_quad = Kmod.quadrature_eval(D.Maximal(), 0.0, 1.0, -1.0, 1.0).K
    erfc_ref = float(erfc(2.0 / math.sqrt(8.0)))
    val_ok = abs(mx_closed - erfc_ref) < 1e-12 and abs(mx_quad - erfc_ref) < 1e-6
    ok = (diag <= 1e-9 and bound <= 1e-8 and resid <= 1e-4 and decay > 3.0
          and agree <= 1e-6 and val_ok and ref.K == 1.0)
    summary = (f"diag {diag:.1e}, max|K|-1 {bound:.1e}, residual {resid:.1e} "
               f"(h-halving ratio {decay:.2f}), closed vs quadrature {agree:.1e}, "
               f"K(-1,1;t=1)={mx_quad:.6f}")
    return _finish(2, "Kernel suite", t0, ok, summary,
                   {"diag_err": diag, "bound_excess": bound, "heat_residual": resid,
                    "richardson_ratio": decay, "closed_vs_quad": agree,
                    "maximal_value_quadrature": mx_quad, "maximal_value_closed": mx_closed},
                   60.0, quick)


DUALITY_N1 = ((-0.5, 0.5), (0.3, 1.7), (-2.0, -0.2))
DUALITY_N2 = ((-1.5, -0.5, 0.2, 1.0), (-0.8, 0.1, 0.6, 2.5))


def criterion_duality(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    reps = 20_000 if quick else 100_000
    f = D.finite([-1.0, 0.0, 2.0])
    sc = S.SimConfig(theta=0.0, t_end=0.5, dt=1e-3, seed=seed)
    reports = []
    for th in (0.0, 0.5, 1.0):
        scr = sc.replace(theta=th)
        real = V.realize_initial(f, th, 0.5)
        batch = S.simulate_batch(real.config, scr, reps)
        for pts in DUALITY_N1 + DUALITY_N2:
            reports.append(V.duality_check(f, th, 0.5, pts, scr, realization=real, batch=batch))
    ok = all(r.passed for r in reports)
    worst = max(reports, key=lambda r: r.discrepancy / r.tolerance)
    summary = (f"{sum(r.passed for r in reports)}/{len(reports)} within 3*stderr+0.01, "
               f"worst {worst.discrepancy:.4f} vs {worst.tolerance:.4f}")
    return _finish(3, "Duality", t0, ok, summary,
                   {"reports": [r.to_dict() for r in reports]}, 300.0, quick)


SURVIVOR_CASES = ((0.5, 2), (0.5, 3), (1.0, 2), (0.0, 4))


def criterion_mixture(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    thetas = (0.5,) if quick else (0.0, 0.25, 0.5, 0.9)
    ks = (2, 3) if quick else (2, 3, 4, 5, 6)
    gaps = {f"{th},{k}": V.kernel_linearity(th, k) for th in thetas for k in ks}
    lin_ok = max(gaps.values()) <= 1e-8
    reps = 20_000 if quick else 100_000
    sc = S.SimConfig(theta=0.0, t_end=0.1, dt=1e-3, seed=seed)
    surv, surv_ok = [], True
    for th, k in SURVIVOR_CASES:
        pk = D.p_k(th, k)
        p0, p1 = S.survivor_distribution(k, th, 1e-3, 0.1, sc, reps)
        h0, _ = S.survivor_distribution(k, th, 5e-4, 0.1, sc, reps)
        ok = abs(p0.mean - pk) <= 3 * p0.stderr + 0.02
        surv_ok &= ok
        surv.append({"theta": th, "k": k, "p_k": pk, "P0": p0.to_dict(), "P1": p1.to_dict(),
                     "P0_eps_half": h0.to_dict(), "eps_shift": h0.mean - p0.mean, "pass": ok})
    worst = max(abs(s["P0"]["mean"] - s["p_k"]) for s in surv)
    summary = (f"kernel linearity {max(gaps.values()):.1e}, survivor |P0-p_k| <= {worst:.4f}")
    return _finish(4, "Mixture identities", t0, lin_ok and surv_ok, summary,
                   {"linearity": gaps, "survivors": surv}, 300.0, quick)


def criterion_fredholm(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    t, a, b = 0.5, -0.15, 0.15
    phi = D.StepFunction([a, b], [0.0, 1.0 - 1e-6, 0.0])
    f = D.Maximal()
    fr = V.laplace_fredholm(f, 0.0, t, phi, tol=1e-6)
    exact = Kmod.kernel_eval(f, 0.0, t, a, b).K
    sc = S.SimConfig(theta=0.0, t_end=t, dt=1e-3, seed=seed)
    rep = V.laplace_check(f, 0.0, t, phi, sc, reps=2_000 if quick else 10_000, tol=1e-6)
    series_ok = abs(fr.value - exact) <= 1e-3
    majorant_ok = all(abs(x) <= bd for x, bd in zip(fr.terms, fr.bounds))
    ok = series_ok and rep.passed and fr.tail_bound < 1e-6 and majorant_ok
    summary = (f"series {fr.value:.6f} vs K {exact:.6f}, MC {rep.mc.mean:.4f}+-{rep.mc.stderr:.4f}, "
               f"tail {fr.tail_bound:.1e} at k={fr.k_max}")
    return _finish(5, "Fredholm Laplace functional", t0, ok, summary,
                   {"fredholm": fr.to_dict(), "kernel_value": exact, "mc_report": rep.to_dict()},
                   None, quick)


APPROX_F = D.StepFunction([-1.3, -0.2, 0.45, 1.1], [1.0, 0.3, -0.55, 0.8, 1.0])


def criterion_approx(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    ns = (10, 20, 40, 80)
    errs, slope = V.approx_errors(APPROX_F, ns)
    ok = slope <= -0.8
    summary = f"errors {', '.join(f'{e:.2e}' for e in errs)}; slope {slope:.3f}"
    return _finish(6, "Approximation sequence", t0, ok, summary,
                   {"n": ns, "errors": errs, "slope": slope}, None, quick)


def _trajectory_violations(traj: S.Trajectory, theta: float, n0: int) -> dict:
    v = {"simple": 0, "monotone": 0, "parity": 0, "positivity": 0}
    counts = traj.counts()
    for i in range(len(traj)):
        if np.any(np.diff(traj[i]) <= 0):
            v["simple"] += 1
    if np.any(np.diff(counts) > 0):
        v["monotone"] += 1
    if theta == 1.0 and np.any(counts % 2 != n0 % 2):
        v["parity"] += 1
    if theta == 0.0 and n0 > 0 and np.any(counts == 0):
        v["positivity"] += 1
    return v


def criterion_invariants(quick: bool = False, seed: int = 0) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng([seed, 7])
    total = 1_000 if quick else 10_000
    viol = {"simple": 0, "monotone": 0, "parity": 0, "positivity": 0, "determinism": 0}
    for r in range(total):
        n0 = int(rng.integers(0, 9))
        init = np.unique(rng.uniform(-1, 1, n0) * rng.choice([0.01, 0.1, 1.0]))
        theta = float(rng.choice([0.0, 1.0, 0.5, rng.uniform()]))
        dt = float(rng.uniform(1e-4, 1e-2))
        sc = S.SimConfig(theta=theta, t_end=dt * int(rng.integers(1, 60)), dt=dt,
                         seed=int(rng.integers(0, 2 ** 63)))
        tr = S.simulate_trajectory(init, sc, replica=r)
        for k, c in _trajectory_violations(tr, theta, init.size).items():
            viol[k] += c
        again = S.simulate_trajectory(init, sc, replica=r)
        if not (np.array_equal(tr.positions, again.positions)
                and np.array_equal(tr.offsets, again.offsets)):
            viol["determinism"] += 1
    ok = sum(viol.values()) == 0
    summary = f"{total} trajectories, violations {viol}"
    return _finish(7, "Simulator invariants", t0, ok, summary,
                   {"trajectories": total, "violations": viol}, None, quick)


CRITERIA = (criterion_pfaffian, criterion_kernel, criterion_duality, criterion_mixture,
            criterion_fredholm, criterion_approx, criterion_invariants)


def run_all(quick: bool = False, seed: int = 0, only=None, echo=None) -> list:
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        res = fn(quick=quick, seed=seed)
        if echo:
            echo(res.line())
        out.append(res)
    return out
