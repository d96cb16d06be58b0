"""Compare the compiled core with the numpy fallback.

    python benchmarks/bench_backends.py [--reps 2000] [--repeat 3]

Times the particle stepper (``run_batch``) on a clustered and a dense start,
and batched Pfaffians of several orders, then checks that both backends
return identical stepper output.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cabm import _backend
from cabm.sim import time_grid, warmup_dt


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def stepper_cases(reps):
    dense = np.arange(-0.6, 0.6, 4e-3)
    return [
        ("stepper: 3 particles, t=0.1", np.array([-1e-3, 0.0, 1e-3]), 0.5,
         time_grid(0.1, 1e-3, warmup_dt(1e-3)), reps),
        ("stepper: 10 particles, t=0.5", np.linspace(-1, 2, 10), 0.5,
         time_grid(0.5, 1e-3), reps),
        (f"stepper: {dense.size}-point grid, t=0.05", dense, 0.0,
         time_grid(0.05, 1e-3, warmup_dt(4e-3)), max(1, reps // 20)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py = _backend.get("python")
    try:
        core = _backend.get("compiled")
    except ImportError:
        print("compiled core not built; nothing to compare")
        return 1

    print(f"{'case':44s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, init, theta, dts, reps in stepper_cases(args.reps):
        init = np.ascontiguousarray(init)
        dts = np.ascontiguousarray(dts)
        a = core.run_batch(init, theta, dts, 1, 0, reps)
        b = py.run_batch(init, theta, dts, 1, 0, reps)
        same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        tc = best_of(lambda: core.run_batch(init, theta, dts, 1, 0, reps), args.repeat)
        tp = best_of(lambda: py.run_batch(init, theta, dts, 1, 0, reps), 1)
        flag = "" if same else "  OUTPUT DIFFERS"
        print(f"{name + f' x{reps}':44s} {tc:10.3f} {tp:10.3f} {tp / tc:8.1f}{flag}")

    rng = np.random.default_rng(0)
    for n in (4, 12, 24):
        a = rng.standard_normal((5000, n, n))
        a = np.ascontiguousarray(a - a.transpose(0, 2, 1))
        tc = best_of(lambda: core.pfaffian_batch(a), args.repeat)
        tp = best_of(lambda: py.pfaffian_batch(a), args.repeat)
        print(f"{f'pfaffian_batch: 5000 x order {n}':44s} {tc:10.3f} {tp:10.3f} {tp / tc:8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
