"""Pure numpy twins of the compiled kernels in ``_core.pyx``.

Random numbers come from ``Generator(Philox(key=[seed, replica]))`` and are
consumed in the same order as the compiled stepper, so both backends produce
the same bits.
"""

import math

import numpy as np

PIVOT_FLOOR = 1e-300


def _rng(seed, stream):
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def philox_doubles(seed, stream, n):
    return _rng(seed, stream).random(n)


def _pf_inplace(a):
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        col = np.abs(a[k + 1:, k])
        kp = k + 1 + int(np.argmax(col))
        if col[kp - k - 1] < PIVOT_FLOOR:
            return 0.0
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        piv = a[k, k + 1]
        pf *= piv
        if k + 2 < n:
            tau = a[k, k + 2:] / piv
            c = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, c) - np.outer(c, tau)
    return float(pf)


def pfaffian(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return _pf_inplace(A.copy())


def pfaffian_batch(A):
    """Batched Pfaffian, vectorized over the leading axis."""
    a = np.array(A, dtype=float)
    nb, n, n2 = a.shape
    if n != n2:
        raise ValueError("matrices must be square")
    out = np.ones(nb)
    if n % 2:
        return np.zeros(nb)
    alive = np.ones(nb, dtype=bool)
    rows = np.arange(nb)
    for k in range(0, n - 1, 2):
        col = np.abs(a[:, k + 1:, k])
        kp = k + 1 + np.argmax(col, axis=1)
        singular = col[rows, kp - k - 1] < PIVOT_FLOOR
        alive &= ~singular
        swap = kp != k + 1
        if swap.any():
            idx = rows[swap]
            p = kp[swap]
            r1 = a[idx, k + 1, :].copy()
            a[idx, k + 1, :] = a[idx, p, :]
            a[idx, p, :] = r1
            c1 = a[idx, :, k + 1].copy()
            a[idx, :, k + 1] = a[idx, :, p]
            a[idx, :, p] = c1
            out[swap] = -out[swap]
        piv = a[:, k, k + 1]
        piv = np.where(alive, piv, 1.0)
        out *= piv
        if k + 2 < n:
            tau = a[:, k, k + 2:] / piv[:, None]
            c = a[:, k + 2:, k + 1]
            a[:, k + 2:, k + 2:] += tau[:, :, None] * c[:, None, :] - c[:, :, None] * tau[:, None, :]
    out[~alive] = 0.0
    return out


def _resolve_ties(x, theta):
    if x.size < 2 or not (x[1:] == x[:-1]).any():
        return x
    out = []
    i = 0
    m = x.size
    while i < m:
        if i + 1 < m and x[i] == x[i + 1]:
            if theta < 1.0:
                out.append(x[i])
            i += 2
        else:
            out.append(x[i])
            i += 1
    return np.array(out)


def _step(x, theta, dt, sd, rng):
    n = x.size
    if n == 0:
        return x
    y = x + sd * rng.standard_normal(n)
    if n == 1:
        return y
    uc = rng.random(n - 1)
    ut = rng.random(n - 1)
    d0 = np.diff(x)
    d1 = np.diff(y)
    out = []
    i = 0
    while i < n:
        if i + 1 < n:
            if d1[i] <= 0.0:
                react = True
            else:
                react = uc[i] < math.exp(-d0[i] * d1[i] / (2.0 * dt))
            if react:
                if not (ut[i] < theta):
                    if d1[i] <= 0.0:
                        out.append(0.5 * (x[i] + x[i + 1]))
                    else:
                        out.append(0.5 * (y[i] + y[i + 1]))
                i += 2
                continue
        out.append(y[i])
        i += 1
    return _resolve_ties(np.sort(np.array(out, dtype=float)), theta)


def run_batch(init, theta, dts, seed, rep_start, rep_stop):
    init = np.asarray(init, dtype=float)
    dts = np.asarray(dts, dtype=float)
    sds = np.sqrt(2.0 * dts)
    chunks = []
    off = [0]
    for r in range(rep_start, rep_stop):
        rng = _rng(seed, r)
        x = init.copy()
        for dt, sd in zip(dts, sds):
            x = _step(x, theta, float(dt), float(sd), rng)
        chunks.append(x)
        off.append(off[-1] + x.size)
    pos = np.concatenate(chunks) if chunks else np.empty(0)
    return pos, np.array(off, dtype=np.int64)


def run_trajectory(init, theta, dts, seed, rep, record_every):
    init = np.asarray(init, dtype=float)
    dts = np.asarray(dts, dtype=float)
    sds = np.sqrt(2.0 * dts)
    nsteps = dts.size
    rng = _rng(seed, rep)
    x = init.copy()
    steps, chunks, off = [], [], [0]
    for s in range(nsteps + 1):
        if s > 0:
            x = _step(x, theta, float(dts[s - 1]), float(sds[s - 1]), rng)
        if s % record_every == 0 or s == nsteps:
            steps.append(s)
            chunks.append(x.copy())
            off.append(off[-1] + x.size)
    pos = np.concatenate(chunks) if chunks else np.empty(0)
    return np.array(steps, dtype=np.int64), pos, np.array(off, dtype=np.int64)
