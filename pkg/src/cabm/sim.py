"""Monte Carlo simulation of coalescing/annihilating Brownian motions.

Particles diffuse with generator ``Laplacian`` (variance ``2 dt`` per step).
Adjacent pairs react when their paths cross inside a step, detected with the
Brownian-bridge crossing probability; a reacting pair annihilates with
probability ``theta`` and otherwise merges at its midpoint.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ._backend import impl as _impl
from ._fallback import _step as _py_step
from .data import StepFunction, theta_power

SEED_MOD = 2 ** 64
DEFAULT_DT = 1e-3
MAX_DT = 1e-2
_CHUNK_DOUBLES = 2_000_000


def normalize_seed(seed) -> int:
    return int(seed) % SEED_MOD


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class PointConfig:
    """Finite simple configuration: strictly increasing positions."""

    positions: tuple = ()

    def __post_init__(self):
        p = tuple(float(v) for v in np.asarray(self.positions, dtype=float).ravel())
        if not all(math.isfinite(v) for v in p):
            raise ValueError("positions must be finite")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError("positions must be strictly increasing")
        object.__setattr__(self, "positions", p)

    def __len__(self):
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        return np.array(self.positions, dtype=float)

    @classmethod
    def from_array(cls, a) -> "PointConfig":
        return cls(tuple(np.asarray(a, dtype=float)))


@dataclass(frozen=True)
class SimConfig:
    """Discretization and replication settings.

    ``dt_min`` switches on a warm-up grid: steps start at ``dt_min`` and grow by
    ``ramp`` until they reach ``dt``.  Use it for clustered or dense starts,
    where the initial spacing is far below ``sqrt(dt)``.
    """

    theta: float
    t_end: float
    dt: float = DEFAULT_DT
    seed: int = 0
    reps: int = 1
    dt_min: float | None = None
    ramp: float = 1.15
    workers: int = 1
    max_dt: float = MAX_DT

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.dt > self.max_dt:
            raise ValueError(f"dt={self.dt} exceeds max_dt={self.max_dt}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.dt_min is not None and not 0 < self.dt_min <= self.dt:
            raise ValueError("dt_min must lie in (0, dt]")
        if not self.ramp > 1.0:
            raise ValueError("ramp must exceed 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "seed", normalize_seed(self.seed))

    def replace(self, **kw) -> "SimConfig":
        d = asdict(self)
        d.update(kw)
        return SimConfig(**d)

    def time_grid(self) -> np.ndarray:
        """Step sizes summing to ``t_end``."""
        return time_grid(self.t_end, self.dt, self.dt_min, self.ramp)

    def to_dict(self) -> dict:
        return asdict(self)


def time_grid(t_end: float, dt: float, dt_min: float | None = None,
              ramp: float = 1.15) -> np.ndarray:
    warm = []
    if dt_min is not None and dt_min < dt:
        h, acc = dt_min, 0.0
        while h < dt and acc + h < t_end:
            warm.append(h)
            acc += h
            h *= ramp
    rest = t_end - sum(warm)
    n = max(1, math.ceil(rest / dt - 1e-9))
    return np.concatenate([np.asarray(warm), np.full(n, rest / n)])


def warmup_dt(spacing: float) -> float:
    """Initial step whose displacement scale is a quarter of ``spacing``."""
    return 0.5 * (0.25 * spacing) ** 2


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int
    seed: int

    @classmethod
    def from_samples(cls, values, seed: int) -> "MCEstimate":
        v = np.asarray(values, dtype=float)
        n = v.size
        if n == 0:
            raise ValueError("no samples")
        se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(v)), se, n, normalize_seed(seed))

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Single steps and runs


def step(cfg: PointConfig, theta: float, dt: float, rng: np.random.Generator) -> PointConfig:
    """Advance one configuration by one step using ``rng``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = _py_step(cfg.as_array(), theta, dt, math.sqrt(2.0 * dt), rng)
    return PointConfig.from_array(x)


@dataclass
class SampleBatch:
    """Final configurations of consecutive replicas in CSR form."""

    positions: np.ndarray
    offsets: np.ndarray
    t: float
    rep_start: int = 0
    seed: int = 0

    def __len__(self):
        return self.offsets.size - 1

    def __getitem__(self, r) -> np.ndarray:
        return self.positions[self.offsets[r]:self.offsets[r + 1]]

    def configs(self) -> list:
        return [PointConfig.from_array(self[r]) for r in range(len(self))]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def replica_ids(self) -> np.ndarray:
        return np.repeat(np.arange(len(self)), self.counts())

    @classmethod
    def from_configs(cls, configs: Sequence, t: float = float("nan")) -> "SampleBatch":
        arrs = [np.asarray(getattr(c, "positions", c), dtype=float) for c in configs]
        off = np.zeros(len(arrs) + 1, dtype=np.int64)
        off[1:] = np.cumsum([a.size for a in arrs])
        pos = np.concatenate(arrs) if arrs else np.empty(0)
        return cls(pos, off, t)


def _as_batch(samples) -> SampleBatch:
    if isinstance(samples, SampleBatch):
        return samples
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    return SampleBatch.from_configs(samples)


def _init_array(initial) -> np.ndarray:
    if isinstance(initial, PointConfig):
        return initial.as_array()
    return PointConfig(tuple(initial)).as_array()


def simulate_batch(initial, sc: SimConfig, reps: int | None = None,
                   rep_start: int = 0) -> SampleBatch:
    """Run replicas ``rep_start .. rep_start + reps - 1`` to ``sc.t_end``.

    Replica ``r`` draws from the stream keyed by ``(seed, r)``, so the result
    does not depend on ``sc.workers`` or on chunking.
    """
    x0 = np.ascontiguousarray(_init_array(initial))
    reps = sc.reps if reps is None else int(reps)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    dts = np.ascontiguousarray(sc.time_grid())
    chunk = max(1, min(reps, _CHUNK_DOUBLES // max(x0.size, 1)))
    if sc.workers > 1:
        chunk = max(1, min(chunk, -(-reps // (4 * sc.workers))))
    bounds = [(a, min(a + chunk, reps)) for a in range(0, reps, chunk)]

    def run(b):
        return _impl.run_batch(x0, sc.theta, dts, sc.seed, rep_start + b[0], rep_start + b[1])

    if sc.workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(sc.workers) as ex:
            parts = list(ex.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    pos = np.concatenate([p for p, _ in parts]) if parts else np.empty(0)
    off = [np.zeros(1, dtype=np.int64)]
    base = 0
    for p, o in parts:
        off.append(o[1:] + base)
        base += p.size
    return SampleBatch(pos, np.concatenate(off), sc.t_end, rep_start, sc.seed)


def simulate(initial, sc: SimConfig, replica: int = 0) -> PointConfig:
    """Configuration of one replica at ``sc.t_end``."""
    b = simulate_batch(initial, sc, reps=1, rep_start=replica)
    return PointConfig.from_array(b[0])


@dataclass
class Trajectory:
    replica: int
    times: np.ndarray
    positions: np.ndarray
    offsets: np.ndarray

    def __len__(self):
        return self.times.size

    def __getitem__(self, i) -> np.ndarray:
        return self.positions[self.offsets[i]:self.offsets[i + 1]]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def simulate_trajectory(initial, sc: SimConfig, replica: int = 0,
                        record_every: int = 1) -> Trajectory:
    """Snapshots of one replica every ``record_every`` steps (and at the end).

    The final snapshot equals ``simulate(initial, sc, replica)``.
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    x0 = np.ascontiguousarray(_init_array(initial))
    dts = np.ascontiguousarray(sc.time_grid())
    steps, pos, off = _impl.run_trajectory(x0, sc.theta, dts, sc.seed, replica, record_every)
    times = np.concatenate([[0.0], np.cumsum(dts)])[steps]
    times[-1] = sc.t_end
    return Trajectory(replica, times, pos, off)


# ---------------------------------------------------------------------------
# Statistics


def _intervals(intervals) -> np.ndarray:
    e = np.asarray(intervals, dtype=float).ravel()
    if e.size == 0 or e.size % 2:
        raise ValueError("intervals need an even, non-zero number of endpoints")
    if np.any(np.diff(e) <= 0):
        raise ValueError("interval endpoints must be strictly increasing")
    return e.reshape(-1, 2)


def interval_counts(batch: SampleBatch, intervals) -> np.ndarray:
    """Per-replica number of particles in the union of open intervals."""
    iv = _intervals(intervals)
    pos = batch.positions
    inside = np.zeros(pos.size, dtype=bool)
    for a, b in iv:
        inside |= (pos > a) & (pos < b)
    return np.bincount(batch.replica_ids(), weights=inside, minlength=len(batch)).astype(np.int64)


def dual_statistic(batch: SampleBatch, theta: float, intervals) -> np.ndarray:
    return theta_power(theta, interval_counts(batch, intervals))


def mc_dual_statistic(initial, theta: float, t: float, intervals, sc: SimConfig,
                      reps: int | None = None) -> MCEstimate:
    """Estimate ``E[(-theta) ** N]``, with ``N`` the particles in the intervals at time ``t``."""
    _intervals(intervals)
    sc = sc.replace(theta=theta, t_end=t)
    b = simulate_batch(initial, sc, reps)
    return MCEstimate.from_samples(dual_statistic(b, theta, intervals), sc.seed)


def cluster(k: int, eps: float, origin: float = 0.0) -> PointConfig:
    return PointConfig(tuple(origin + eps * np.arange(k)))


def survivor_distribution(k: int, theta: float, eps: float, t: float, sc: SimConfig,
                          reps: int | None = None) -> tuple:
    """``(P0, P1)`` for ``k`` particles started at spacing ``eps``.

    A warm-up grid starting at ``warmup_dt(eps)`` resolves the cluster before
    steps reach ``sc.dt``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    dt_min = sc.dt_min if sc.dt_min is not None else min(warmup_dt(eps), sc.dt)
    sc = sc.replace(theta=theta, t_end=t, dt_min=dt_min)
    n = simulate_batch(cluster(k, eps), sc, reps).counts()
    return (MCEstimate.from_samples(n == 0, sc.seed),
            MCEstimate.from_samples(n == 1, sc.seed))


@dataclass
class IntensityHistogram:
    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    n: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def _bins(bins) -> np.ndarray:
    e = np.asarray(bins, dtype=float).ravel()
    if e.size < 2:
        raise ValueError("bin grid needs at least two edges")
    if np.any(np.diff(e) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    return e


def uniform_bins(lo: float, hi: float, nbins: int) -> np.ndarray:
    if nbins < 1:
        raise ValueError("need at least one bin")
    return np.linspace(lo, hi, nbins + 1)


def _bin_counts(batch: SampleBatch, edges: np.ndarray) -> np.ndarray:
    nb = edges.size - 1
    idx = np.searchsorted(edges, batch.positions, side="right") - 1
    ok = (idx >= 0) & (idx < nb)
    key = batch.replica_ids()[ok] * nb + idx[ok]
    return np.bincount(key, minlength=len(batch) * nb).reshape(len(batch), nb).astype(float)


def empirical_intensity(samples, bins) -> IntensityHistogram:
    """One-point density: bin counts over (replicates x bin width), bins ``[a, b)``."""
    edges = _bins(bins)
    b = _as_batch(samples)
    c = _bin_counts(b, edges)
    w = np.diff(edges)
    n = len(b)
    se = c.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(w.size)
    return IntensityHistogram(edges, c.mean(axis=0) / w, se / w, n)


@dataclass
class PairHistogram:
    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    n: int


def empirical_pair_intensity(samples, bins) -> PairHistogram:
    """Two-point density on ``bins x bins`` counting ordered pairs of distinct particles."""
    edges = _bins(bins)
    b = _as_batch(samples)
    c = _bin_counts(b, edges)
    n = len(b)
    prod = c[:, :, None] * c[:, None, :]
    d = np.arange(c.shape[1])
    prod[:, d, d] -= c
    w = np.diff(edges)
    area = w[:, None] * w[None, :]
    se = prod.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(area)
    return PairHistogram(edges, prod.mean(axis=0) / area, se / area, n)


def _check_phi(phi: StepFunction) -> None:
    v = np.asarray(phi.values, dtype=float)
    if np.any(v < 0) or np.any(v >= 1):
        raise ValueError("phi must take values in [0, 1)")
    if v[0] != 0 or v[-1] != 0:
        raise ValueError("phi must have compact support")


def laplace_statistic(batch: SampleBatch, phi: StepFunction) -> np.ndarray:
    _check_phi(phi)
    lg = np.log1p(-phi(batch.positions))
    return np.exp(np.bincount(batch.replica_ids(), weights=lg, minlength=len(batch)))


def mc_laplace(initial, theta: float, t: float, phi: StepFunction, sc: SimConfig,
               reps: int | None = None) -> MCEstimate:
    """Estimate ``E[prod_i (1 - phi(x_i))]`` at time ``t``."""
    _check_phi(phi)
    sc = sc.replace(theta=theta, t_end=t)
    b = simulate_batch(initial, sc, reps)
    return MCEstimate.from_samples(laplace_statistic(b, phi), sc.seed)


# ---------------------------------------------------------------------------
# Output


def fmt12(v: float) -> str:
    return f"{float(v) + 0.0:.12g}"


CSV_HEADER = ("replicate", "t", "index", "position")


def write_samples_csv(rows: Iterable, stream) -> None:
    """Write ``(replicate, t, positions)`` triples, one line per particle."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rep, t, pos in rows:
        for i, x in enumerate(pos):
            w.writerow((rep, fmt12(t), i, fmt12(x)))


def batch_rows(batch: SampleBatch):
    for r in range(len(batch)):
        yield batch.rep_start + r, batch.t, batch[r]


def trajectory_rows(traj: Trajectory):
    for i in range(len(traj)):
        yield traj.replica, traj.times[i], traj[i]


def samples_csv(batch: SampleBatch) -> str:
    s = io.StringIO()
    write_samples_csv(batch_rows(batch), s)
    return s.getvalue()


def summary_json(est: MCEstimate, **extra) -> str:
    return json.dumps({**est.to_dict(), **extra}, sort_keys=True)
