import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from cabm import _backend
from cabm import sim as S
from cabm.data import StepFunction


def sc_(**kw):
    base = dict(theta=0.5, t_end=0.1, dt=1e-3, seed=11, reps=1)
    base.update(kw)
    return S.SimConfig(**base)


# ---------------------------------------------------------------------------
# types


@pytest.mark.parametrize("bad", [(1.0, 0.0), (0.0, 0.0), (math.nan,), (0.0, math.inf)])
def test_pointconfig_rejects(bad):
    with pytest.raises(ValueError):
        S.PointConfig(bad)


@pytest.mark.parametrize("kw", [
    dict(theta=1.2), dict(theta=-0.1), dict(t_end=0.0), dict(dt=0.0), dict(dt=0.2),
    dict(dt=0.05, t_end=1.0), dict(reps=0), dict(dt_min=2e-3), dict(ramp=1.0), dict(workers=0),
])
def test_simconfig_rejects(kw):
    with pytest.raises(ValueError):
        sc_(**kw)


def test_seed_normalized():
    assert sc_(seed=-1).seed == 2 ** 64 - 1
    assert sc_(seed=2 ** 64 + 5).seed == 5


@pytest.mark.parametrize("t_end,dt,dt_min", [(0.1, 1e-3, None), (0.5, 1e-3, 1e-7),
                                             (0.0123, 1e-3, 1e-6), (1e-3, 1e-3, None)])
def test_time_grid_sums_to_t_end(t_end, dt, dt_min):
    g = S.time_grid(t_end, dt, dt_min)
    assert g.sum() == pytest.approx(t_end, rel=1e-12)
    assert np.all(g > 0) and np.all(g <= dt * (1 + 1e-9))
    if dt_min is not None:
        assert g[0] == dt_min
        assert np.all(np.diff(g[:10]) >= 0)


def test_mcestimate_stderr():
    v = np.array([1.0, 0.0, 1.0, 1.0])
    e = S.MCEstimate.from_samples(v, 3)
    assert e.mean == 0.75
    assert e.stderr == pytest.approx(np.std(v, ddof=1) / 2)
    assert S.MCEstimate.from_samples([2.0], 0).stderr == 0.0


# ---------------------------------------------------------------------------
# step


def test_step_empty_and_single():
    rng = np.random.default_rng(0)
    assert len(S.step(S.PointConfig(()), 0.5, 1e-3, rng)) == 0
    out = S.step(S.PointConfig((0.25,)), 0.5, 1e-3, rng)
    assert len(out) == 1


def test_single_particle_displacement_variance():
    dt = 4e-3
    rng = np.random.default_rng(1)
    d = np.array([S.step(S.PointConfig((0.0,)), 0.3, dt, rng).positions[0] for _ in range(4000)])
    # sample variance of 4000 normals: relative sd about sqrt(2 / 4000)
    assert d.var(ddof=1) == pytest.approx(2 * dt, rel=0.1)
    assert abs(d.mean()) < 4 * math.sqrt(2 * dt / 4000)


def test_step_output_simple():
    rng = np.random.default_rng(2)
    cfg = S.PointConfig(tuple(np.linspace(0, 0.05, 30)))
    for theta in (0.0, 0.4, 1.0):
        out = S.step(cfg, theta, 1e-3, rng)
        assert np.all(np.diff(out.as_array()) > 0)
        assert len(out) <= len(cfg)


def test_step_parity_annihilating():
    rng = np.random.default_rng(3)
    cfg = S.PointConfig(tuple(np.linspace(0, 0.1, 12)))
    for _ in range(200):
        cfg = S.step(cfg, 1.0, 1e-3, rng)
        assert len(cfg) % 2 == 0


# ---------------------------------------------------------------------------
# whole runs


def test_empty_run():
    b = S.simulate_batch((), sc_(), 5)
    assert b.counts().tolist() == [0] * 5


def test_single_particle_run_distribution():
    t = 0.1
    b = S.simulate_batch([0.0], sc_(t_end=t), 4000)
    x = b.positions
    assert b.counts().tolist() == [1] * 4000
    assert x.var(ddof=1) == pytest.approx(2 * t, rel=0.1)


def test_coalescing_pair_leaves_one():
    d, t, reps = 2e-3, 0.05, 4000
    n = S.simulate_batch([-d / 2, d / 2], sc_(theta=0.0, t_end=t), reps).counts()
    assert set(np.unique(n)) <= {1, 2}
    # the gap diffuses with variance 4t; it stays positive with probability erf(d / sqrt(8t))
    miss = math.erf(d / math.sqrt(8 * t))
    assert np.mean(n == 2) <= miss + 4 * math.sqrt(miss / reps)


def test_annihilating_pair():
    eps = 1e-3
    sc = sc_(theta=1.0, t_end=0.05, dt_min=S.warmup_dt(eps))
    n = S.simulate_batch([-eps / 2, eps / 2], sc, 2000).counts()
    assert set(np.unique(n)) <= {0, 2}
    assert np.mean(n == 0) > 0.97


def test_determinism_and_replica_independence():
    init = [-0.3, -0.05, 0.0, 0.2, 0.21, 0.7]
    sc = sc_(t_end=0.05)
    a = S.simulate_batch(init, sc, 64)
    b = S.simulate_batch(init, sc, 64)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.offsets, b.offsets)
    # replicas 10..19 on their own reproduce the same draws
    part = S.simulate_batch(init, sc, 10, rep_start=10)
    for r in range(10):
        assert np.array_equal(part[r], a[10 + r])
    assert np.array_equal(S.simulate(init, sc, replica=7).as_array(), a[7])
    c = S.simulate_batch(init, sc.replace(seed=12), 64)
    assert not np.array_equal(a.positions[:20], c.positions[:20])


def test_workers_do_not_change_output(monkeypatch):
    init = list(np.linspace(-0.2, 0.2, 9))
    monkeypatch.setattr(S, "_CHUNK_DOUBLES", 40)
    one = S.simulate_batch(init, sc_(t_end=0.02), 50)
    four = S.simulate_batch(init, sc_(t_end=0.02, workers=4), 50)
    assert np.array_equal(one.positions, four.positions)
    assert np.array_equal(one.offsets, four.offsets)


def test_backends_bit_identical():
    py = _backend.get("python")
    core = _backend.impl
    if core is py:
        pytest.skip("compiled core not built")
    init = np.linspace(-0.05, 0.05, 11)
    dts = S.time_grid(0.05, 1e-3, 1e-7)
    for theta in (0.0, 0.37, 1.0):
        a = core.run_batch(init, theta, dts, 99, 3, 40)
        b = py.run_batch(init, theta, dts, 99, 3, 40)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        ta = core.run_trajectory(init, theta, dts, 99, 5, 7)
        tb = py.run_trajectory(init, theta, dts, 99, 5, 7)
        for x, y in zip(ta, tb):
            assert np.array_equal(x, y)


def test_trajectory_ends_at_simulate():
    init = [-0.1, 0.0, 0.15, 0.3]
    sc = sc_(theta=0.6, t_end=0.07)
    tr = S.simulate_trajectory(init, sc, replica=4, record_every=9)
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(0.07)
    assert np.array_equal(tr[0], init)
    assert np.array_equal(tr[len(tr) - 1], S.simulate(init, sc, replica=4).as_array())
    assert np.all(np.diff(tr.counts()) <= 0)


@settings(max_examples=30, deadline=None)
@given(n0=st.integers(0, 10), theta=st.sampled_from([0.0, 0.3, 1.0]),
       seed=st.integers(0, 2 ** 64 - 1), spread=st.sampled_from([0.01, 0.3]))
def test_trajectory_invariants(n0, theta, seed, spread):
    init = np.unique(np.random.default_rng(seed % 2 ** 32).uniform(-spread, spread, n0))
    sc = S.SimConfig(theta=theta, t_end=0.03, dt=1e-3, seed=seed)
    tr = S.simulate_trajectory(init, sc)
    c = tr.counts()
    assert np.all(np.diff(c) <= 0)
    for i in range(len(tr)):
        assert np.all(np.diff(tr[i]) > 0)
    if theta == 1.0:
        assert np.all(c % 2 == init.size % 2)
    if theta == 0.0 and init.size:
        assert np.all(c >= 1)


# ---------------------------------------------------------------------------
# statistics


def test_dual_statistic_empty_initial():
    est = S.mc_dual_statistic((), 0.5, 0.1, [(-1.0, 1.0)], sc_(), 100)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_interval_counts_open_intervals():
    batch = S.SampleBatch.from_configs([[-1.0, 0.0, 0.5], [2.0], []])
    assert S.interval_counts(batch, [(-1.0, 0.5)]).tolist() == [1, 0, 0]
    assert S.interval_counts(batch, [-2.0, -0.5, 0.2, 3.0]).tolist() == [2, 1, 0]
    assert S.dual_statistic(batch, 0.5, [(-2.0, 3.0)]).tolist() == [-0.125, -0.5, 1.0]
    with pytest.raises(ValueError):
        S.interval_counts(batch, [1.0, 0.0])


def test_survivors_single_particle():
    p0, p1 = S.survivor_distribution(1, 0.7, 1e-3, 0.05, sc_(), 200)
    assert (p0.mean, p1.mean) == (0.0, 1.0)
    assert p0.stderr == p1.stderr == 0.0


def test_empirical_intensity_single_sample():
    h = S.empirical_intensity([S.PointConfig((0.5,))], [0.0, 1.0])
    assert h.density.tolist() == [1.0]
    assert h.n == 1


def test_empirical_intensity_errors():
    with pytest.raises(ValueError):
        S.empirical_intensity([S.PointConfig((0.5,))], [0.0])
    with pytest.raises(ValueError):
        S.empirical_intensity([], [0.0, 1.0])


def test_far_particles_give_gaussian_bumps():
    t = 0.02
    sc = sc_(theta=0.0, t_end=t)
    b = S.simulate_batch([-1.0, 1.0], sc, 20000)
    edges = S.uniform_bins(-1.5, 1.5, 30)
    h = S.empirical_intensity(b, edges)
    sd = math.sqrt(2 * t)
    mass = (norm.cdf(edges[1:], -1, sd) - norm.cdf(edges[:-1], -1, sd)
            + norm.cdf(edges[1:], 1, sd) - norm.cdf(edges[:-1], 1, sd))
    expect = mass / np.diff(edges)
    # empty tail bins have zero stderr, hence the small absolute floor
    assert np.all(np.abs(h.density - expect) <= 4 * h.stderr + 2e-3)


def test_pair_intensity_counts_distinct_pairs():
    ph = S.empirical_pair_intensity([[0.1, 0.2, 1.5], [0.3]], [0.0, 1.0, 2.0])
    # first sample: two in bin 0, one in bin 1; ordered distinct pairs
    assert ph.density[0, 0] == pytest.approx(1.0)
    assert ph.density[0, 1] == pytest.approx(1.0)
    assert ph.density[1, 1] == 0.0


def test_laplace_trivial_cases():
    zero = StepFunction.constant(0.0)
    assert S.mc_laplace([0.0, 0.3], 0.5, 0.1, zero, sc_(), 50).mean == 1.0
    phi = StepFunction([-1.0, 1.0], [0.0, 0.9, 0.0])
    est = S.mc_laplace((), 0.5, 0.1, phi, sc_(), 50)
    assert est.mean == 1.0 and est.stderr == 0.0


@pytest.mark.parametrize("phi", [
    StepFunction([-1.0, 1.0], [0.0, 1.0, 0.0]),
    StepFunction([-1.0, 1.0], [0.0, -0.1, 0.0]),
    StepFunction([0.0], [0.5, 0.0]),
])
def test_laplace_rejects_bad_phi(phi):
    with pytest.raises(ValueError):
        S.mc_laplace([0.0], 0.5, 0.1, phi, sc_(), 10)


def test_laplace_statistic_product():
    phi = StepFunction([0.0, 1.0], [0.0, 0.5, 0.0])
    batch = S.SampleBatch.from_configs([[0.2, 0.4, 2.0], [-1.0]])
    assert S.laplace_statistic(batch, phi).tolist() == pytest.approx([0.25, 1.0])


# ---------------------------------------------------------------------------
# output


def test_samples_csv_format():
    batch = S.SampleBatch.from_configs([[0.1234567890123456, 2.0], []], t=0.5)
    text = S.samples_csv(batch)
    lines = text.splitlines()
    assert lines[0] == "replicate,t,index,position"
    assert lines[1] == "0,0.5,0,0.123456789012"
    assert lines[2] == "0,0.5,1,2"
    assert len(lines) == 3


def test_fmt12():
    assert S.fmt12(1 / 3) == "0.333333333333"
    assert S.fmt12(-0.0) == "0"
    assert S.fmt12(1e-20) == "1e-20"


def test_summary_json():
    est = S.MCEstimate(0.5, 0.01, 100, 3)
    d = json.loads(S.summary_json(est, check="x"))
    assert d == {"mean": 0.5, "stderr": 0.01, "n": 100, "seed": 3, "check": "x"}
