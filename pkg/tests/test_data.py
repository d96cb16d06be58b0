import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cabm import data as D
from cabm import verify as V


def test_theta_power_conventions():
    assert D.theta_power(0.0, 0) == 1.0
    assert D.theta_power(0.0, 3) == 0.0
    assert D.theta_power(0.5, math.inf) == 0.0
    assert D.theta_power(1.0, math.inf) == 0.0
    assert np.array_equal(D.theta_power(1.0, [0, 1, 2, 3]), [1.0, -1.0, 1.0, -1.0])


@pytest.mark.parametrize("theta,x,y,expected", [
    (0.5, -1.0, 1.0, -0.5),
    (0.0, -1.0, 1.0, 0.0),
    (0.0, 1.0, 2.0, 1.0),
    (1.0, -1.0, 1.0, -1.0),
])
def test_finite_spin_values(theta, x, y, expected):
    assert D.spin_eval(D.finite([0.0]), theta, x, y) == expected


def test_finite_spin_open_interval():
    f = D.finite([0.0])
    # the atom sits on the endpoint, so the open interval misses it
    assert D.spin_eval(f, 0.5, 0.0, 1.0) == 1.0
    assert D.spin_eval(f, 0.5, -1.0, 0.0) == 1.0


def test_multiplicity_counts():
    f = D.FiniteSpin(D.PointMeasure(((0.0, 3),)))
    assert D.spin_eval(f, 0.5, -1, 1) == pytest.approx(-0.125)
    assert D.finite([0.0, 0.0]).mu.atoms == ((0.0, 2),)


def test_closed_set_avoid_indicator():
    f = D.ClosedSetAvoid(((0.0, 1.0),))
    assert D.spin_eval(f, 0.5, 2.0, 3.0) == 1.0
    assert D.spin_eval(f, 0.5, -1.0, 0.5) == 0.0
    assert D.spin_eval(f, 0.5, -1.0, 0.0) == 1.0


def test_closed_set_isolated_weights():
    f = D.ClosedSetAvoid(((0.0, 1.0),), ((2.0, 2), (3.0, "inf")))
    assert D.spin_eval(f, 0.5, 1.5, 2.5) == pytest.approx(0.25)
    assert D.spin_eval(f, 0.5, 1.5, 3.5) == 0.0
    assert D.spin_eval(f, 0.5, 3.5, 4.0) == 1.0
    assert D.spin_eval(f, 0.0, 3.5, 4.0) == 1.0


@pytest.mark.parametrize("make,theta", [
    (lambda: D.Product(), 0.5),
    (lambda: D.ClosedSetAvoid(((0.0, 1.0),)), 1.0),
    (lambda: D.Maximal(), 1.5),
    (lambda: D.finite([0.0]), -0.1),
])
def test_invalid_theta_for_variant(make, theta):
    with pytest.raises(ValueError):
        D.spin_eval(make(), theta, 0.0, 1.0)


@pytest.mark.parametrize("bad", [
    lambda: D.ClosedSetAvoid(((1.0, 1.0),)),
    lambda: D.ClosedSetAvoid(((0.0, 1.0), (0.5, 2.0))),
    lambda: D.ClosedSetAvoid(((0.0, 1.0),), ((0.5, 1),)),
    lambda: D.ClosedSetAvoid((), ((0.5, 0),)),
    lambda: D.PointMeasure(((1.0, 1), (0.0, 1))),
    lambda: D.PointMeasure(((0.0, 0),)),
    lambda: D.StepFunction([0.0], [1.0]),
    lambda: D.Product(D.StepFunction((), (1.5,))),
])
def test_invalid_constructions(bad):
    with pytest.raises(ValueError):
        bad()


def test_spin_requires_ordered_pair():
    with pytest.raises(ValueError):
        D.spin_eval(D.finite([0.0]), 0.5, 1.0, 1.0)


def test_product_spin():
    f = D.StepFunction([0.0], [0.5, -1.0])
    assert D.spin_eval(D.Product(f), 1.0, -1.0, 1.0) == -0.5


@settings(max_examples=80, deadline=None)
@given(pts=st.lists(st.floats(-5, 5), max_size=8), theta=st.floats(0, 1),
       cuts=st.lists(st.floats(-6, 6), min_size=4, max_size=4, unique=True))
def test_spin_multiplicative(pts, theta, cuts):
    x1, x2, x3, x4 = sorted(cuts)
    f = D.finite(pts)
    mu = f.mu
    lhs = D.spin_eval(f, theta, x1, x2) * D.spin_eval(f, theta, x3, x4)
    rhs = D.theta_power(theta, mu.count(x1, x2) + mu.count(x3, x4))
    assert lhs == pytest.approx(float(rhs), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(pts=st.lists(st.floats(-5, 5), max_size=8, unique=True),
       xy=st.lists(st.floats(-6, 6), min_size=2, max_size=2, unique=True))
def test_annihilating_spin_factorizes(pts, xy):
    x, y = sorted(xy)
    f = D.finite(pts)
    if x in pts or y in pts:
        return
    assert D.spin_eval(f, 1.0, x, y) == D.hat_spin(f.mu, x) * D.hat_spin(f.mu, y)


@pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 1.0])
def test_p_k_basics(theta):
    assert D.p_k(theta, 1) == 0.0
    assert D.p_k(theta, 2) == pytest.approx(theta)
    assert D.p_k(theta, 0) == pytest.approx(1.0)
    for k in range(12):
        assert 0.0 <= D.p_k(theta, k) <= 1.0 + 1e-15


def test_p_k_values_and_limit():
    assert D.p_k(0.5, 3) == pytest.approx(0.25)
    assert D.p_k(1.0, 2) == 1.0
    assert D.p_k(0.6, 200) == pytest.approx(0.6 / 1.6, abs=1e-12)
    with pytest.raises(ValueError):
        D.p_k(0.5, -1)


def test_mixture_identity_examples():
    assert D.mixture_initial_identity(0.5, 2, [-1.0, 1.0])
    assert D.mixture_initial_identity(0.0, 2, [-1.0, 1.0])
    assert D.mixture_initial_identity(0.3, 5, [0.5, 1.0, 2.0, 3.0])
    assert D.mixture_initial_identity(0.7, 4, [-3.0, -1.0, -0.5, 0.5])
    with pytest.raises(ValueError):
        D.mixture_initial_identity(1.0, 2, [-1.0, 1.0])
    with pytest.raises(ValueError):
        D.mixture_initial_identity(0.5, 1, [-1.0, 1.0])


def test_approx_constant_one_is_empty():
    assert len(D.approx_product(D.StepFunction.constant(1.0), 7)) == 0


@pytest.mark.parametrize("n", [1, 3, 10])
def test_approx_constant_minus_one(n):
    mu = D.approx_product(D.StepFunction.constant(-1.0), n)
    assert np.allclose(mu.positions, [-n, n])


def test_approx_midpoints_inside_zero_region():
    f = D.StepFunction([0.0, 1.0], [1.0, 0.0, 1.0])
    n = 10
    mu = D.approx_product(f, n)
    # in each block of [0, 1) the sign flips at the block midpoint and back at the block end
    inside = mu.positions[(mu.positions > 0) & (mu.positions < 1)]
    mids = (np.arange(n) + 0.5) / n
    assert np.allclose(inside[0::2], mids)
    assert mu.is_simple


def test_approx_pairing_bound():
    f = D.StepFunction([0.0, 1.0], [1.0, 0.0, 1.0])
    mass, dphi = V.gaussian_phi(0.3, 1.0)
    for n in (10, 20, 40):
        mu = D.approx_product(f, n)
        err = min(abs(D.step_pairing(mu, f, mass, s)) for s in (1.0, -1.0))
        L = 1.0
        assert err <= 2 * (L + 1) * n / n ** 2 * dphi + 1e-12


def test_approx_errors_decay():
    f = D.StepFunction([-1.3, -0.2, 0.45, 1.1], [1.0, 0.3, -0.55, 0.8, 1.0])
    errs, slope = V.approx_errors(f, (10, 20, 40, 80))
    assert slope <= -0.8
    assert errs[-1] < errs[0]


def test_hat_spin_reference_point():
    mu = D.PointMeasure(((0.0, 1), (1.0, 1)))
    assert D.hat_spin(mu, 0.5) == -1.0
    assert D.hat_spin(mu, 0.5, ref=0.7) == 1.0
    assert D.hat_spin(mu, 0.5, ref=2.0) == -1.0
    assert np.array_equal(D.hat_spin(mu, np.array([-1.0, 0.5, 2.0])), [1.0, -1.0, 1.0])


@pytest.mark.parametrize("d", [
    D.finite([-1.0, 0.0, 2.0]),
    D.empty(),
    D.Maximal(),
    D.Product(D.StepFunction([0.0], [0.5, -0.25])),
    D.ClosedSetAvoid(((0.0, 1.0),), ((2.0, "inf"), (3.0, 2))),
    D.FiniteSpin(D.PointMeasure(((0.0, 2), (1.5, 1)))),
])
def test_json_round_trip(d):
    text = D.to_json(d)
    back = D.from_json(text)
    assert back == d
    assert json.loads(text)["variant"] == d.variant


def test_parse_descriptor(tmp_path):
    assert isinstance(D.parse_descriptor("maximal"), D.Maximal)
    assert D.parse_descriptor("empty") == D.empty()
    assert D.parse_descriptor("points:-1,0,2") == D.finite([-1.0, 0.0, 2.0])
    p = tmp_path / "d.json"
    p.write_text('{"variant": "closed_set_avoid", "intervals": [[0, 1]]}')
    assert D.parse_descriptor(str(p)) == D.ClosedSetAvoid(((0.0, 1.0),))
    with pytest.raises(ValueError):
        D.from_dict({"variant": "bogus"})
