import numpy as np
import pytest

from latticesnake.dynamics import (classify, depinning_threshold, drift_sweep, evolve,
                                   front_position, stable_dt, stable_front)
from latticesnake.errors import BracketInvalid, Instability, NoFront
from latticesnake.lattice import make_orientation
from latticesnake.model import builtin, maxwell
from latticesnake.predict import unscaled_width

O10 = make_orientation(1, 0)
LEVELS = (-1.0, 1.0)


@pytest.fixture(scope="module")
def front():
    spec = builtin("cubic_const", 1.0)
    p, u = stable_front(spec, O10)
    return spec, p, u


def test_front_position_exact_crossing():
    u = np.array([1.0, 1.0, 0.5, -0.5, -1.0])
    assert front_position(u, LEVELS) == 2.5
    assert front_position(u, LEVELS, spacing=2 ** -0.5) == pytest.approx(2.5 * 2 ** -0.5)
    assert front_position(np.array([1.0, 0.0, -1.0]), LEVELS) == 1.0


def test_front_position_of_analytic_front():
    h = 2 ** -0.5
    z = (np.arange(200) - 80) * h
    u = -np.tanh(z / np.sqrt(2))
    assert front_position(u, LEVELS, h) == pytest.approx(80 * h, abs=1e-3 * h)
    u1 = -np.tanh((z - h) / np.sqrt(2))
    assert front_position(u1, LEVELS, h) - front_position(u, LEVELS, h) == pytest.approx(h, abs=1e-12)
    noisy = u + 1e-6 * np.random.default_rng(0).standard_normal(200)
    assert abs(front_position(noisy, LEVELS, h) - front_position(u, LEVELS, h)) < 1e-4 * h


def test_front_position_needs_one_crossing():
    with pytest.raises(NoFront):
        front_position(np.zeros(10), LEVELS)
    with pytest.raises(NoFront):
        front_position(np.ones(10), LEVELS)
    with pytest.raises(NoFront):
        front_position(np.array([1.0, -1.0, 1.0]), LEVELS)


def test_stable_front_is_linearly_stable(front):
    _spec, p, u = front
    from latticesnake.continuation import jacobian
    assert np.linalg.eigvals(jacobian(p, u).toarray()).real.max() < 0


def test_pinned_at_maxwell(front):
    spec, p, u = front
    tr = evolve(p, u, 0.9 * stable_dt(p, u), 1000.0, maxwell(spec).r_M)
    assert tr.pinned and not tr.hopped
    assert abs(tr.drift_velocity) < 1e-8
    assert np.ptp(tr.front_positions) < 1e-8


def test_constant_start_has_no_front(front):
    spec, p, _u = front
    with pytest.raises(NoFront):
        evolve(p, np.ones(p.J), 0.1, 1.0, maxwell(spec).r_M)


def test_large_step_is_caught(front):
    spec, p, u = front
    with pytest.raises(Instability):
        evolve(p, u, 5 * stable_dt(p, u), 50.0, maxwell(spec).r_M)


def test_front_hops_outside_region(front):
    spec, p, u = front
    rM = maxwell(spec).r_M
    W = unscaled_width("cubic_const", O10, 1.0, 2535.16)
    for side in (1, -1):
        tr = classify(p, u, rM + side * 2 * W, 2000.0)
        assert tr.hopped and not tr.pinned
        assert np.all(side * np.diff(tr.front_positions) > 0)
        assert np.sign(tr.displacement) == side  # raising r grows the u_plus plateau on the left


def test_threshold_and_bracket_checks(front):
    spec, p, u = front
    rM = maxwell(spec).r_M
    W = unscaled_width("cubic_const", O10, 1.0, 2535.16)
    thr = depinning_threshold(p, "right", (rM + 0.2 * W, rM + 2 * W), u, T=1000.0)
    assert 0.3 * W < thr - rM < 0.8 * W
    with pytest.raises(BracketInvalid):
        depinning_threshold(p, "right", (rM + 2 * W, rM + 3 * W), u, T=1000.0)
    with pytest.raises(BracketInvalid):
        depinning_threshold(p, "right", (rM + 0.1 * W, rM + 0.2 * W), u, T=1000.0)
    with pytest.raises(BracketInvalid):
        depinning_threshold(p, "right", (rM + 2 * W, rM + 0.2 * W), u, T=1000.0)
    with pytest.raises(ValueError):
        depinning_threshold(p, "up", (rM, rM + W), u)


def test_speed_grows_beyond_threshold(front):
    spec, p, u = front
    rM = maxwell(spec).r_M
    W = unscaled_width("cubic_const", O10, 1.0, 2535.16)
    v = drift_sweep(p, u, rM + W * np.array([1.0, 1.5, 2.5, 4.0]), 2000.0)
    assert all(x != 0 for x in v)
    assert np.all(np.diff(np.abs(v)) > 0)
