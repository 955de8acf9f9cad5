from math import exp, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticesnake.errors import EmptyWindow, NoPinnedFront
from latticesnake.lattice import make_orientation
from latticesnake.model import builtin, chi, front_constants
from latticesnake.predict import (SnakeParams, ladder_rungs, pinning_origins, pinning_width,
                                  proxy_measure, rung_endpoints, rung_indices, rung_L,
                                  scaled_constants, snake_branch, snaking_prediction,
                                  unscaled_width, width_cubic_const_unscaled,
                                  width_cubic_quintic_unscaled)

CC = scaled_constants("cubic_const")
CQ = scaled_constants("cubic_quintic")
O10 = make_orientation(1, 0)


def test_width_examples():
    assert unscaled_width("cubic_const", O10, 1.0, 2535) == pytest.approx(
        pi * 2535 * exp(-pi ** 2 * sqrt(2)), rel=1e-13)
    assert unscaled_width("cubic_const", O10, 1.0, 2535) == pytest.approx(6.91e-3, rel=1e-3)
    assert unscaled_width("cubic_quintic", O10, 0.7, 89) == pytest.approx(
        16 * pi * 89 / 2.1 * exp(-68.38 / 2.1), rel=1e-3)
    assert unscaled_width("cubic_quintic", O10, 0.7, 89) == pytest.approx(1.5e-11, rel=0.05)


@settings(max_examples=40)
@given(st.integers(1, 6), st.integers(0, 6), st.floats(0.1, 2.0))
def test_scaling_identity(m1, m2, s):
    o = make_orientation(m1, m2)
    assert unscaled_width("cubic_const", o, s, 1000.0) == pytest.approx(
        width_cubic_const_unscaled(o, s, 1000.0), rel=1e-11)
    assert unscaled_width("cubic_quintic", o, s, 100.0) == pytest.approx(
        width_cubic_quintic_unscaled(o, s, 100.0), rel=1e-11)


def test_width_vanishes_along_rational_approximants():
    # convergents of the golden ratio: an irrational direction
    ws = [unscaled_width("cubic_const", make_orientation(a, b), 1.0, 2535.0)
          for a, b in ((1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8))]
    assert np.all(np.diff(ws) < 0) and ws[-1] < 1e-30


def test_hex_width_uses_hex_eigenvalue():
    o = make_orientation(2, 1, "hex")
    eps = 0.8
    ref = 2 * pi * 500 * exp(-o.kappa1 * CC.zeta.imag / eps) / (eps ** 4 * 2)
    assert o.kappa1 == pytest.approx(4 * pi * sqrt(7) / sqrt(3))
    assert pinning_width(CC, o, "hex", eps, 500) == pytest.approx(ref, rel=1e-13)
    with pytest.raises(ValueError):
        pinning_width(CC, o, "square", eps, 500)
    with pytest.raises(ValueError):
        pinning_width(CC, o, None, eps, 0)


def _residual(fa, o, eps, lam, z0, dr):
    W = pinning_width(fa, o, None, eps, lam)
    return np.cos(o.kappa1 * z0 + chi(fa, o, eps, pi)) + np.sign(fa.int_Fr) * dr / W


def test_origins_at_zero_detuning():
    h = O10.spacing
    za, zb = pinning_origins(CC, O10, None, 0.8, 2535, pi, 0.0)
    assert zb - za == pytest.approx(h / 2, abs=1e-14)
    ends = rung_endpoints(CC, O10, SnakeParams(0.8, 2535))
    for z in (za, zb):
        # a quarter period from the nearest extremum of the cosine
        assert min(abs((z - e + h / 2) % h - h / 2) for e in ends) == pytest.approx(h / 4, abs=1e-14)


@pytest.mark.parametrize("fa", [CC, CQ])
def test_origins_back_substitution(fa):
    W = pinning_width(fa, O10, None, 0.8, 100)
    for frac in (0.5, -0.5, 0.9, 0.1):
        for z in pinning_origins(fa, O10, None, 0.8, 100, pi, frac * W):
            assert 0 <= z < O10.spacing
            assert abs(_residual(fa, O10, 0.8, 100, z, frac * W)) < 1e-12


def test_origins_coincide_at_the_edge():
    W = pinning_width(CC, O10, None, 0.8, 2535)
    for dr in (W, -W):
        za, zb = pinning_origins(CC, O10, None, 0.8, 2535, pi, dr)
        assert za == pytest.approx(zb, abs=1e-12)
    with pytest.raises(NoPinnedFront):
        pinning_origins(CC, O10, None, 0.8, 2535, pi, 1.01 * W)


def _params(fa, eps=0.5, lam=2535.0):
    return SnakeParams(eps, lam, pi)


@pytest.mark.parametrize("fa", [CC, CQ])
def test_snake_envelope_and_skew(fa):
    p = _params(fa)
    W = pinning_width(fa, O10, None, p.eps, p.lambda_abs)
    L = np.linspace(0.2, 40, 20001)
    skew = -(2 / fa.int_Fr) * fa.alpha_plus ** 2 * fa.D_plus ** 2 * np.exp(-fa.alpha_plus * L / p.eps)
    assert np.all(skew > 0)  # int_Fr < 0 leans the snakes to the right
    for parity in ("even", "odd"):
        dr = np.array([v for _L, v in snake_branch(fa, O10, p, parity, L)])
        # rounding of the O(1) skew term at small L dwarfs the quintic width
        assert np.all(np.abs(dr - skew) <= W * (1 + 1e-12) + 8e-16 * skew)
        far = skew < 1e-9 * W
        assert np.all(np.abs(dr[far]) <= W * (1 + 1e-6))
        assert np.max(np.abs(dr[far] - skew[far])) == pytest.approx(W, rel=1e-4)


def test_snake_parities_are_mirror_images():
    p = _params(CC)
    L = np.linspace(1, 3, 50)
    e = np.array([v for _L, v in snake_branch(CC, O10, p, "even", L)])
    o = np.array([v for _L, v in snake_branch(CC, O10, p, "odd", L)])
    skew = -(2 / CC.int_Fr) * CC.alpha_plus ** 2 * CC.D_plus ** 2 * np.exp(-CC.alpha_plus * L / p.eps)
    assert e - skew == pytest.approx(-(o - skew), abs=1e-15)
    with pytest.raises(ValueError):
        snake_branch(CC, O10, p, "even", [2, 1])
    with pytest.raises(ValueError):
        snake_branch(CC, O10, p, "sideways", L)


@pytest.mark.parametrize("fa", [CC, CQ])
def test_rung_endpoints_lie_on_snakes(fa):
    p = _params(fa)
    for rung in ladder_rungs(fa, O10, p, k_range=range(1, 12)):
        for j, (z0, dr) in enumerate(rung["endpoints"]):
            parity = "even" if (j - rung["k"]) % 2 == 0 else "odd"
            snake = snake_branch(fa, O10, p, parity, [rung["L"]])[0][1]
            assert abs(dr - snake) <= 1e-12 * abs(snake)


def test_rung_endpoint_positions():
    ends = rung_endpoints(CC, O10, _params(CC))
    # chi = 3 pi / 2 here, so the extrema sit a quarter spacing off the sites
    assert ends == pytest.approx((0.25, 0.75), abs=1e-14)


def test_rung_has_two_origins_per_interior_value():
    p = _params(CC)
    rung = ladder_rungs(CC, O10, p, k_range=[3], n_samples=401)[0]
    z, dr = np.array(rung["samples"]).T
    lo, hi = dr.min(), dr.max()
    for level in np.linspace(lo, hi, 9)[1:-1]:
        zz = np.append(dr, dr[0])
        changes = np.diff(np.sign(zz - level))
        assert np.sum(np.abs(changes)) == 4  # one up and one down crossing per period


@settings(max_examples=30)
@given(st.floats(0.3, 5.0), st.floats(1.0, 9.0))
def test_rung_count(start, delta):
    p = _params(CC, eps=0.6)
    unit = p.eps ** 2 / sqrt(O10.m1 ** 2 + O10.m2 ** 2)
    n = len(rung_indices(CC, O10, p, (start, start + unit * delta)))
    assert n in (int(np.floor(delta)), int(np.ceil(delta)))


def test_rung_L_spacing_and_empty_window():
    p = _params(CC)
    assert rung_L(CC, O10, p, 5) - rung_L(CC, O10, p, 4) == pytest.approx(p.eps ** 2)
    with pytest.raises(EmptyWindow):
        ladder_rungs(CC, O10, p, L_window=(0.10, 0.11))
    with pytest.raises(ValueError):
        ladder_rungs(CC, O10, p)


def test_snaking_prediction_bundle():
    p = _params(CC)
    pred = snaking_prediction(CC, O10, p, np.linspace(1, 3, 100))
    assert pred.width == pinning_width(CC, O10, None, p.eps, p.lambda_abs)
    assert len(pred.snake_site) == len(pred.snake_bond) == 100 and pred.rungs
    assert pred.chi == pytest.approx(3 * pi / 2)


def test_proxy_measure_is_linear():
    L = np.array([1.0, 2.0, 3.0])
    pm = proxy_measure(L, 0.5, -1.0, 1.0, 10.0)
    assert np.diff(pm) == pytest.approx([4.0, 4.0])
    assert pm[0] == pytest.approx(-10.0 + 4.0)


def test_scaled_constants_are_s1():
    assert scaled_constants("cubic_const") == front_constants(builtin("cubic_const", 1.0))
