from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticesnake.errors import NonCommensurate, ZeroDirection
from latticesnake.lattice import (Orientation, effective_operator, make_orientation, projections,
                                  stencil, symbol, symbol_derivative)

coprime_pairs = st.tuples(st.integers(-12, 12), st.integers(-12, 12)).filter(lambda m: m != (0, 0))


def test_reduction_and_spacing():
    o = make_orientation(2, 4)
    assert (o.m1, o.m2) == (1, 2)
    assert o.spacing == pytest.approx(5 ** -0.5, abs=1e-15)
    assert make_orientation(1, 0).spacing == 1.0
    assert make_orientation(1, 0, "hex").spacing == pytest.approx(sqrt(3) / 2, abs=1e-15)


def test_zero_direction():
    with pytest.raises(ZeroDirection):
        make_orientation(0, 0)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_orientation(1, 0, "triangle")


@given(coprime_pairs, st.sampled_from(["square", "hex"]))
def test_orientation_invariants(m, kind):
    o = make_orientation(*m, kind)
    assert np.gcd(o.m1, o.m2) == 1
    assert o.cos_psi ** 2 + o.sin_psi ** 2 == pytest.approx(1.0, abs=1e-15)
    if kind == "square":
        n = sqrt(o.m1 ** 2 + o.m2 ** 2)
        assert o.cos_psi == pytest.approx(o.m1 / n) and o.spacing == pytest.approx(1 / n)
    else:
        n = sqrt(o.m1 ** 2 + o.m1 * o.m2 + o.m2 ** 2)
        assert o.spacing == pytest.approx(sqrt(3) / 2 / n)
        assert o.sin_psi == pytest.approx(0.5 * (o.m1 + 2 * o.m2) / n)


def test_stencils():
    sq, hx = stencil("square"), stencil("hex")
    assert len(sq.offsets) == 4 and sq.center_weight == -4
    assert sum(sq.weights) + sq.center_weight == 0
    assert len(hx.offsets) == 6 and np.allclose(hx.weights, 2 / 3) and hx.center_weight == -4
    assert sum(hx.weights) + hx.center_weight == pytest.approx(0, abs=1e-15)
    for s in (sq, hx):
        # offsets come in +- pairs with equal weights
        for dx, dy, w in s.offsets:
            assert any(abs(dx + ex) < 1e-12 and abs(dy + ey) < 1e-12 and w == v
                       for ex, ey, v in s.offsets)
        assert s.apply_2d(lambda x, y: 3.7, 0.3, -1.1) == pytest.approx(0, abs=1e-14)


def test_projections_examples():
    sq = stencil("square")
    assert sorted(i for _d, i in projections(sq, make_orientation(1, 0))) == [-1, 0, 0, 1]
    assert sorted(i for _d, i in projections(sq, make_orientation(2, 1))) == [-2, -1, 1, 2]
    hx = projections(stencil("hex"), make_orientation(1, 0, "hex"))
    assert sorted(i for _d, i in hx) == [-1, -1, 0, 0, 1, 1]
    assert sorted(abs(d) for d, _i in hx) == pytest.approx([0, 0] + [sqrt(3) / 2] * 4)


def test_kind_mismatch():
    with pytest.raises(ValueError):
        projections(stencil("hex"), make_orientation(1, 0, "square"))


def test_noncommensurate_direction():
    class Irrational(Orientation):
        @property
        def cos_psi(self):
            return 1 / sqrt(1 + 2)

        @property
        def sin_psi(self):
            return sqrt(2) / sqrt(1 + 2)

    with pytest.raises(NonCommensurate):
        projections(stencil("square"), Irrational(1, 1))


def test_symbol_zeros():
    sq, hx = stencil("square"), stencil("hex")
    assert abs(symbol(sq, make_orientation(1, 0), 0.0)) == 0
    assert abs(symbol(sq, make_orientation(1, 0), 2 * pi)) < 1e-14
    assert abs(symbol(hx, make_orientation(1, 0, "hex"), 4 * pi / sqrt(3))) < 1e-14


def test_square_symbol_closed_form():
    o = make_orientation(3, 2)
    k = np.linspace(-7, 7, 31) + 0.4j
    ref = 2 * (np.cos(k * o.cos_psi) + np.cos(k * o.sin_psi) - 2)
    assert np.allclose(symbol(stencil("square"), o, k), ref, atol=1e-13)


@settings(max_examples=60)
@given(coprime_pairs, st.sampled_from(["square", "hex"]),
       st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_symbol_symmetries(m, kind, k):
    st_ = stencil(kind)
    o = make_orientation(*m, kind)
    s = symbol(st_, o, k)
    assert abs(symbol(st_, o, -k) - s) <= 1e-9 * max(1, abs(s))
    assert abs(symbol(st_, o, np.conj(k)) - np.conj(s)) <= 1e-9 * max(1, abs(s))


@settings(max_examples=40)
@given(st.integers(1, 9), st.integers(0, 9), st.integers(1, 4))
def test_real_family_zero(m1, m2, M):
    o = make_orientation(m1, m2)
    assert abs(symbol(stencil("square"), o, 2 * M * pi * sqrt(o.m1 ** 2 + o.m2 ** 2))) < 1e-12


def test_symbol_derivative_matches_difference():
    o = make_orientation(2, 1, "hex")
    st_ = stencil("hex")
    k, h = 1.3 + 0.7j, 1e-6
    fd = (symbol(st_, o, k + h) - symbol(st_, o, k - h)) / (2 * h)
    assert abs(symbol_derivative(st_, o, k) - fd) < 1e-8


@pytest.mark.parametrize("kind,m", [("square", (1, 0)), ("square", (2, 1)), ("square", (3, 2)),
                                    ("hex", (1, 0)), ("hex", (2, 1))])
def test_effective_operator_reproduces_2d_stencil(kind, m):
    """Sampling a smooth plane wave on the lattice, the 1D operator equals the 2D stencil."""
    o = make_orientation(*m, kind)
    st_ = stencil(kind)
    offs, w, c = effective_operator(st_, o)
    rng = np.random.default_rng(1)
    f = lambda z: np.sin(1.7 * z + 0.3) + 0.2 * z * z  # noqa: E731
    for j in rng.integers(-20, 20, size=5):
        z = j * o.spacing
        one_d = c * f(z) + sum(wi * f(z + k * o.spacing) for k, wi in zip(offs, w))
        x, y = z * o.cos_psi, z * o.sin_psi
        two_d = st_.apply_2d(lambda a, b: f(a * o.cos_psi + b * o.sin_psi), x, y)
        assert one_d == pytest.approx(two_d, abs=1e-12)


def test_orientations_are_frozen():
    o = make_orientation(1, 0)
    with pytest.raises(Exception):
        o.m1 = 2
