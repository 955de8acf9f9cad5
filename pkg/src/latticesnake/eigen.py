"""Zeros of the lattice symbol.

Real eigenvalues come in closed form.  The smallest complex root is polished
by Newton from an asymptotic seed, and its minimality is checked with an
argument-principle count over the quarter box that would contain any smaller
root.  The same counting machinery drives a quadtree search when the seed
fails or when no seed formula applies (hexagonal lattice).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .errors import NoComplexBranch, SearchExhausted
from .lattice import Orientation, Stencil, stencil, symbol, symbol_derivative

ROOT_TOL = 1e-10
NEWTON_MAXITER = 100
DEDUP_RTOL = 1e-8
# keep exp(Im(kappa) * |delta|) well inside double range
IM_EXP_CAP = 600.0
JOINT_CANDIDATE_LEVEL = 0.3
# bottom edge of counting boxes, relative to box size; keeps the contour
# clear of the double zero at the origin
BOX_FLOOR = 1e-3


@dataclass
class EigenvalueSet:
    real_family: list
    complex_roots: list
    search_box: tuple
    notes: dict = field(default_factory=dict)


def _check_kind(o: Orientation, kind):
    if kind is not None and kind != o.kind:
        raise ValueError(f"orientation is {o.kind} but kind={kind!r}")


def real_family(o: Orientation, kind=None, M_max: int = 1) -> list:
    """kappa_M = M * 2*pi/spacing for M = 1..M_max."""
    _check_kind(o, kind)
    if M_max < 1:
        raise ValueError("M_max must be >= 1")
    return [M * o.kappa1 for M in range(1, M_max + 1)]


def complex_seed(o: Orientation) -> complex:
    """Asymptotic guess for the smallest complex root (square lattice)."""
    if o.kind != "square":
        raise NoComplexBranch("seed formulas exist only for the square lattice")
    a, b = sorted((abs(o.m1), abs(o.m2)))
    m1, m2 = b, a
    if m2 == 0 or m2 == m1:
        raise NoComplexBranch(f"orientation ({o.m1}, {o.m2}) lies on a symmetry axis")
    t = m2 / m1
    amp = sqrt(1.0 + t * t)
    if t <= 1.0 - t:
        return complex(2 * pi * amp, 2 * pi * amp * t)
    return complex(pi * amp * (2 + (1 - t)), pi * amp * (1 - t))


def _to_quadrant(k: complex) -> complex:
    # symbol is even and conjugate-symmetric
    return complex(abs(k.real), abs(k.imag))


def _scale(st: Stencil, o: Orientation, k) -> np.ndarray:
    dmax = np.max(np.abs(st.dx * o.cos_psi + st.dy * o.sin_psi))
    return np.exp(np.abs(np.imag(k)) * dmax) * np.sum(np.abs(st.weights))


def newton_root(st: Stencil, o: Orientation, k0: complex, tol: float = ROOT_TOL,
                maxiter: int = NEWTON_MAXITER, fun=None, dfun=None):
    """Damped Newton on the symbol; returns the root or None."""
    f = fun or (lambda k: symbol(st, o, k))
    df = dfun or (lambda k: symbol_derivative(st, o, k))
    k = complex(k0)
    fk = f(k)
    for _ in range(maxiter):
        if abs(fk) < tol:
            return k
        d = df(k)
        if d == 0 or not np.isfinite(d):
            return None
        step = fk / d
        lam = 1.0
        while lam > 1e-6:
            kn = k - lam * step
            fn = f(kn)
            if np.isfinite(fn) and abs(fn) < abs(fk):
                break
            lam *= 0.5
        else:
            return None
        k, fk = kn, fn
    return k if abs(fk) < tol else None


def _edge_phase(f, a: complex, b: complex, n0: int = 64, nmax: int = 1 << 16) -> float:
    """Total argument change of f along the segment a -> b."""
    n = n0
    while True:
        t = np.linspace(0.0, 1.0, n + 1)
        v = f(a + (b - a) * t)
        if np.any(v == 0) or not np.all(np.isfinite(v)):
            raise SearchExhausted("symbol vanishes or overflows on a contour edge")
        dphi = np.angle(v[1:] / v[:-1])
        if np.max(np.abs(dphi)) < 0.5 or n >= nmax:
            return float(np.sum(dphi))
        n *= 4


def winding_count(st: Stencil, o: Orientation, x0, x1, y0, y1) -> int:
    """Number of symbol zeros inside the rectangle, by the argument principle."""
    f = lambda k: symbol(st, o, k)
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    total = sum(_edge_phase(f, corners[i], corners[(i + 1) % 4]) for i in range(4))
    return int(round(total / (2 * pi)))


def _roots_in_box(st, o, x0, x1, y0, y1, depth=0, count=None):
    if count is None:
        count = winding_count(st, o, x0, x1, y0, y1)
    if count <= 0:
        return []
    w, h = x1 - x0, y1 - y0
    if count == 1 or depth > 30:
        k = newton_root(st, o, complex(x0 + w / 2, y0 + h / 2))
        pad = 1e-9 * max(1.0, abs(complex(x1, y1)))
        inside = k is not None and (x0 - pad <= k.real <= x1 + pad
                                    and y0 - pad <= k.imag <= y1 + pad)
        if inside and abs(k) > BOX_FLOOR:
            return [k]
        if depth > 30:
            raise SearchExhausted(
                f"argument principle reports {count} root(s) near {complex(x0, y0)} "
                "but Newton polishing failed"
            )
    # split the longer side; nudge the cut so it avoids an exact root
    out = []
    if w >= h:
        xm = x0 + w * 0.5001
        parts = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
    else:
        ym = y0 + h * 0.5001
        parts = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
    for p in parts:
        out.extend(_roots_in_box(st, o, *p, depth=depth + 1))
    return out


def _dedup(roots):
    out = []
    for k in sorted(roots, key=abs):
        if all(abs(k - q) > DEDUP_RTOL * max(1.0, abs(q)) for q in out):
            out.append(k)
    return out


def _im_cap(st: Stencil, o: Orientation) -> float:
    dmax = np.max(np.abs(st.dx * o.cos_psi + st.dy * o.sin_psi))
    return IM_EXP_CAP / dmax


def complex_roots_upto(o: Orientation, R: float, st: Stencil | None = None) -> list:
    """All roots in {0 <= Re <= R, delta <= Im <= R}, ascending modulus."""
    st = st or stencil(o.kind)
    y0 = BOX_FLOOR * R
    y1 = min(R, _im_cap(st, o))
    return _dedup(_roots_in_box(st, o, 0.0, R, y0, y1))


def complex_smallest(o: Orientation, kind=None):
    """Smallest-modulus root in Re>0, Im>0, or None when there is none.

    Absence is concluded from a zero argument-principle count over a box of
    size 3*kappa1, so it is a checked statement rather than a timeout.
    """
    _check_kind(o, kind)
    st = stencil(o.kind)
    cand = None
    if o.kind == "square" and not o.is_symmetry_axis:
        k = newton_root(st, o, complex_seed(o))
        if k is not None:
            k = _to_quadrant(k)
            if k.imag > 1e-8 * abs(k):
                cand = k
    if cand is not None:
        # every smaller root lives in the square [0,|K|] x (0,|K|]
        R = abs(cand) * (1 + 1e-6)
        if cand.imag <= BOX_FLOOR * R:
            return complex(cand)
        roots = complex_roots_upto(o, R, st)
        roots = [k for k in roots if abs(k) <= abs(cand) * (1 + 1e-9)] or [cand]
        return complex(min(roots + [cand], key=abs))
    R_max = 3.0 * o.kappa1
    R = pi
    while True:
        R = min(R, R_max)
        roots = complex_roots_upto(o, R, st)
        if roots:
            return complex(roots[0])
        if R >= R_max:
            break
        R *= 2
    if o.kind == "square" and not o.is_symmetry_axis:
        raise SearchExhausted(
            f"no complex root found for ({o.m1}, {o.m2}) within |kappa| <= {R_max:.4g}"
        )
    return None


def joint_solution_scan(o: Orientation, box=None, grid_n: int = 400) -> dict:
    """Search for double roots (symbol and its derivative both zero) off the real axis.

    Every local minimum of the scaled residual |symbol| + |symbol'| on the
    grid seeds Newton on the symbol and on its derivative; a candidate is a
    joint root only if the other function also vanishes there.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    st = stencil(o.kind)
    if box is None:
        box = (3 * o.kappa1, 3 * o.kappa1)
    re_max, im_max = box
    im_max = min(im_max, _im_cap(st, o))
    xs = np.linspace(0.0, re_max, grid_n)
    ys = np.linspace(im_max / grid_n, im_max, grid_n)
    K = xs[None, :] + 1j * ys[:, None]
    sc = _scale(st, o, K)
    h = (np.abs(symbol(st, o, K)) + np.abs(symbol_derivative(st, o, K))) / sc
    inner = h[1:-1, 1:-1]
    is_min = np.ones_like(inner, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= inner <= h[1 + di:h.shape[0] - 1 + di, 1 + dj:h.shape[1] - 1 + dj]
    # away from roots the scaled residual sits on a plateau near 1/2
    ii, jj = np.nonzero(is_min & (inner < JOINT_CANDIDATE_LEVEL))
    f = lambda k: symbol(st, o, k)
    df = lambda k: symbol_derivative(st, o, k)
    d2 = lambda k: np.sum(-(st.dx * o.cos_psi + st.dy * o.sin_psi) ** 2 * st.weights
                          * np.exp(1j * k * (st.dx * o.cos_psi + st.dy * o.sin_psi)))
    joint, checked = [], 0
    for i, j in zip(ii + 1, jj + 1):
        k0 = complex(K[i, j])
        for g, dg, other in ((f, df, df), (df, d2, f)):
            checked += 1
            s = float(_scale(st, o, k0))
            k = newton_root(st, o, k0, tol=1e-12 * s, fun=g, dfun=dg)
            if k is None or abs(k.imag) < 1e-8 * max(1.0, abs(k)):
                continue
            s = float(_scale(st, o, k))
            if abs(other(k)) < 1e-8 * s and abs(g(k)) < 1e-8 * s:
                joint.append(_to_quadrant(k))
    return {"joint_roots": _dedup(joint), "candidates_checked": checked,
            "box": (re_max, im_max), "grid_n": grid_n}


def eigenvalue_set(o: Orientation, M_max: int = 3) -> EigenvalueSet:
    st = stencil(o.kind)
    k = complex_smallest(o)
    roots = [] if k is None else [k]
    for r in roots:
        assert abs(symbol(st, o, r)) < ROOT_TOL
    return EigenvalueSet(real_family(o, M_max=M_max), roots,
                         (3 * o.kappa1, min(3 * o.kappa1, _im_cap(st, o))))
