"""Analytic pinning width, pinned-front origins and snakes-and-ladders curves.

Formulas are in scaled variables (s = 1, small parameter eps) with kappa1
the smallest real eigenvalue of the lattice, so square and hexagonal lattices
share one code path.  ``unscaled_width`` and friends convert to hatted
variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, exp, floor, pi, sqrt

import numpy as np

from .errors import EmptyWindow, NoPinnedFront
from .lattice import Orientation
from .model import FrontAsymptotics, builtin, chi as chi_phase, front_constants

BOUNDARY_RTOL = 1e-12


def _check_kind(o: Orientation, kind):
    if kind is not None and kind != o.kind:
        raise ValueError(f"orientation is {o.kind} but kind={kind!r}")


def _amplitude(fa: FrontAsymptotics, o: Orientation, eps: float, lambda_abs: float) -> float:
    """pi |Lambda| exp(-kappa1 Im(zeta)/eps) / eps^(2 gamma + 2)."""
    return (pi * lambda_abs * exp(-o.kappa1 * complex(fa.zeta).imag / eps)
            / eps ** (2 * fa.gamma + 2))


def pinning_width(fa: FrontAsymptotics, o: Orientation, kind=None, small_param: float = 1.0,
                  lambda_abs: float = 1.0) -> float:
    """Half-width of the pinning region in scaled r."""
    _check_kind(o, kind)
    if lambda_abs <= 0 or small_param <= 0:
        raise ValueError("lambda_abs and small_param must be positive")
    return 2 * _amplitude(fa, o, small_param, lambda_abs) / abs(fa.int_Fr)


def scaled_constants(model_id: str) -> FrontAsymptotics:
    return front_constants(builtin(model_id, 1.0), "analytic")


def unscaled_width(model_id: str, o: Orientation, s_hat: float, lambda_abs: float) -> float:
    """Pinning half-width in r_hat at the given s_hat (built-in models)."""
    spec = builtin(model_id)
    eps = spec.eps(s_hat)
    W = pinning_width(scaled_constants(model_id), o, None, eps, lambda_abs)
    return eps ** spec.r_exp * W


def width_cubic_const_unscaled(o: Orientation, s_hat: float, lambda_abs: float) -> float:
    """Closed form pi |Lambda| exp(-pi^2 sqrt(2 N / s_hat)) / sqrt(s_hat), square lattice."""
    n2 = o.m1 ** 2 + o.m2 ** 2
    return pi * lambda_abs * exp(-pi ** 2 * sqrt(2 * n2 / s_hat)) / sqrt(s_hat)


def width_cubic_quintic_unscaled(o: Orientation, s_hat: float, lambda_abs: float) -> float:
    """Closed form (16 pi |Lambda| / 3 s_hat) exp(-4 pi^2 sqrt(3 N) / 3 s_hat), square lattice."""
    n2 = o.m1 ** 2 + o.m2 ** 2
    return 16 * pi * lambda_abs / (3 * s_hat) * exp(-4 * pi ** 2 * sqrt(3 * n2) / (3 * s_hat))


@dataclass(frozen=True)
class SnakeParams:
    """Small parameter and the constant Lambda = |Lambda| exp(i arg)."""

    eps: float
    lambda_abs: float
    lambda_arg: float = pi


def _chi(fa, o, p: SnakeParams) -> float:
    return fa.chi if fa.chi is not None else chi_phase(fa, o, p.eps, p.lambda_arg)


def pinning_origins(fa: FrontAsymptotics, o: Orientation, kind=None, small_param: float = 1.0,
                    lambda_abs: float = 1.0, lambda_arg: float = pi,
                    delta_r: float = 0.0) -> tuple:
    """The two front origins z0 in [0, spacing) compatible with delta_r.

    Solves cos(kappa1 z0 + chi) = -sign(int_Fr) delta_r / width; the two
    origins coincide when |delta_r| equals the width.
    """
    _check_kind(o, kind)
    W = pinning_width(fa, o, None, small_param, lambda_abs)
    rhs = -np.sign(fa.int_Fr) * delta_r / W
    if abs(rhs) > 1 + BOUNDARY_RTOL:
        raise NoPinnedFront(f"|delta_r| = {abs(delta_r):.3g} exceeds the width {W:.3g}")
    rhs = float(np.clip(rhs, -1.0, 1.0))
    ch = chi_phase(fa, o, small_param, lambda_arg)
    theta = np.arccos(rhs)
    h = o.spacing
    z = sorted({float(np.mod((t - ch) / o.kappa1, h)) for t in (theta, -theta)})
    if len(z) == 1:
        z = z * 2
    return tuple(_snap(v, h) for v in z)


def _snap(z, h):
    # values within round-off of the period map to 0
    return 0.0 if abs(z - h) < 1e-12 * h else z


def snake_branch(fa: FrontAsymptotics, o: Orientation, params: SnakeParams, parity: str,
                 L_grid) -> list:
    """(L, delta_r) along the site-centred (even) or bond-centred (odd) snake."""
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    L = np.asarray(L_grid, dtype=float)
    if np.any(L <= 0) or np.any(np.diff(L) <= 0):
        raise ValueError("L_grid must be positive and increasing")
    kp = 0 if parity == "even" else 1
    dr = _delta_r(fa, o, params, o.kappa1 * L / (2 * params.eps ** 2) + kp * pi - _chi(fa, o, params), L)
    return list(zip(L.tolist(), dr.tolist()))


def _delta_r(fa, o, p: SnakeParams, phase, L):
    A = _amplitude(fa, o, p.eps, p.lambda_abs)
    skew = fa.alpha_plus ** 2 * fa.D_plus ** 2 * np.exp(-fa.alpha_plus * np.asarray(L) / p.eps)
    return -(2 / fa.int_Fr) * (A * np.cos(phase) + skew)


def rung_L(fa, o, params: SnakeParams, k: int) -> float:
    """Front separation of rung k: (chi/pi + k) 2 pi eps^2 / kappa1."""
    return (_chi(fa, o, params) / pi + k) * 2 * pi * params.eps ** 2 / o.kappa1


def rung_endpoints(fa, o, params: SnakeParams) -> tuple:
    """Origins z0 where the rung cosine is +1 and -1, reduced to [0, spacing).

    These are the bifurcation points with the two snakes; they sit at 0 and
    spacing/2 only when chi is a multiple of pi.
    """
    ch = _chi(fa, o, params)
    h = o.spacing
    return tuple(_snap(float(np.mod((j * pi - ch) / o.kappa1, h)), h) for j in (0, 1))


def ladder_rungs(fa: FrontAsymptotics, o: Orientation, params: SnakeParams, k_range=None,
                 L_window=None, n_samples: int = 65) -> list:
    """Sampled rungs for admissible k (L_k > 0, inside L_window if given)."""
    if k_range is None:
        if L_window is None:
            raise ValueError("give k_range or L_window")
        ks = rung_indices(fa, o, params, L_window)
    else:
        ks = list(k_range)
    rungs = []
    z = np.linspace(0.0, o.spacing, n_samples, endpoint=False)
    ends = rung_endpoints(fa, o, params)
    ch = _chi(fa, o, params)
    for k in ks:
        L = rung_L(fa, o, params, k)
        if L <= 0 or (L_window is not None and not L_window[0] <= L <= L_window[1]):
            continue
        zz = np.union1d(z, ends)
        dr = _delta_r(fa, o, params, o.kappa1 * zz + ch, L)
        end_dr = _delta_r(fa, o, params, o.kappa1 * np.array(ends) + ch, L)
        rungs.append({"k": int(k), "L": L, "samples": list(zip(zz.tolist(), dr.tolist())),
                      "endpoints": list(zip(ends, end_dr.tolist()))})
    if not rungs:
        raise EmptyWindow("no admissible rung index in the requested range")
    return rungs


def rung_indices(fa, o, params: SnakeParams, L_window) -> list:
    lo, hi = L_window
    if hi < lo:
        raise ValueError("empty L window")
    ch = _chi(fa, o, params)
    scale = 2 * pi * params.eps ** 2 / o.kappa1
    k_lo = ceil(lo / scale - ch / pi)
    k_hi = floor(hi / scale - ch / pi)
    return [k for k in range(k_lo, k_hi + 1) if rung_L(fa, o, params, k) > 0]


def proxy_measure(L, eps: float, u_minus: float, u_plus: float, domain: float):
    """Linear stand-in for sum(u): u_minus * domain + (u_plus - u_minus) L / eps.

    Only meant for overlaying analytic curves on continuation output.
    """
    return u_minus * domain + (u_plus - u_minus) * np.asarray(L) / eps


@dataclass
class SnakingPrediction:
    width: float
    snake_site: list
    snake_bond: list
    rungs: list
    chi: float = 0.0
    meta: dict = field(default_factory=dict)


def snaking_prediction(fa: FrontAsymptotics, o: Orientation, params: SnakeParams, L_grid,
                       L_window=None, n_samples: int = 65) -> SnakingPrediction:
    L_grid = np.asarray(L_grid, dtype=float)
    window = L_window or (float(L_grid[0]), float(L_grid[-1]))
    return SnakingPrediction(
        pinning_width(fa, o, None, params.eps, params.lambda_abs),
        snake_branch(fa, o, params, "even", L_grid),
        snake_branch(fa, o, params, "odd", L_grid),
        ladder_rungs(fa, o, params, L_window=window, n_samples=n_samples),
        _chi(fa, o, params),
    )
