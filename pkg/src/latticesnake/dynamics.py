"""Explicit time stepping of du/dt = Delta u - F(u; r_hat, s_hat) on the effective lattice.

Used to check that fronts stay put inside the pinning region and to locate
the depinning thresholds by bisection on r_hat.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuation import LatticeProblem, front_seed, jacobian, make_problem, newton, residual
from .errors import BracketInvalid, Instability, NoConvergence, NoFront, SingularJacobian
from .model import NonlinearitySpec, maxwell

# RK4 is stable on the negative real axis down to about -2.785
RK4_REAL_LIMIT = 2.78
BLOWUP_FACTOR = 1e3
HOP_FRACTION = 0.5


@dataclass
class Trajectory:
    times: list
    front_positions: list
    drift_velocity: float
    pinned: bool
    displacement: float = 0.0
    hopped: bool = False


def front_position(u, levels, spacing: float = 1.0) -> float:
    """z of the single crossing of the mid-level, by linear interpolation."""
    mid = 0.5 * (levels[0] + levels[1])
    d = np.asarray(u, dtype=float) - mid
    sgn = np.sign(d)
    nz = np.nonzero(sgn)[0]
    if nz.size == 0:
        raise NoFront("state sits exactly on the mid-level")
    # zero samples are absorbed into the neighbouring sign change
    changes = np.nonzero(sgn[nz][1:] != sgn[nz][:-1])[0]
    if changes.size != 1:
        raise NoFront(f"expected one mid-level crossing, found {changes.size}")
    i, k = nz[changes[0]], nz[changes[0] + 1]
    if k - i > 1:
        return float((i + 1) * spacing)
    return float((i + d[i] / (d[i] - d[k])) * spacing)


def stable_dt(p: LatticeProblem, u, r: float | None = None) -> float:
    """Largest RK4 step allowed by the spectral radius bound of the linearisation."""
    r = p.r if r is None else r
    fu = np.max(np.abs(p.spec.F_u(u, r, p.spec.s)))
    return RK4_REAL_LIMIT / (np.sum(np.abs(p.weights)) + abs(p.center_weight) + fu)


def _rhs(p, u, r):
    return residual(p, u, r)


def evolve(p: LatticeProblem, u0, dt: float, T: float, r: float | None = None,
           sample_every: int | None = None, stop_after_hop: bool = False,
           v_tol: float | None = None) -> Trajectory:
    """Classical RK4 up to time T, sampling the front position.

    ``pinned`` means the drift fitted over the trailing half of the samples
    is below ``v_tol`` (default: a thousandth of a spacing over the run).
    With ``stop_after_hop`` the run ends as soon as the front has moved half
    a spacing.
    """
    r = p.r if r is None else r
    m = maxwell(p.spec)
    levels = (m.u_minus, m.u_plus)
    h = p.o.spacing
    u = np.array(u0, dtype=float)
    z0 = front_position(u, levels, h)
    n_steps = int(np.ceil(T / dt))
    dt = T / n_steps
    every = sample_every or max(1, n_steps // 2000)
    scale = max(1.0, float(np.max(np.abs(u))))
    times, pos = [0.0], [z0]
    for n in range(1, n_steps + 1):
        k1 = _rhs(p, u, r)
        k2 = _rhs(p, u + 0.5 * dt * k1, r)
        k3 = _rhs(p, u + 0.5 * dt * k2, r)
        k4 = _rhs(p, u + dt * k3, r)
        u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if n % every == 0 or n == n_steps:
            big = np.max(np.abs(u))
            if not np.isfinite(big) or big > BLOWUP_FACTOR * scale:
                raise Instability(f"solution blew up at t={n * dt:.4g}; dt={dt:.3g} too large "
                                  f"(bound {stable_dt(p, u0, r):.3g})")
            times.append(n * dt)
            try:
                pos.append(front_position(u, levels, h))
            except NoFront:
                # grid-scale oscillation splits the front before the norm blows up
                if dt > stable_dt(p, u0, r):
                    raise Instability(f"front broke up at t={n * dt:.4g}; dt={dt:.3g} above "
                                      f"bound {stable_dt(p, u0, r):.3g}") from None
                raise
            if stop_after_hop and abs(pos[-1] - z0) >= HOP_FRACTION * h:
                break
    t_arr, z_arr = np.array(times), np.array(pos)
    half = t_arr >= 0.5 * t_arr[-1]
    if half.sum() >= 2:
        v = float(np.polyfit(t_arr[half], z_arr[half], 1)[0])
    else:
        v = float((z_arr[-1] - z_arr[0]) / max(t_arr[-1], dt))
    v_tol = 1e-3 * h / T if v_tol is None else v_tol
    disp = float(z_arr[-1] - z_arr[0])
    hopped = bool(np.max(np.abs(z_arr - z_arr[0])) >= HOP_FRACTION * h)
    pinned = abs(v) < v_tol and not hopped
    return Trajectory(times, pos, v, pinned, disp, hopped)


def stable_front(spec: NonlinearitySpec, o, J: int | None = None, r: float | None = None):
    """Linearly stable pinned front near the Maxwell point, as (problem, state)."""
    p = make_problem(spec, o, J, r)
    for shift in (0.0, 0.5, 0.25, 0.75):
        try:
            u = newton(p, front_seed(p, p.J / 4 + shift))
        except (NoConvergence, SingularJacobian):
            continue
        lam = np.linalg.eigvals(jacobian(p, u).toarray()).real.max()
        if lam < 0:
            return p, u
    raise NoConvergence("no linearly stable pinned front found from the seeds tried")


def classify(p: LatticeProblem, u0, r: float, T: float, dt: float | None = None) -> Trajectory:
    """Run at r from a pinned state and stop early once the front hops.

    Threshold searches read ``hopped`` rather than ``pinned``: just inside the
    region the front relaxes slowly to its new rest position, which a drift
    test over a finite run cannot tell apart from depinning.
    """
    dt = dt or 0.9 * stable_dt(p, u0, r)
    return evolve(p, u0, dt, T, r, stop_after_hop=True)


def depinning_threshold(p: LatticeProblem, side: str, bracket, u0=None, T: float = 1e4,
                        tol: float | None = None, dt: float | None = None) -> float:
    """Bisect r_hat between a pinned and a depinned value.

    ``bracket`` = (inner, outer): the front must not hop at ``inner`` and
    must hop within T at ``outer``.  Bisection stops at ``tol`` (default: bracket
    span / 50).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    lo, hi = (float(v) for v in bracket)
    rM = maxwell(p.spec).r_M
    if side == "right" and not lo < hi or side == "left" and not hi < lo:
        raise BracketInvalid("bracket must run from the inner to the outer value")
    if u0 is None:
        _p, u0 = stable_front(p.spec, p.o, p.J, rM)
    tol = abs(hi - lo) / 50 if tol is None else tol
    if classify(p, u0, lo, T, dt).hopped:
        raise BracketInvalid(f"front hops at inner value {lo:.6g}")
    if not classify(p, u0, hi, T, dt).hopped:
        raise BracketInvalid(f"front does not hop at outer value {hi:.6g} within T={T:g}")
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if not classify(p, u0, mid, T, dt).hopped:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def drift_sweep(p: LatticeProblem, u0, r_values, T: float, dt: float | None = None) -> list:
    """Mean front velocity (z per unit time) at each r_hat, from the hop time."""
    out = []
    for r in r_values:
        tr = classify(p, u0, r, T, dt)
        out.append(tr.displacement / tr.times[-1] if tr.hopped else 0.0)
    return out
