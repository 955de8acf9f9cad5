"""Steady states of the rotated one-dimensional lattice equation.

Unknowns live on the effective lattice j = 0..J-1 (z = j * spacing) and obey
0 = Delta u_j - F(u_j; r_hat, s_hat) with mirror boundary conditions.  The
left mirror sits on a site (ghost -k reads k) or on a bond (ghost -k reads
k-1), giving site- and bond-centred localised states; the right mirror is
always a site.  Jacobians are banded and factorised with sparse LU so that
pivots can be inspected near folds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, sqrt

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import (InsufficientFolds, NoConvergence, SingularJacobian, StepUnderflow)
from .lattice import Orientation, effective_operator, stencil
from .model import NonlinearitySpec, front_profile, maxwell

RESIDUAL_TOL = 1e-10
PIVOT_RTOL = 1e-12
FOLD_RTOL = 1e-12
# domain length in front decay lengths, and the stop margin near the far end
DOMAIN_DECAY_LENGTHS = 425.0
BOUNDARY_DECAY_LENGTHS = 10.0
NONMONOTONE_STEPS = 5


@dataclass(eq=False)
class LatticeProblem:
    """Steady lattice equation on J effective sites (hatted variables)."""

    spec: NonlinearitySpec
    o: Orientation
    J: int
    r: float = 0.0
    bc: str = "symmetric"
    center: str = "site"
    index_offsets: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    center_weight: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.bc != "symmetric":
            raise ValueError("only symmetric (mirror) boundary conditions are supported")
        if self.center not in ("site", "bond"):
            raise ValueError("center must be 'site' or 'bond'")
        self.index_offsets, self.weights, self.center_weight = effective_operator(
            stencil(self.o.kind), self.o)
        b = int(np.max(np.abs(self.index_offsets)))
        if self.J <= 2 * b + 1:
            raise ValueError(f"J={self.J} too small for stencil half-width {b}")
        self._cols = [self.reflect(np.arange(self.J) + m) for m in self.index_offsets]

    @property
    def bandwidth(self) -> int:
        return int(np.max(np.abs(self.index_offsets)))

    def reflect(self, i):
        """Map ghost indices back into 0..J-1 through the two mirrors."""
        i = np.asarray(i)
        last = self.J - 1
        lo = -i if self.center == "site" else -i - 1
        i = np.where(i < 0, lo, i)
        return np.where(i > last, 2 * last - i, i)

    def with_r(self, r: float) -> "LatticeProblem":
        return LatticeProblem(self.spec, self.o, self.J, r, self.bc, self.center)

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.J) * self.o.spacing


def alpha_hat(spec: NonlinearitySpec) -> float:
    """Decay rate of the front tail toward u_plus, per unit z."""
    m = maxwell(spec)
    return sqrt(spec.F_u(m.u_plus, m.r_M, spec.s))


def default_J(spec: NonlinearitySpec, o: Orientation) -> int:
    return int(ceil(DOMAIN_DECAY_LENGTHS / (alpha_hat(spec) * o.spacing)))


def make_problem(spec: NonlinearitySpec, o: Orientation, J: int | None = None,
                 r: float | None = None, center: str = "site") -> LatticeProblem:
    J = default_J(spec, o) if J is None else int(J)
    r = maxwell(spec).r_M if r is None else float(r)
    return LatticeProblem(spec, o, J, r, "symmetric", center)


def residual(p: LatticeProblem, u, r: float | None = None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (p.J,):
        raise ValueError(f"expected {p.J} values, got shape {u.shape}")
    r = p.r if r is None else r
    lap = p.center_weight * u
    for cols, w in zip(p._cols, p.weights):
        lap = lap + w * u[cols]
    return lap - p.spec.F(u, r, p.spec.s)


def jacobian(p: LatticeProblem, u, r: float | None = None) -> sp.csc_matrix:
    r = p.r if r is None else r
    rows = np.arange(p.J)
    data = [p.center_weight - p.spec.F_u(u, r, p.spec.s)]
    ri, ci = [rows], [rows]
    for cols, w in zip(p._cols, p.weights):
        ri.append(rows)
        ci.append(cols)
        data.append(np.full(p.J, w))
    return sp.csc_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                         shape=(p.J, p.J))


def dres_dr(p: LatticeProblem, u, r: float | None = None) -> np.ndarray:
    r = p.r if r is None else r
    return -np.broadcast_to(p.spec.F_r(u, r, p.spec.s), (p.J,)).astype(float)


def _factor(A) -> object:
    # natural ordering keeps the band (and the border) free of fill-in
    try:
        lu = splu(sp.csc_matrix(A), permc_spec="NATURAL")
    except RuntimeError as exc:  # exactly singular
        raise SingularJacobian(str(exc)) from exc
    d = np.abs(lu.U.diagonal())
    if d.min() < PIVOT_RTOL * d.max():
        raise SingularJacobian(f"pivot ratio {d.min() / d.max():.2e} below {PIVOT_RTOL}")
    return lu


def newton(p: LatticeProblem, u0, r: float | None = None, tol: float = RESIDUAL_TOL,
           maxiter: int = 50) -> np.ndarray:
    """Newton at fixed r with a watchdog; the Jacobian is checked even at a converged start.

    Full steps are kept while the residual stays below its starting value,
    allowing up to ``NONMONOTONE_STEPS`` increases: damping alone tends to
    crawl along the slow translation mode of a front.  Otherwise the step is
    backtracked on the 2-norm of the residual.
    """
    u = np.array(u0, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("initial guess is not finite")
    f = residual(p, u, r)
    nrm = np.max(np.abs(f))
    ceiling = np.linalg.norm(f)
    budget = NONMONOTONE_STEPS
    for _ in range(maxiter + 1):
        lu = _factor(jacobian(p, u, r))
        if nrm < tol:
            # one more step tightens round-off without risk
            du = lu.solve(-f)
            un = u + du
            fn = residual(p, un, r)
            return un if np.max(np.abs(fn)) < nrm else u
        du = lu.solve(-f)
        n2 = np.linalg.norm(f)
        un = u + du
        fn = residual(p, un, r)
        nf = np.linalg.norm(fn)
        if not (np.isfinite(nf) and (nf < n2 or budget > 0 and nf < ceiling)):
            lam = 0.5
            while lam > 1e-4:
                un = u + lam * du
                fn = residual(p, un, r)
                nf = np.linalg.norm(fn)
                if np.isfinite(nf) and nf < (1 - 1e-4 * lam) * n2:
                    break
                lam *= 0.5
            else:
                raise NoConvergence(f"line search failed at residual {nrm:.3g}")
        elif nf >= n2:
            budget -= 1
        u, f, nrm = un, fn, np.max(np.abs(fn))
    raise NoConvergence(f"residual {nrm:.3g} after {maxiter} iterations")


def front_seed(p: LatticeProblem, position: float | None = None) -> np.ndarray:
    """u_plus plateau on the left joined to u_minus by a leading-order front.

    The default centre is a whole site: off-site seeds excite the slow
    translation mode and cost Newton several extra iterations.
    """
    pos = round(p.J / 4) if position is None else position
    z = (np.arange(p.J) - pos) * p.o.spacing
    if p.spec.builtin:
        return np.asarray(front_profile(p.spec, -z), dtype=float)
    m = maxwell(p.spec)
    a = alpha_hat(p.spec)
    return m.u_minus + (m.u_plus - m.u_minus) * 0.5 * (1 + np.tanh(-a * z / 2))


def independent_residual(p: LatticeProblem, u, r: float | None = None) -> np.ndarray:
    """Residual recomputed from the planar stencil through site coordinates.

    Each planar neighbour is located by projecting its (x, y) position onto
    the front normal and rounding to the nearest effective site, so this
    path shares neither the merged offsets nor the weights of ``residual``.
    """
    r = p.r if r is None else r
    st = stencil(p.o.kind)
    c, s, h = p.o.cos_psi, p.o.sin_psi, p.o.spacing
    u = np.asarray(u, dtype=float)
    j = np.arange(p.J)
    x, y = j * h * c, j * h * s
    out = st.center_weight * u
    for dx, dy, w in st.offsets:
        jj = np.rint(((x + dx) * c + (y + dy) * s) / h).astype(int)
        out = out + w * u[p.reflect(jj)]
    return out - p.spec.F(u, r, p.spec.s)


def mirror_to_full(p: LatticeProblem, u) -> tuple:
    """Unfold a half-domain state onto the full symmetric domain."""
    u = np.asarray(u, dtype=float)
    if p.center == "site":
        full = np.concatenate([u[:0:-1], u])
    else:
        full = np.concatenate([u[::-1], u])
    q = LatticeProblem(p.spec, p.o, len(full), p.r, "symmetric", "site")
    return q, full


def front_index(u, levels) -> float:
    """Fractional index of the last mid-level crossing, or nan if none."""
    mid = 0.5 * (levels[0] + levels[1])
    d = np.asarray(u) - mid
    k = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
    k = k[d[k] != d[k + 1]]
    if k.size == 0:
        return float("nan")
    i = k[-1]
    return float(i + d[i] / (d[i] - d[i + 1]))


@dataclass
class StepPolicy:
    ds0: float = 1e-3
    ds_min: float = 1e-9
    ds_max: float = 1e-2
    grow: float = 1.3
    fast_iters: int = 3
    max_newton: int = 8
    tol: float = RESIDUAL_TOL


@dataclass
class StopPolicy:
    max_points: int = 20000
    max_folds: int = 14
    boundary_sites: float | None = None


@dataclass
class BranchPoint:
    u: np.ndarray
    r: float
    measure: float
    tangent_r_sign: int


@dataclass
class Fold:
    r: float
    index: int


@dataclass
class ContinuationBranch:
    points: list
    folds: list
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return np.array([q.r for q in self.points])

    @property
    def measure(self) -> np.ndarray:
        return np.array([q.measure for q in self.points])


class _Bordered:
    """Newton corrector for {residual = 0, t.(x - x0) = ds} in x = (u, r)."""

    def __init__(self, p: LatticeProblem, tol: float):
        self.p, self.tol = p, tol

    def matrix(self, u, r, t):
        p, J = self.p, self.p.J
        rows = np.arange(J)
        ri = [rows, rows, np.full(J + 1, J)]
        ci = [rows, np.full(J, J), np.arange(J + 1)]
        data = [p.center_weight - p.spec.F_u(u, r, p.spec.s), dres_dr(p, u, r), t]
        for cols, w in zip(p._cols, p.weights):
            ri.append(rows)
            ci.append(cols)
            data.append(np.full(J, w))
        return sp.csc_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                             shape=(J + 1, J + 1))

    def tangent(self, u, r, t_prev):
        A = self.matrix(u, r, t_prev)
        rhs = np.zeros(self.p.J + 1)
        rhs[-1] = 1.0
        t = _factor(A).solve(rhs)
        t /= np.linalg.norm(t)
        return t if t @ t_prev >= 0 else -t

    def correct(self, x0, t, ds, x_pred, maxit):
        J = self.p.J
        x = x_pred.copy()
        for it in range(1, maxit + 1):
            u, r = x[:J], x[J]
            f = np.append(residual(self.p, u, r), t @ (x - x0) - ds)
            try:
                lu = _factor(self.matrix(u, r, t))
            except SingularJacobian:
                return None, it
            x = x - lu.solve(f)
            if not np.all(np.isfinite(x)):
                return None, it
            fr = residual(self.p, x[:J], x[J])
            if np.max(np.abs(fr)) < self.tol * 1e-2 or (
                    np.max(np.abs(fr)) < self.tol and np.max(np.abs(lu.solve(f))) < 1e-12):
                return x, it
        fr = np.max(np.abs(residual(self.p, x[:J], x[J])))
        return (x, maxit) if fr < self.tol else (None, maxit)


def _stop_site(p: LatticeProblem, stop: StopPolicy) -> float:
    if stop.boundary_sites is not None:
        return p.J - 1 - stop.boundary_sites
    return p.J - 1 - BOUNDARY_DECAY_LENGTHS / (alpha_hat(p.spec) * p.o.spacing)


def continue_branch(p: LatticeProblem, start, r_start: float | None = None,
                    step: StepPolicy | None = None, stop: StopPolicy | None = None,
                    direction: int = 1, t0=None, event=None) -> ContinuationBranch:
    """Pseudo-arclength continuation in r from a converged state.

    The first step moves the last front outwards (growing the u_plus
    plateau) when ``direction`` is +1, or grows sum(u) if there is no front,
    or along ``t0`` (a vector in (u, r)) when given.  ``event`` maps a state
    to a float; the run ends at its first sign change, refined by bisection.
    """
    step = step or StepPolicy()
    stop = stop or StopPolicy()
    J = p.J
    r0 = p.r if r_start is None else r_start
    u0 = np.asarray(start, dtype=float)
    if np.max(np.abs(residual(p, u0, r0))) >= step.tol:
        raise NoConvergence("start state is not converged")
    m = maxwell(p.spec)
    levels = (m.u_minus, m.u_plus)
    edge = _stop_site(p, stop)
    bc = _Bordered(p, step.tol)

    x = np.append(u0, r0)
    # initial tangent: null vector of [Ju, Jr] with a generic border
    seed = np.zeros(J + 1)
    seed[-1] = 1.0
    if t0 is None:
        t = bc.tangent(u0, r0, seed + 1e-3 * np.ones(J + 1))
        if np.sign(_outward(u0, t[:J], levels)) != np.sign(direction):
            t = -t
    else:
        t0 = _unit(np.asarray(t0, dtype=float))
        t = bc.tangent(u0, r0, t0)
    g_prev = event(u0) if event is not None else None
    pts = [BranchPoint(u0.copy(), float(r0), float(u0.sum()), int(np.sign(t[J])))]
    folds = []
    ds = step.ds0
    x_prev, t_prev = None, t
    reason = "max_points"
    while len(pts) < stop.max_points:
        d = t_prev if x_prev is None else _unit(x - x_prev)
        xn, its = bc.correct(x, d, ds, x + ds * d, step.max_newton)
        if xn is None:
            ds *= 0.5
            if ds < step.ds_min:
                raise StepUnderflow(f"step fell below {step.ds_min} at r={x[J]:.6g}")
            continue
        tn = bc.tangent(xn[:J], xn[J], t_prev)
        if np.sign(tn[J]) != np.sign(t_prev[J]) and t_prev[J] != 0:
            folds.append(Fold(_refine_fold(bc, x, d, ds, step), len(pts)))
        if event is not None:
            g = event(xn[:J])
            if np.sign(g) != np.sign(g_prev):
                xe = _refine_event(bc, x, d, ds, event, step)
                te = bc.tangent(xe[:J], xe[J], t_prev)
                pts.append(BranchPoint(xe[:J].copy(), float(xe[J]), float(xe[:J].sum()),
                                       int(np.sign(te[J]))))
                reason = "event"
                break
            g_prev = g
        pts.append(BranchPoint(xn[:J].copy(), float(xn[J]), float(xn[:J].sum()),
                               int(np.sign(tn[J]))))
        x_prev, x, t_prev = x, xn, tn
        if its <= step.fast_iters:
            ds = min(ds * step.grow, step.ds_max)
        if len(folds) >= stop.max_folds:
            reason = "max_folds"
            break
        if front_index(xn[:J], levels) > edge:
            reason = "boundary"
            break
    meta = {"stop_reason": reason, "residual_tol": step.tol, "fold_rtol": FOLD_RTOL,
            "ds_bounds": [step.ds_min, step.ds_max], "J": J, "center": p.center}
    return ContinuationBranch(pts, folds, meta)


def _outward(u, du, levels) -> float:
    """Rate at which the last front moves along du; sum(du) when u has no front."""
    z0 = front_index(u, levels)
    if np.isnan(z0):
        return float(du.sum())
    h = 1e-6 / max(np.max(np.abs(du)), 1e-300)
    z1 = front_index(u + h * du, levels)
    return float(z1 - z0) if np.isfinite(z1) and z1 != z0 else float(du.sum())


def _unit(v):
    return v / np.linalg.norm(v)


def _refine_fold(bc: _Bordered, x0, d, ds, step: StepPolicy) -> float:
    """Bisect the arclength step on the sign of the tangent r-component."""
    J = bc.p.J
    t0 = bc.tangent(x0[:J], x0[J], d)
    s0 = np.sign(t0[J])
    lo, hi = 0.0, ds
    r_lo, r_hi = x0[J], None
    xs = {}
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        xm, _its = bc.correct(x0, d, mid, x0 + mid * d, 2 * step.max_newton)
        if xm is None:
            break
        tm = bc.tangent(xm[:J], xm[J], d)
        if np.sign(tm[J]) == s0:
            lo, r_lo = mid, xm[J]
        else:
            hi, r_hi = mid, xm[J]
        xs[mid] = xm[J]
        if r_hi is not None and abs(r_hi - r_lo) < FOLD_RTOL:
            break
    cands = [r_lo] + ([r_hi] if r_hi is not None else [])
    return float(max(cands) if s0 > 0 else min(cands))


def _bisect_arclength(bc: _Bordered, x0, d, ds, step: StepPolicy, side) -> tuple:
    """Shrink [0, ds] along d onto the switch of side(x) from its value at x0."""
    s0 = side(x0)
    lo, hi = 0.0, ds
    x_lo, x_hi = x0, None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        xm, _its = bc.correct(x0, d, mid, x0 + mid * d, 2 * step.max_newton)
        if xm is None:
            break
        if side(xm) == s0:
            lo, x_lo = mid, xm
        else:
            hi, x_hi = mid, xm
        if hi - lo < 1e-14 * max(ds, 1.0):
            break
    return x_lo, x_hi


def _refine_event(bc: _Bordered, x0, d, ds, event, step: StepPolicy):
    J = bc.p.J
    x_lo, x_hi = _bisect_arclength(bc, x0, d, ds, step, lambda x: np.sign(event(x[:J])))
    if x_hi is None:
        return x_lo
    return x_lo if abs(event(x_lo[:J])) <= abs(event(x_hi[:J])) else x_hi


@dataclass
class PinningMeasurement:
    width: float
    r_left: float
    r_right: float
    folds_used: int


def measure_pinning_width(b, skip_folds: int = 4) -> PinningMeasurement:
    """Full extent between the mean left-side and mean right-side fold r."""
    rs = [f.r for f in b.folds] if isinstance(b, ContinuationBranch) else list(b)
    if len(rs) < skip_folds + 4:
        raise InsufficientFolds(f"need {skip_folds + 4} folds, have {len(rs)}")
    use = np.array(rs[skip_folds:])
    a, c = use[0::2].mean(), use[1::2].mean()
    left, right = min(a, c), max(a, c)
    return PinningMeasurement(float(right - left), float(left), float(right), len(use))


def branch_rows(b: ContinuationBranch) -> list:
    fold_idx = {f.index for f in b.folds}
    return [(i, q.r, q.measure, int(i in fold_idx)) for i, q in enumerate(b.points)]


def state_rows(p: LatticeProblem, u) -> list:
    return [(j, j * p.o.spacing, float(v)) for j, v in enumerate(u)]


def audit_branch(p: LatticeProblem, b: ContinuationBranch, tol: float = RESIDUAL_TOL) -> float:
    """Largest independent residual over all stored points; raises if above tol."""
    worst = 0.0
    for q in b.points:
        worst = max(worst, float(np.max(np.abs(independent_residual(p, q.u, q.r)))))
    if worst >= tol:
        raise NoConvergence(f"independent residual audit failed: {worst:.3g} >= {tol}")
    return worst


def pinned_front(spec: NonlinearitySpec, o: Orientation, J: int | None = None,
                 center: str = "site", position: float | None = None) -> tuple:
    """Converged front near the Maxwell point, as (problem, state)."""
    p = make_problem(spec, o, J, None, center)
    return p, newton(p, front_seed(p, position))


def snake_width(spec: NonlinearitySpec, o: Orientation, J: int | None = None,
                skip_folds: int = 4, max_folds: int = 14, center: str = "site",
                step: StepPolicy | None = None) -> tuple:
    """Continue the snake from a pinned front and measure its fold extent."""
    p, u = pinned_front(spec, o, J, center)
    b = continue_branch(p, u, p.r, step, StopPolicy(max_folds=max_folds))
    return measure_pinning_width(b, skip_folds), b, p


# ---- rungs: symmetry-breaking branches between the two snakes ----

def _odd_cols(p: LatticeProblem, m: int):
    """Column and sign of offset m for modes odd about the left mirror."""
    j = np.arange(p.J) + m
    last = p.J - 1
    neg = j < 0
    col = np.where(neg, -j if p.center == "site" else -j - 1, j)
    col = np.where(col > last, 2 * last - col, col)
    return col, np.where(neg, -1.0, 1.0)


def odd_jacobian(p: LatticeProblem, u, r: float | None = None) -> sp.csc_matrix:
    """Jacobian restricted to perturbations odd about the left mirror.

    Singular exactly where a symmetry-breaking branch leaves the symmetric
    state.  For a site mirror the centre value is pinned to zero and dropped.
    """
    r = p.r if r is None else r
    rows = np.arange(p.J)
    ri, ci = [rows], [rows]
    data = [p.center_weight - p.spec.F_u(u, r, p.spec.s)]
    for m, w in zip(p.index_offsets, p.weights):
        col, sg = _odd_cols(p, int(m))
        ri.append(rows)
        ci.append(col)
        data.append(w * sg)
    A = sp.csc_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                      shape=(p.J, p.J))
    return A[1:, 1:].tocsc() if p.center == "site" else A


def _det_sign(A) -> int:
    try:
        lu = splu(sp.csc_matrix(A), permc_spec="NATURAL")
    except RuntimeError:
        return 0
    perm = lu.perm_r
    seen = np.zeros(perm.size, dtype=bool)
    parity = 0
    for i in range(perm.size):
        if not seen[i]:
            k, n = i, 0
            while not seen[k]:
                seen[k] = True
                k = perm[k]
                n += 1
            parity += n - 1
    d = lu.U.diagonal()
    return int(np.prod(np.sign(d)) * (-1) ** parity)


def odd_sign(p: LatticeProblem, u, r: float) -> int:
    return _det_sign(odd_jacobian(p, u, r))


@dataclass
class SymmetryBreaking:
    u: np.ndarray
    r: float
    index: int
    null_vector: np.ndarray


def symmetry_breaking_points(p: LatticeProblem, b: ContinuationBranch,
                             step: StepPolicy | None = None, limit: int | None = None) -> list:
    """Points where the odd block changes sign along a symmetric branch, refined by bisection."""
    step = step or StepPolicy()
    bc = _Bordered(p, step.tol)
    J = p.J
    signs = [odd_sign(p, q.u, q.r) for q in b.points]
    out = []
    for i in range(len(signs) - 1):
        if signs[i] == 0 or signs[i + 1] == signs[i]:
            continue
        x0 = np.append(b.points[i].u, b.points[i].r)
        x1 = np.append(b.points[i + 1].u, b.points[i + 1].r)
        d = x1 - x0
        ds = float(np.linalg.norm(d))
        x_lo, x_hi = _bisect_arclength(bc, x0, d / ds, ds, step,
                                       lambda x: odd_sign(p, x[:J], x[J]))
        xs = x_lo if x_hi is None else 0.5 * (x_lo + x_hi)
        u, r = xs[:J], float(xs[J])
        A = odd_jacobian(p, u, r).toarray()
        phi = np.linalg.svd(A)[2][-1]
        out.append(SymmetryBreaking(u, r, i, phi))
        if limit is not None and len(out) >= limit:
            break
    return out


def _odd_to_full(p: LatticeProblem, phi) -> np.ndarray:
    if p.center == "site":
        half = np.concatenate([[0.0], phi])
        return np.concatenate([-half[:0:-1], half])
    return np.concatenate([-phi[::-1], phi])


def front_crossings(u, levels) -> np.ndarray:
    """Fractional indices of every mid-level crossing."""
    mid = 0.5 * (levels[0] + levels[1])
    d = np.asarray(u) - mid
    k = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    return k + d[k] / (d[k] - d[k + 1])


@dataclass
class Rung:
    branch: ContinuationBranch
    problem: LatticeProblem
    start: SymmetryBreaking
    bond_center: float
    end_asymmetry: float
    end_r: float


def continue_rung(p: LatticeProblem, sb: SymmetryBreaking, step: StepPolicy | None = None,
                  kick: float = 1e-2, max_points: int = 5000) -> Rung:
    """Follow the asymmetric branch from a site-snake bifurcation to the bond snake.

    Works on the full domain.  The run stops where the state becomes symmetric
    about a bond, detected by the two front crossings straddling it evenly.
    """
    if p.center != "site":
        raise ValueError("rungs are started from the site-centred snake")
    step = step or StepPolicy()
    q, uf = mirror_to_full(p, sb.u)
    phi = _unit(_odd_to_full(p, sb.null_vector))
    c = p.J - 1
    bc = _Bordered(q, step.tol)
    x0 = np.append(uf, sb.r)
    t = np.append(phi, 0.0)
    x1, _its = bc.correct(x0, t, kick, x0 + kick * t, 4 * step.max_newton)
    if x1 is None:
        raise NoConvergence("could not step off the symmetric branch")
    m = maxwell(p.spec)
    levels = (m.u_minus, m.u_plus)
    z = front_crossings(x1[:q.J], levels)
    if z.size != 2:
        raise NoConvergence(f"expected two fronts after branch switching, found {z.size}")
    c_bond = c + 0.5 * np.sign(z.sum() / 2 - c)

    def event(u):
        zz = front_crossings(u, levels)
        return float(zz.sum() - 2 * c_bond) if zz.size == 2 else float("nan")

    t1 = _unit(x1 - x0)
    b = continue_branch(q, x1[:q.J], x1[q.J], step, StopPolicy(max_points=max_points,
                                                              max_folds=10 ** 9),
                        t0=t1, event=event)
    if b.meta["stop_reason"] != "event":
        raise NoConvergence(f"rung did not reach the bond-centred snake ({b.meta['stop_reason']})")
    end = b.points[-1].u
    k = np.arange(0, int(min(c_bond, q.J - 1 - c_bond)))
    lo, hi = (c_bond - 0.5 - k).astype(int), (c_bond + 0.5 + k).astype(int)
    asym = float(np.max(np.abs(end[lo] - end[hi])))
    b.meta.update(kind="rung", bond_center=float(c_bond), site_center=c)
    return Rung(b, q, sb, float(c_bond), asym, b.points[-1].r)


def bond_half(rung: Rung) -> np.ndarray:
    """Right half of the rung's end state, about its bond centre."""
    return rung.branch.points[-1].u[int(rung.bond_center + 0.5):]


def distance_to_branch(b: ContinuationBranch, r: float, measure: float) -> float:
    """Smallest distance from (r, measure) to the branch polyline, in units of its extents."""
    R, M = b.r, b.measure
    sr = max(np.ptp(R), 1e-300)
    sm = max(np.ptp(M), 1e-300)
    P = np.column_stack([R / sr, M / sm])
    x = np.array([r / sr, measure / sm])
    a, d = P[:-1], np.diff(P, axis=0)
    L2 = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    tt = np.clip(np.einsum("ij,ij->i", x - a, d) / L2, 0.0, 1.0)
    return float(np.min(np.linalg.norm(a + tt[:, None] * d - x, axis=1)))
