"""Bistable reaction terms, Maxwell data and leading-order front asymptotics.

The lattice equation is du/dt = Delta u - F(u; r, s).  Both built-in models
keep the same functional form after rescaling, so the hatted (unscaled)
numerics simply evaluate F with (r_hat, s_hat).  The formula layer works with
s = 1 and a small parameter eps recovered from s_hat through ``s_exp``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import warnings
from math import pi, sqrt
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import FitFailed, NoMaxwellPoint, Unsupported
from .lattice import Orientation, stencil, symbol

BUILTINS = ("cubic_const", "cubic_quintic")
MAXWELL_TOL = 1e-10


@dataclass(frozen=True)
class NonlinearitySpec:
    """F(u; r, s) with its partial derivatives.

    ``u_exp``, ``r_exp`` and ``s_exp`` are the powers of eps in the rescaling
    u_hat = eps^u_exp u, r_hat = eps^r_exp r, s_hat = eps^s_exp s.  Custom
    specs may carry singularity data (``zeta``, ``gamma``) and a starting
    guess (u_minus, u_plus, r) for the Maxwell solve.
    """

    id: str
    F: Callable
    F_u: Callable
    F_r: Callable
    s: float = 1.0
    u_exp: float | None = None
    r_exp: float | None = None
    s_exp: float | None = None
    zeta: complex | None = None
    gamma: float | None = None
    guess: tuple | None = None

    @property
    def builtin(self) -> bool:
        return self.id in BUILTINS

    def with_s(self, s: float) -> "NonlinearitySpec":
        return NonlinearitySpec(self.id, self.F, self.F_u, self.F_r, float(s), self.u_exp,
                                self.r_exp, self.s_exp, self.zeta, self.gamma, self.guess)

    def eps(self, s_hat: float) -> float:
        """Small parameter implied by s_hat for the s = 1 scaled form."""
        if self.s_exp is None:
            raise Unsupported(f"model {self.id!r} has no rescaling data")
        if s_hat <= 0:
            raise ValueError("s_hat must be positive")
        return s_hat ** (1.0 / self.s_exp)

    def r_hat(self, r: float, s_hat: float) -> float:
        """Unscaled parameter for scaled r at the given s_hat."""
        return self.eps(s_hat) ** self.r_exp * r

    def r_scaled(self, r_hat: float, s_hat: float) -> float:
        return r_hat / self.eps(s_hat) ** self.r_exp


def _cc_F(u, r, s):
    return -r - s * u + u ** 3


def _cq_F(u, r, s):
    return -r * u - s * u ** 3 + u ** 5


def cubic_const(s: float = 1.0) -> NonlinearitySpec:
    return NonlinearitySpec(
        "cubic_const", _cc_F,
        lambda u, r, s: -s + 3 * u ** 2,
        lambda u, r, s: -1.0 + 0.0 * u,
        float(s), 1.0, 3.0, 2.0, None, 1.0,
    )


def cubic_quintic(s: float = 1.0) -> NonlinearitySpec:
    return NonlinearitySpec(
        "cubic_quintic", _cq_F,
        lambda u, r, s: -r - 3 * s * u ** 2 + 5 * u ** 4,
        lambda u, r, s: -u,
        float(s), 0.5, 2.0, 1.0, None, 0.5,
    )


def builtin(model_id: str, s: float = 1.0) -> NonlinearitySpec:
    if model_id == "cubic_const":
        return cubic_const(s)
    if model_id == "cubic_quintic":
        return cubic_quintic(s)
    raise ValueError(f"unknown model {model_id!r}; expected one of {BUILTINS}")


def check_derivatives(spec: NonlinearitySpec, samples: int = 20, seed: int = 0,
                      box=(-2.0, 2.0), rtol: float = 1e-6) -> None:
    """Compare F_u and F_r with centred differences of F at random points."""
    rng = np.random.default_rng(seed)
    for u, r in rng.uniform(*box, size=(samples, 2)):
        for i, (an, fd) in enumerate((
            (spec.F_u(u, r, spec.s), _cdiff(lambda x: spec.F(x, r, spec.s), u)),
            (spec.F_r(u, r, spec.s), _cdiff(lambda x: spec.F(u, x, spec.s), r)),
        )):
            scale = max(1.0, abs(an), abs(fd))
            if abs(an - fd) > rtol * scale:
                name = "F_u" if i == 0 else "F_r"
                raise ValueError(f"{name} disagrees with finite differences at u={u}, r={r}")


def _cdiff(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


def custom(F, F_u, F_r, s: float = 1.0, *, zeta=None, gamma=None, guess=None,
           check: bool = True) -> NonlinearitySpec:
    spec = NonlinearitySpec("custom", F, F_u, F_r, float(s), zeta=zeta, gamma=gamma,
                            guess=guess)
    if check:
        check_derivatives(spec)
    return spec


@dataclass(frozen=True)
class MaxwellData:
    r_M: float
    u_minus: float
    u_plus: float


def _integral(spec, a, b, r, f=None):
    # the Maxwell integral is zero by design, so quad's relative-error
    # heuristics complain; the residual is checked explicitly instead
    f = spec.F if f is None else f
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _err = quad(lambda v: f(v, r, spec.s), a, b, epsabs=1e-14, epsrel=1e-13,
                         limit=200)
    return val


def _verify_maxwell(spec: NonlinearitySpec, m: MaxwellData) -> MaxwellData:
    s = spec.s
    res = max(abs(spec.F(m.u_minus, m.r_M, s)), abs(spec.F(m.u_plus, m.r_M, s)),
              abs(_integral(spec, m.u_minus, m.u_plus, m.r_M)))
    if not res < MAXWELL_TOL:
        raise NoMaxwellPoint(f"Maxwell residual {res:.3g} exceeds {MAXWELL_TOL}")
    if not (spec.F_u(m.u_minus, m.r_M, s) > 0 and spec.F_u(m.u_plus, m.r_M, s) > 0):
        raise NoMaxwellPoint("end states are not linearly stable (F_u <= 0)")
    if not m.u_minus < m.u_plus:
        raise NoMaxwellPoint("expected u_minus < u_plus")
    return m


def _maxwell_jacobian(spec, um, up, r):
    s = spec.s
    Jm = np.array([
        [spec.F_u(um, r, s), 0.0, spec.F_r(um, r, s)],
        [0.0, spec.F_u(up, r, s), spec.F_r(up, r, s)],
        [-spec.F(um, r, s), spec.F(up, r, s),
         _integral(spec, um, up, r, spec.F_r)],
    ])
    sv = np.linalg.svd(Jm, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1.0):
        raise NoMaxwellPoint("Maxwell system has no isolated root (singular Jacobian)")
    return Jm


def maxwell(spec: NonlinearitySpec) -> MaxwellData:
    s = spec.s
    if s <= 0 and spec.builtin:
        raise NoMaxwellPoint("built-in models are bistable only for s > 0")
    if spec.id == "cubic_const":
        return _verify_maxwell(spec, MaxwellData(0.0, -sqrt(s), sqrt(s)))
    if spec.id == "cubic_quintic":
        return _verify_maxwell(spec, MaxwellData(-3 * s * s / 16, 0.0, sqrt(3 * s) / 2))
    if spec.guess is None:
        raise NoMaxwellPoint("custom model needs a (u_minus, u_plus, r) starting guess")
    x = np.array(spec.guess, dtype=float)
    for _ in range(50):
        um, up, r = x
        f = np.array([spec.F(um, r, s), spec.F(up, r, s), _integral(spec, um, up, r)])
        # checked at every iterate, the converged one included
        Jm = _maxwell_jacobian(spec, um, up, r)
        if np.max(np.abs(f)) < 1e-13:
            break
        x = x - np.linalg.solve(Jm, f)
    else:
        raise NoMaxwellPoint("Newton iteration for the Maxwell point did not converge")
    um, up, r = (float(v) for v in x)
    if um > up:
        um, up = up, um
    return _verify_maxwell(spec, MaxwellData(r, um, up))


def front_profile(spec: NonlinearitySpec, Z):
    """Leading-order front joining u_minus (Z -> -inf) to u_plus (Z -> +inf)."""
    Z = np.asarray(Z, dtype=float)
    s = spec.s
    if spec.id == "cubic_const":
        out = sqrt(s) * np.tanh(sqrt(s / 2) * Z)
    elif spec.id == "cubic_quintic":
        out = 0.5 * np.sqrt(3 * s * _logistic(sqrt(3) * s * Z / 2))
    else:
        raise Unsupported("closed-form fronts exist only for the built-in models")
    return out[()] if out.ndim == 0 else out


def _logistic(x):
    # 1/(1+exp(-x)) without overflow
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


@dataclass(frozen=True)
class FrontAsymptotics:
    alpha_plus: float
    alpha_minus: float
    D_plus: float
    zeta: complex | None
    gamma: float | None
    int_Fr: float
    chi: float | None = None
    provenance: dict = field(default_factory=dict, compare=False)


def _int_Fr(spec, m: MaxwellData) -> float:
    return quad(lambda v: spec.F_r(v, m.r_M, spec.s), m.u_minus, m.u_plus,
                epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def front_constants(spec: NonlinearitySpec, mode: str = "analytic", z=None, u=None,
                    zeta=None, gamma=None) -> FrontAsymptotics:
    """Far-field and singularity constants of the leading-order front.

    ``mode="numeric"`` needs front samples ``(z, u)`` rising from u_minus to
    u_plus; D_plus comes from a fixed-slope fit of ln(u_plus - u) over the
    trailing quarter of the samples.
    """
    s = spec.s
    m = maxwell(spec)
    a_minus = sqrt(spec.F_u(m.u_minus, m.r_M, s))
    if mode == "analytic":
        if spec.id == "cubic_const":
            return FrontAsymptotics(sqrt(2 * s), a_minus, 2 * sqrt(s), 1j * pi / sqrt(2 * s),
                                    1.0, -2 * sqrt(s), provenance={"mode": "analytic"})
        if spec.id == "cubic_quintic":
            return FrontAsymptotics(sqrt(3) * s / 2, a_minus, sqrt(3 * s) / 4,
                                    2j * pi / (sqrt(3) * s), 0.5, -3 * s / 8,
                                    provenance={"mode": "analytic"})
        raise Unsupported("analytic constants exist only for the built-in models")
    if mode != "numeric":
        raise ValueError(f"mode must be 'analytic' or 'numeric', not {mode!r}")
    if z is None or u is None:
        raise ValueError("numeric mode needs front samples z and u")
    a_plus = sqrt(spec.F_u(m.u_plus, m.r_M, s))
    D_plus, r2 = _fit_tail(np.asarray(z, float), np.asarray(u, float), m.u_plus, a_plus)
    prov = {"mode": "numeric", "tail_r2": r2}
    zeta = zeta if zeta is not None else spec.zeta
    if zeta is None:
        zeta = 1j * pi / a_plus
        prov["zeta"] = "default Im(zeta) = pi/alpha_plus (external result, not derived here)"
    gamma = gamma if gamma is not None else spec.gamma
    return FrontAsymptotics(a_plus, a_minus, D_plus, complex(zeta), gamma, _int_Fr(spec, m),
                            provenance=prov)


def _fit_tail(z, u, u_plus, alpha_plus):
    order = np.argsort(z)
    z, u = z[order], u[order]
    n = len(z)
    zt, ut = z[n - n // 4:], u[n - n // 4:]
    gap = u_plus - ut
    keep = gap > 1e-10 * max(1.0, abs(u_plus))
    if keep.sum() < 3:
        raise FitFailed("too few tail samples above round-off")
    y = np.log(gap[keep]) + alpha_plus * zt[keep]
    c = float(np.mean(y))
    ytot = np.log(gap[keep])
    ss_res = float(np.sum((y - c) ** 2))
    ss_tot = float(np.sum((ytot - ytot.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    if r2 < 0.999:
        raise FitFailed(f"tail regression R^2 = {r2:.6f} < 0.999")
    return float(np.exp(c)), r2


def linear_growth_rate(k, o: Orientation, eps: float, Fu_at_uc: float):
    """Growth rate of a lattice Fourier mode k about a constant state."""
    val = np.real(symbol(stencil(o.kind), o, k)) - eps * eps * Fu_at_uc
    return val[()] if np.ndim(val) == 0 else val


def chi(fa: FrontAsymptotics, o: Orientation, eps: float, lambda_arg: float) -> float:
    """Phase constant of the pinning condition, reduced to [0, 2*pi)."""
    val = -pi / 2 + fa.gamma * pi + o.kappa1 * complex(fa.zeta).real / eps + lambda_arg
    return float(np.mod(val, 2 * pi))
