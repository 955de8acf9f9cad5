"""Late-order coefficients near the front singularity and the constant Lambda.

Near the singularity the late terms behave like U_n Gamma(2n+gamma)/(Z-zeta)^...
and the U_n satisfy a nonlinear recurrence.  U_n grows factorially, so the
iteration carries V_n = U_n kappa1^(2n+beta) / Gamma(2n+beta), beta = 2 gamma + 2,
and every Gamma ratio is formed from log-Gamma differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, log, pi

import numpy as np
from scipy.special import logsumexp

from .eigen import complex_smallest
from .errors import ComplexDominance, Overflow, Unsupported
from .lattice import Orientation, Stencil, stencil

DEFAULT_NMAX = {"cubic_const": 80, "cubic_quintic": 120}
NMAX_LIMIT = 200
# normalised terms above this mean a faster-growing (complex) contribution
GROWTH_STOP = 1e100
RICHARDSON_WINDOW = 12
CONVERGED_RTOL = 1e-3

_lgamma = np.vectorize(lgamma, otypes=[float])


def taylor_coefficients(st: Stencil, o: Orientation, p_max: int) -> list:
    """c_p = sum_i w_i delta_i^(2p) / (2p)!  for p = 1..p_max."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    lc, sg = _log_taylor(st, o, p_max)
    return (sg * np.exp(lc)).tolist()


def _log_taylor(st: Stencil, o: Orientation, p_max: int):
    """(log|c_p|, sign c_p) for p = 1..p_max, safe past float underflow."""
    d = st.dx * o.cos_psi + st.dy * o.sin_psi
    nz = d != 0
    p = np.arange(1, p_max + 1)[:, None]
    a = 2 * p * np.log(np.abs(d[nz]))[None, :] - _lgamma(2 * p[:, 0] + 1)[:, None]
    lc, sg = logsumexp(a, axis=1, b=np.broadcast_to(st.weights[nz], a.shape), return_sign=True)
    return lc, sg


def _model_constants(model_id: str):
    """(power k, strength gamma, U0) of the near-singularity problem."""
    if model_id == "cubic_const":
        return 3, 1.0, 2.0 ** 0.5
    if model_id == "cubic_quintic":
        return 5, 0.5, 0.75 ** 0.25
    raise Unsupported("recurrences are available only for the built-in models")


@dataclass
class RecurrenceRun:
    model_id: str
    orientation: Orientation
    n_max: int
    V: np.ndarray
    kappa1: float
    beta: float
    gamma: float
    U0: float
    k: int
    c: list = field(repr=False)
    U_raw_policy: str = "normalized"
    stopped_early: bool = False

    def log_weight(self, n):
        """ln(Gamma(2n+beta)) - (2n+beta) ln(kappa1), so U_n = V_n exp(weight)."""
        n = np.asarray(n, dtype=float)
        return _lgamma(2 * n + self.beta) - (2 * n + self.beta) * log(self.kappa1)

    def U(self, n: int) -> float:
        return float(self.V[n] * np.exp(self.log_weight(n)))


def iterate_recurrence(spec, o: Orientation, n_max: int | None = None) -> RecurrenceRun:
    model_id = spec if isinstance(spec, str) else spec.id
    k, gamma, U0 = _model_constants(model_id)
    if n_max is None:
        n_max = DEFAULT_NMAX[model_id]
    if not 1 <= n_max <= NMAX_LIMIT:
        raise ValueError(f"n_max must lie in [1, {NMAX_LIMIT}]")
    st = stencil(o.kind)
    c = taylor_coefficients(st, o, n_max + 1)
    logc, csign = _log_taylor(st, o, n_max + 1)
    kap = o.kappa1
    beta = 2 * gamma + 2
    q = gamma + 2
    m = np.arange(n_max + 1, dtype=float)
    w = _lgamma(2 * m + beta) - (2 * m + beta) * log(kap)
    lin_diag = k * U0 ** (k - 1)

    V = np.zeros(n_max + 1)
    V[0] = U0 / np.exp(w[0])
    # P[j][m]: normalised j-fold self-convolution of U at order m
    P = np.zeros((k + 1, n_max + 1))
    P[1, 0] = V[0]
    for j in range(2, k + 1):
        P[j, 0] = V[0] ** j * np.exp((j - 1) * w[0])

    def conv(j, n):
        a = np.arange(n + 1)
        return float(np.sum(P[j - 1, a] * V[n - a] * np.exp(w[a] + w[n - a] - w[n])))

    stopped = False
    n_done = n_max
    for n in range(1, n_max + 1):
        V[n] = 0.0
        P[1, n] = 0.0
        for j in range(2, k + 1):
            P[j, n] = conv(j, n)
        p = np.arange(2, n + 2)
        logG = (_lgamma(2 * n + q) - _lgamma(2 * n - 2 * p + q)
                + w[n - p + 1] - w[n] + logc[p - 1])
        lin = float(np.sum(csign[p - 1] * np.exp(logG) * V[n - p + 1]))
        G1 = c[0] * np.exp(lgamma(2 * n + q) - lgamma(2 * n - 2 + q))
        V[n] = (P[k, n] - lin) / (G1 - lin_diag)
        if not np.isfinite(V[n]):
            raise Overflow(f"non-finite normalised coefficient at n={n}; check beta wiring")
        P[1, n] = V[n]
        for j in range(2, k + 1):
            P[j, n] = conv(j, n)
        if abs(V[n]) > GROWTH_STOP:
            stopped, n_done = True, n
            break
    return RecurrenceRun(model_id, o, n_done, V[: n_done + 1].copy(), kap, beta, gamma, U0, k,
                         c, stopped_early=stopped)


@dataclass
class LambdaEstimate:
    value: float
    estimates: list
    n_used: int
    converged: bool
    dominance: str
    prefactor: float = 1.0
    diagnostic: dict = field(default_factory=dict)


def lambda_prefactor(gamma: float, U0: float) -> float:
    """(2 gamma + 3) gamma U0, from the near-singularity behaviour of G."""
    return (2 * gamma + 3) * gamma * U0


def _richardson(n: np.ndarray, est: np.ndarray) -> float:
    A = np.column_stack([np.ones_like(n), 1.0 / n, 1.0 / n ** 2])
    coef, *_ = np.linalg.lstsq(A, est, rcond=None)
    return float(coef[0])


def _oscillation_diagnostic(run: RecurrenceRun) -> dict:
    n = np.arange(1, len(run.V))
    # sign of (-1)^(n+1) V_n rotates by 2 Arg(K) per step under complex dominance
    est = (-1.0) ** (n + 1) * run.V[1:]
    tail = slice(len(est) // 2, None)
    absV = np.abs(est[tail])
    ratio = float(np.exp(np.mean(np.diff(np.log(absV + 1e-300))))) if absV.size > 1 else 1.0
    flips = np.nonzero(np.diff(np.sign(est[tail])) != 0)[0]
    measured = float(np.mean(np.diff(n[tail][flips]))) if flips.size > 1 else float("nan")
    diag = {"growth_ratio": ratio, "measured_half_period": measured,
            "n_computed": int(run.n_max), "stopped_early": run.stopped_early}
    K = complex_smallest(run.orientation)
    if K is not None:
        argK = float(np.angle(K))
        diag.update(K=K, expected_growth_ratio=(run.kappa1 / abs(K)) ** 2,
                    expected_half_period=pi / (2 * argK))
    return diag


def extract_lambda(run: RecurrenceRun, spec=None, o: Orientation | None = None) -> LambdaEstimate:
    """Estimate Lambda from the normalised late terms.

    The per-n estimate is prefactor * (-1)^(n+1) * V_n; the limit is taken by
    a least-squares fit of L + a/n + b/n^2 over the last estimates.
    """
    if o is not None and o != run.orientation:
        raise ValueError("orientation does not match the recurrence run")
    if run.n_max < RICHARDSON_WINDOW and not run.stopped_early:
        raise ValueError(f"need n_max >= {RICHARDSON_WINDOW} for extrapolation")
    pref = lambda_prefactor(run.gamma, run.U0)
    n = np.arange(1, run.n_max + 1, dtype=float)
    est = pref * (-1.0) ** (n + 1) * run.V[1:]
    has_complex = complex_smallest(run.orientation) is not None
    dominance = "complex_dominant" if has_complex else "real_dominant"
    if run.stopped_early:
        diag = _oscillation_diagnostic(run)
        raise ComplexDominance(
            f"late terms grow like {diag['growth_ratio']:.3g}^n relative to the real "
            "eigenvalue; Lambda is not recoverable from this recurrence", diag)
    value = _richardson(n[-RICHARDSON_WINDOW:], est[-RICHARDSON_WINDOW:])
    last = est[-6:]
    converged = bool(np.all(np.abs(np.diff(last)) / abs(value) < CONVERGED_RTOL))
    same_sign = bool(np.all(np.sign(est[-RICHARDSON_WINDOW:]) == np.sign(value)))
    if not (converged and same_sign) or has_complex:
        diag = _oscillation_diagnostic(run)
        raise ComplexDominance(
            "estimate sequence does not settle "
            f"(growth ratio {diag['growth_ratio']:.3g}, "
            f"half-period {diag['measured_half_period']:.3g})", diag)
    return LambdaEstimate(value, est.tolist(), int(run.n_max), converged, dominance, pref)
