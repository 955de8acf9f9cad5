"""Independent reference computations used by the tests.

The late-term oracle iterates the raw coefficients U_n in 60-digit
arithmetic with the closed-form square-lattice Taylor coefficients, so it
shares no code (and no normalisation) with the package.
"""
import mpmath as mp

# Richardson limits of the oracle estimates at n = 120 (cubic_const) and
# n = 160 (cubic_quintic), prefactors 5*sqrt(2) and 2*(3/4)^(1/4)
LAMBDA_ORACLE = {
    ("cubic_const", (1, 0)): -2535.16315612,
    ("cubic_const", (1, 1)): -10140.6526245,
    ("cubic_quintic", (1, 0)): -88.9878724737,
    ("cubic_quintic", (1, 1)): -251.695712278,
}


def raw_coefficients(model: str, m1: int, m2: int, n_max: int, dps: int = 60) -> list:
    with mp.workdps(dps):
        norm = mp.sqrt(m1 * m1 + m2 * m2)
        c, s = m1 / norm, m2 / norm
        cp = [None] + [2 * (c ** (2 * p) + s ** (2 * p)) / mp.factorial(2 * p)
                       for p in range(1, n_max + 2)]
        if model == "cubic_const":
            q, k, U = mp.mpf(3), 3, [mp.sqrt(2)]
        else:
            q, k, U = mp.mpf(5) / 2, 5, [(mp.mpf(3) / 4) ** (mp.mpf(1) / 4)]
        for n in range(1, n_max + 1):
            lin = sum(cp[p] * mp.gamma(2 * n + q) / mp.gamma(2 * n - 2 * p + q) * U[n - p + 1]
                      for p in range(2, n + 2))
            Ut = U + [mp.mpf(0)]
            res = Ut[: n + 1]
            for _ in range(k - 1):
                res = [sum(res[i] * Ut[j - i] for i in range(j + 1)) for j in range(n + 1)]
            coef = cp[1] * mp.gamma(2 * n + q) / mp.gamma(2 * n - 2 + q) - k * U[0] ** (k - 1)
            U.append((res[n] - lin) / coef)
        return [float(x) for x in U]
