"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical routines: eigenvalues come
from exact characteristic polynomials and mpmath root finding, return times
from brute-force trajectory scans with scipy's expm.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy.linalg import expm


def charpoly_exact(A):
    """Characteristic polynomial coefficients (highest first) via Faddeev-LeVerrier in exact rationals."""
    M0 = [[Fraction(float(v)) for v in row] for row in np.asarray(A, dtype=float)]
    n = len(M0)

    def matmul(X, Y):
        return [[sum(X[i][k] * Y[k][j] for k in range(n)) for j in range(n)] for i in range(n)]

    coeffs = [Fraction(1)]
    M = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        AM = matmul(M0, M)
        for i in range(n):
            AM[i][i] += coeffs[-1]
        M = AM
        AM2 = matmul(M0, M)
        c = -sum(AM2[i][i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def _poly_rem(a, b):
    a = list(a)
    while len(a) >= len(b) and any(a):
        q = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    while a and a[0] == 0:
        a.pop(0)
    return a


def _poly_div(a, b):
    a, out = list(a), []
    while len(a) >= len(b):
        q = a[0] / b[0]
        out.append(q)
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    return out


def squarefree_part(coeffs):
    """``p / gcd(p, p')`` in exact arithmetic: same roots, all simple."""
    n = len(coeffs) - 1
    deriv = [c * (n - i) for i, c in enumerate(coeffs[:-1])]
    a, b = list(coeffs), deriv
    while b:
        a, b = b, _poly_rem(a, b)
    return _poly_div(coeffs, a) if len(a) > 1 else list(coeffs)


def eigenvalues_oracle(A, dps: int = 60):
    """Distinct roots of the exact characteristic polynomial, at high precision."""
    coeffs = squarefree_part(charpoly_exact(A))
    if len(coeffs) == 1:
        return []
    with mpmath.workdps(dps):
        roots = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in coeffs],
                                 maxsteps=400, extraprec=4 * dps)
        return [complex(r) for r in roots]


def min_period_bound_oracle(eigs, tol):
    im = [abs(v.imag) for v in eigs if abs(v.real) <= tol and abs(v.imag) > tol]
    return min(2 * math.pi / b for b in im) if im else None


def first_return_scan(A, x0, horizon, step=1e-4, tol=1e-6):
    """First grid time where the orbit is back at ``x0``.

    A grid point lands at most half a step from the true return, so the
    acceptance threshold is the distance travelled in half a step plus
    ``tol``; among consecutive sub-threshold samples the closest is taken.
    """
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    ts = np.arange(step, horizon + step, step)
    # e^{A k h} x0 by repeated multiplication with one exact step propagator
    E = expm(A * step)
    X = np.empty((len(ts), len(x0)))
    x = x0.copy()
    for k in range(len(ts)):
        x = E @ x
        X[k] = x
    d = np.linalg.norm(X - x0, axis=1)
    vmax = float(np.max(np.linalg.norm(X @ A.T, axis=1)))
    thr = 0.5 * step * vmax + tol
    left = np.maximum.accumulate(d) > 2 * thr
    hits = np.flatnonzero((d < thr) & left)
    if len(hits) == 0:
        return None
    k = hits[0]
    while k + 1 < len(d) and d[k + 1] < d[k]:
        k += 1
    return float(ts[k])


def min_return_distance(A, x0, horizon, step=1e-2, skip=0.5):
    """Smallest ``|e^{At} x0 - x0|`` over a grid on ``[skip, horizon]``."""
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    ts = np.arange(skip, horizon, step)
    E = expm(A * step)
    x = expm(A * skip) @ x0
    best = math.inf
    for _ in ts:
        best = min(best, float(np.linalg.norm(x - x0)))
        x = E @ x
    return best


def rotate_complex(t, z, omega):
    """``e^{i omega t} z`` on R^2, by complex arithmetic."""
    w = complex(z[0], z[1]) * complex(math.cos(omega * t), math.sin(omega * t))
    return np.array([w.real, w.imag])
