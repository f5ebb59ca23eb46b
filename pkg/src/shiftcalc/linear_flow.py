"""Closed orbits and periods of linear flows ``x -> e^{At} x``.

A linear flow has a closed orbit exactly when its generator has a purely
imaginary non-zero eigenvalue.  Every closed orbit then has period at least
``min 2*pi/|lambda|`` over those eigenvalues, and the period of a particular
point is the least common multiple of the periods of its projections onto the
invariant subspaces it touches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidArgument, NoClosedOrbits, NumericFailure
from .matrix_core import as_real_matrix, mat_exp, spectrum

TWO_PI = 2.0 * math.pi

RATIO_TOL = 1e-9
MAX_DENOMINATOR = 10 ** 6
_CONTOUR_NODES = 96


def default_tol(A) -> float:
    """Scale-aware tolerance ``1e-9 * (1 + ||A||_inf)`` for the imaginary-axis test."""
    return 1e-9 * (1.0 + float(np.linalg.norm(np.asarray(A, dtype=float), np.inf)))


@dataclass(frozen=True)
class ImaginarySpectrumReport:
    lambda_set: tuple
    tol_used: float
    has_closed_orbits: bool
    min_period_bound: Optional[float]

    def to_dict(self) -> dict:
        return {
            "lambda_set": [[v.real, v.imag] for v in self.lambda_set],
            "tol_used": self.tol_used,
            "has_closed_orbits": self.has_closed_orbits,
            "min_period_bound": self.min_period_bound,
        }


@dataclass(frozen=True)
class PointPeriodVerdict:
    """Orbit type of one point under a linear flow.

    ``component_periods`` lists ``2*pi/|lambda_j|`` for every invariant
    subspace on which the point has a closed, non-constant projection.
    ``reason`` says why a point was declared non-closed.
    """

    kind: str
    period: Optional[float] = None
    component_periods: tuple = ()
    reason: str = ""
    return_residual: Optional[float] = None
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "period": self.period,
            "component_periods": list(self.component_periods),
            "reason": self.reason,
            "return_residual": self.return_residual,
            **self.details,
        }


def imaginary_spectrum(A, tol: Optional[float] = None) -> ImaginarySpectrumReport:
    """Purely imaginary non-zero eigenvalues of ``A``.

    An eigenvalue counts when ``|Re| <= tol`` and ``|Im| > tol``.
    """
    A = as_real_matrix(A)
    tol = default_tol(A) if tol is None else float(tol)
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    spec = spectrum(A)
    lam = [complex(0.0, v.imag) for v in spec.distinct
           if abs(v.real) <= tol and abs(v.imag) > tol]
    lam.sort(key=lambda v: (abs(v.imag), v.imag))
    bound = float(min(TWO_PI / abs(v.imag) for v in lam)) if lam else None
    return ImaginarySpectrumReport(tuple(lam), tol, bool(lam), bound)


def min_period_bound(A, tol: Optional[float] = None) -> Optional[float]:
    """Lower bound on the period of every closed orbit, or None without closed orbits."""
    return imaginary_spectrum(A, tol).min_period_bound


def period_divergence_probe(A, scales: Sequence[float], tol: Optional[float] = None):
    """Period bounds of ``A / s`` for each scale ``s``.

    Shrinking the generator stretches every period by the same factor, so the
    bound of ``A / s`` equals ``s`` times the bound of ``A``.
    """
    A = as_real_matrix(A)
    if min_period_bound(A, tol) is None:
        raise NoClosedOrbits("generator has no purely imaginary non-zero eigenvalues")
    out = []
    for s in scales:
        s = float(s)
        if not s > 0:
            raise InvalidArgument(f"scales must be positive, got {s}")
        out.append((s, min_period_bound(A / s, tol)))
    return out


def convergents(x: float, max_terms: int = 64) -> Iterator[Fraction]:
    """Continued-fraction convergents of a non-negative float."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    rest = Fraction(x)
    for _ in range(max_terms):
        a = math.floor(rest)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = rest - a
        if frac == 0:
            return
        rest = 1 / frac


def rational_ratio(r: float, tol: float = RATIO_TOL,
                   max_den: int = MAX_DENOMINATOR) -> Optional[Fraction]:
    """Smallest-denominator convergent of ``r`` within ``tol``, or None."""
    for c in convergents(abs(r)):
        if c.denominator > max_den:
            return None
        if abs(float(c) - abs(r)) <= tol * max(1.0, abs(r)):
            return c if r >= 0 else -c
    return None


def spectral_projector_apply(A: np.ndarray, center: complex, radius: float,
                             x: np.ndarray, nodes: int = _CONTOUR_NODES) -> np.ndarray:
    """Apply the Riesz projector for the eigenvalues inside a circle to ``x``.

    Trapezoidal quadrature of the resolvent on the circle converges
    geometrically and stays well defined for defective eigenvalues, where an
    eigenvector basis does not.
    """
    n = A.shape[0]
    w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    z = center + radius * w
    M = z[:, None, None] * np.eye(n)[None] - A[None].astype(complex)
    rhs = np.broadcast_to(x.astype(complex), (nodes, n))[..., None]
    sol = np.linalg.solve(M, rhs)[..., 0]
    return (radius * w[:, None] * sol).mean(axis=0)


def _cluster_radii(centers: np.ndarray, raw: np.ndarray) -> np.ndarray:
    radii = np.empty(len(centers))
    for i, c in enumerate(centers):
        others = np.delete(centers, i)
        sep = np.abs(others - c).min() if len(others) else 2.0 * (1.0 + abs(c))
        radii[i] = 0.5 * sep
    return radii


def _periodic_lcm(freqs: Sequence[float]):
    """Common period of rotations with angular frequencies ``freqs``.

    Returns ``(period, ratios)``; period is None when some ratio has no
    convergent with denominator at most ``MAX_DENOMINATOR`` within ``RATIO_TOL``.
    """
    ref = min(freqs)
    ratios = []
    for f in freqs:
        q = rational_ratio(f / ref)
        if q is None:
            return None, ratios
        ratios.append(q)
    L = math.lcm(*(q.denominator for q in ratios))
    ints = [int(q * L) for q in ratios]
    g = math.gcd(*ints)
    base = ref * g / L
    return float(TWO_PI / base), ratios


def point_period(A, x0, tol: Optional[float] = None, horizon: float = 1e3) -> PointPeriodVerdict:
    """Classify the orbit of ``x0`` under ``e^{At}``.

    The point is split into its components on the generalized eigenspaces of
    ``A``.  It is periodic when every non-constant component lies on a purely
    imaginary eigenspace (no nilpotent drift) and the component frequencies
    are commensurable with a common period not exceeding ``horizon``.
    """
    A = as_real_matrix(A)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = A.shape[0]
    if x0.shape != (n,):
        raise InvalidArgument(f"point has dimension {x0.size}, matrix has {n}")
    if not horizon > 0:
        raise InvalidArgument("horizon must be positive")
    tol = default_tol(A) if tol is None else float(tol)
    if not tol > 0:
        raise InvalidArgument("tol must be positive")

    normA = float(np.linalg.norm(A, np.inf))
    scale = float(np.linalg.norm(x0))
    if scale == 0.0 or np.linalg.norm(A @ x0) <= 1e-12 * (1.0 + normA) * scale:
        return PointPeriodVerdict("fixed", reason="A x0 vanishes")

    spec = spectrum(A)
    centers = spec.distinct
    radii = _cluster_radii(centers, spec.raw)
    rest = x0.astype(complex)
    freqs, comp_periods = [], []
    drift = None
    for c, r in zip(centers, radii):
        if c.imag < 0:
            continue
        y = spectral_projector_apply(A, c, r, x0)
        if c.imag > 0:
            y = 2.0 * y.real
        else:
            y = y.real
        rest = rest - y
        ny = float(np.linalg.norm(y))
        if ny <= 1e-9 * scale:
            continue
        if abs(c.real) > tol:
            drift = drift or f"component on eigenvalue {c:.6g} grows or decays"
            continue
        if abs(c.imag) <= tol:
            if np.linalg.norm(A @ y) > 1e-7 * (1.0 + normA) * ny:
                drift = drift or "nilpotent drift on the zero eigenvalue"
            continue
        beta = abs(c.imag)
        res = np.linalg.norm(A @ (A @ y) + beta ** 2 * y)
        if res > 1e-7 * (normA ** 2 + beta ** 2) * ny:
            drift = drift or f"nilpotent drift on eigenvalue +-{beta:.6g}i"
            continue
        freqs.append(float(beta))
        comp_periods.append(float(TWO_PI / beta))
    leak = float(np.linalg.norm(rest))
    if leak > 1e-6 * scale:
        raise NumericFailure("spectral projectors do not resolve the point",
                             {"leak": leak, "norm": scale})
    if drift:
        return PointPeriodVerdict("non_closed", reason=drift,
                                  component_periods=tuple(comp_periods))
    if not freqs:
        return PointPeriodVerdict("fixed", reason="all components constant")
    period, ratios = _periodic_lcm(freqs)
    details = {"frequency_ratios": [str(q) for q in ratios]}
    if period is None:
        return PointPeriodVerdict("non_closed", component_periods=tuple(comp_periods),
                                  reason="incommensurable component frequencies",
                                  details=details)
    if period > horizon:
        return PointPeriodVerdict("non_closed", component_periods=tuple(comp_periods),
                                  reason=f"common period {period:.6g} exceeds horizon",
                                  details=details)
    residual = float(np.linalg.norm(mat_exp(A * period) @ x0 - x0))
    return PointPeriodVerdict("periodic", period=period,
                              component_periods=tuple(comp_periods),
                              return_residual=residual, details=details)
