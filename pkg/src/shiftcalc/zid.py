"""The group ``Z_id`` of shift functions with ``phi(mu) = id``.

Membership tests, local reconstruction of a shift function from the map it
induces, the period-function generator and a grid-based classifier of the
structure of ``Z_id``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from ._parallel import pmap
from .errors import ChartFailure, InvalidArgument
from .flows import Flow
from .linear_flow import min_period_bound
from .orbits import (Grid, classify_orbit, fixed_set_probe, is_tangent_flow_trivial,
                     tangent_flow)
from .shifts import ShiftFunction, apply_phi, as_shift, ball_samples


@dataclass(frozen=True)
class MembershipResult:
    passed: bool
    max_residual: float
    tol: float
    residuals: np.ndarray = field(repr=False, compare=False, default=None)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_residual": self.max_residual, "tol": self.tol}


def zid_membership(flow: Flow, mu, samples, tol: float = 1e-8) -> MembershipResult:
    """Check ``Phi(mu(x), x) = x`` on every sample."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    moved = apply_phi(flow, as_shift(mu))(X)
    res = np.linalg.norm(moved - X, axis=1)
    worst = float(res.max()) if len(res) else 0.0
    return MembershipResult(worst < tol, worst, float(tol), res)


@dataclass(frozen=True)
class SamePhiResult:
    """Whether ``phi(alpha) = phi(beta)`` on the samples.

    ``equal`` is the membership verdict for ``beta - alpha``; ``image_distance``
    is the direct comparison of the two maps and ``consistent`` records that
    both routes agree.
    """

    equal: bool
    membership_residual: float
    image_distance: float
    consistent: bool
    tol: float

    def __bool__(self):
        return self.equal


def same_phi_image(flow: Flow, alpha, beta, samples, tol: float = 1e-8) -> SamePhiResult:
    alpha, beta = as_shift(alpha), as_shift(beta)
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    m = zid_membership(flow, beta - alpha, X, tol)
    dist = float(np.linalg.norm(apply_phi(flow, alpha)(X) - apply_phi(flow, beta)(X), axis=1).max())
    return SamePhiResult(m.passed, m.max_residual, dist, m.passed == (dist < tol), float(tol))


@dataclass(frozen=True)
class EvaluationHom:
    """``tau_z``: evaluation of shift functions at a fixed point ``z``."""

    z: tuple

    def __call__(self, nu) -> float:
        return float(as_shift(nu)(np.asarray(self.z, dtype=float)))

    def defect(self, nu1, nu2) -> float:
        """``tau(nu1 + nu2) - (tau(nu1) + tau(nu2))``; zero when evaluation is additive."""
        nu1, nu2 = as_shift(nu1), as_shift(nu2)
        return self(nu1 + nu2) - (self(nu1) + self(nu2))


# ---------------------------------------------------------------------------
# local reconstruction

class _Section:
    """Flow-box coordinate: time of flight to the hyperplane through ``z``
    orthogonal to the field at ``z``."""

    def __init__(self, flow: Flow, z: np.ndarray, radius: float, tol: float):
        self.flow = flow
        self.z = z
        F = flow.field(z)
        self.speed = float(np.linalg.norm(F))
        if self.speed <= max(tol, 1e-12) * (1.0 + np.linalg.norm(z)):
            raise ChartFailure(f"field vanishes at {z.tolist()}; no flow box there")
        self.nu = F / self.speed
        self.radius = radius
        # the flow box is trusted where the field turns by less than ~1/4 rad
        h = 1e-6 * (1.0 + np.linalg.norm(z))
        E = np.eye(flow.dim) * h
        DF = (flow.field(z + E) - flow.field(z - E)).T / (2 * h)
        curv = float(np.linalg.norm(DF, 2))
        self.box = 0.25 * self.speed / curv if curv > 0 else math.inf

    def _g(self, tau: float, w: np.ndarray) -> float:
        return float((self.flow(-tau, w) - self.z) @ self.nu)

    def time(self, w: np.ndarray) -> float:
        """``tau`` with ``Phi(-tau, w)`` on the section.

        Of the crossings in the scan window the one with the smallest ``|tau|``
        is taken: for ``w`` inside the flow box that is the chart coordinate,
        later crossings belong to other passes of the orbit.
        """
        lo, hi = self.flow.interval
        window = 4.0 * (np.linalg.norm(w - self.z) + self.radius) / self.speed
        for _ in range(4):
            T = min(window, -lo * (1 - 1e-9), hi * (1 - 1e-9))
            taus = np.linspace(-T, T, 401)
            P = self.flow.trajectory(-taus, w)
            g = (P - self.z) @ self.nu
            idx = np.flatnonzero((g[:-1] > 0) & (g[1:] <= 0))
            if len(idx):
                best = None
                for i in idx:
                    if g[i + 1] == 0:
                        tau = float(taus[i + 1])
                    else:
                        tau = brentq(self._g, taus[i], taus[i + 1], args=(w,),
                                     xtol=1e-15, rtol=4 * np.finfo(float).eps)
                    if best is None or abs(tau) < abs(best):
                        best = tau
                return best
            window *= 2.0
        raise ChartFailure(f"no section crossing found for {w.tolist()}")


@dataclass(frozen=True)
class Reconstruction:
    """Values of a shift function rebuilt from ``fmap`` near ``center``.

    ``residuals[i] = |Phi(values[i], points[i]) - fmap(points[i])|``.
    """

    center: tuple
    seed: float
    points: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    evaluate: Callable = field(repr=False, compare=False, default=None)

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max())

    def as_shift(self) -> ShiftFunction:
        return ShiftFunction(self.evaluate, f"reconstructed@{list(self.center)}", len(self.center))

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "seed": self.seed,
            "max_residual": self.max_residual,
            "samples": [{"point": p.tolist(), "alpha": float(v), "residual": float(r)}
                        for p, v, r in zip(self.points, self.values, self.residuals)],
        }


def reconstruct_alpha(flow: Flow, fmap: Callable, y, a: float, radius: float = 0.2,
                      n_samples: int = 50, seed: int = 0, points=None,
                      tol: float = 1e-8) -> Reconstruction:
    """Recover the shift function of an orbit-preserving map near a regular point.

    With ``p1`` the time of flight to the hyperplane through ``z = Phi(a, y)``
    orthogonal to the field there, the shift function is
    ``alpha(x) = a + p1(fmap(x)) - p1(Phi(a, x))``.  The seed ``a`` must satisfy
    ``fmap(y) = Phi(a, y)``; it selects the branch of the return time.  Points
    far from ``y`` are reached along the segment from ``y``, re-centring the
    chart whenever the images would leave the flow box.
    """
    y = np.asarray(y, dtype=float).reshape(flow.dim)
    a = float(a)
    if not radius > 0:
        raise InvalidArgument("radius must be positive")
    if np.linalg.norm(flow.field(y)) <= max(tol, 1e-12) * (1.0 + np.linalg.norm(y)):
        raise ChartFailure(f"{y.tolist()} is (numerically) a fixed point")
    seed_gap = float(np.linalg.norm(np.asarray(fmap(y[None]), dtype=float)[0] - flow(a, y)))
    if seed_gap > 1e-6 * (1.0 + np.linalg.norm(y)):
        raise InvalidArgument(f"seed does not satisfy fmap(y) = Phi(a, y) (gap {seed_gap:.3g})")
    charts = {}

    def chart_at(z):
        key = z.tobytes()
        if key not in charts:
            charts[key] = _Section(flow, z, radius, tol)
        return charts[key]

    def step(x0, a0, x1, depth=0):
        # extend alpha from x0 to x1 through the chart at Phi(a0, x0); halve the
        # step until both images stay inside the flow box, so the branch of the
        # time of flight is inherited continuously from the seed
        chart = chart_at(flow(a0, x0))
        w1 = np.asarray(fmap(x1[None]), dtype=float)[0]
        w2 = flow(a0, x1)
        if max(np.linalg.norm(w1 - chart.z), np.linalg.norm(w2 - chart.z)) <= chart.box:
            return a0 + chart.time(w1) - chart.time(w2)
        if depth >= 16:
            raise ChartFailure(f"no flow-box path from {x0.tolist()} to {x1.tolist()}")
        mid = 0.5 * (x0 + x1)
        return step(mid, step(x0, a0, mid, depth + 1), x1, depth + 1)

    def evaluate(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([step(y, a, x) for x in X])

    if points is None:
        points = ball_samples(y, radius, n_samples, seed)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    vals = evaluate(P)
    res = np.linalg.norm(flow(vals, P) - np.atleast_2d(fmap(P)), axis=1)
    return Reconstruction(tuple(y.tolist()), a, P, vals, res, evaluate)


# ---------------------------------------------------------------------------
# period generator and classification

@dataclass(frozen=True)
class GeneratorReport:
    samples: list
    failures: list

    def to_dict(self) -> dict:
        return {"samples": [{"point": list(p), "period": v} for p, v in self.samples],
                "failures": [{"point": list(p), "kind": k} for p, k in self.failures]}


def period_generator(flow: Flow, points, horizon: float = 10.0,
                     tol: float = 1e-8) -> GeneratorReport:
    """Periods of the sampled points; points that are not periodic are reported separately."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    verdicts = pmap(lambda p: classify_orbit(flow, p, horizon, tol), P)
    samples, failures = [], []
    for p, v in zip(P, verdicts):
        key = tuple(float(c) for c in p)
        if v.kind == "periodic":
            samples.append((key, float(v.period)))
        else:
            failures.append((key, v.kind))
    return GeneratorReport(samples, failures)


def fixed_point_generator(flow: Flow, z, tau: float = 1e-3) -> Optional[float]:
    """Limit value of the period function at a fixed point.

    Near a fixed point orbits follow the tangent linear flow ``e^{A(z) t}``,
    so the periods of nearby points tend to its smallest period; None when the
    tangent flow has no closed orbits.
    """
    A = tangent_flow(flow, z, 1.0, tau=tau).generator
    bound = min_period_bound(A, 1e-6 * (1.0 + np.abs(A).max()))
    return None if bound is None else float(bound)


@dataclass(frozen=True)
class ZidStructure:
    """Verdict on ``Z_id`` over a probe set.

    ``case`` is ``interior_case``, ``trivial``, ``infinite_cyclic`` or
    ``undetermined``; it states consistency with that case on the probed
    points, not a proof.
    """

    case: str
    generator_samples: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"case": self.case,
                "generator_samples": [{"point": list(p), "mu": v} for p, v in self.generator_samples],
                "evidence": self.evidence}


def _discontinuity(flow: Flow, p, q, Pp, Pq, horizon, tol, levels=10):
    """Bisect between neighbouring samples whose periods differ a lot.

    A continuous period function makes the period ratio across the shrinking
    segment tend to 1; a jump keeps it bounded away from 1.
    """
    p, q = np.asarray(p), np.asarray(q)
    for _ in range(levels):
        m = 0.5 * (p + q)
        v = classify_orbit(flow, m, horizon, tol)
        if v.kind != "periodic":
            return f"midpoint {m.tolist()} classified {v.kind}"
        Pm = v.period
        if max(Pp, Pm) / min(Pp, Pm) >= max(Pm, Pq) / min(Pm, Pq):
            q, Pq = m, Pm
        else:
            p, Pp = m, Pm
    ratio = max(Pp, Pq) / min(Pp, Pq)
    return None if ratio < 1.05 else f"period ratio {ratio:.4g} persists near {p.tolist()}"


def classify_zid(flow: Flow, grid, horizon: float = 2.0, tol: float = 1e-8,
                 tangent_tol: float = 1e-6, jump_ratio: float = 1.5) -> ZidStructure:
    """Decide which case of the structure theorem for ``Z_id`` the probes support.

    1. A fixed set with interior points gives ``interior_case``.
    2. A non-closed orbit, or a fixed point whose tangent flow is the
       identity, forces every element of ``Z_id`` to vanish: ``trivial``.
    3. If every regular grid point is periodic, the period function is
       constant on orbits and has no jumps between neighbours, the periods
       generate ``Z_id``: ``infinite_cyclic``.
    4. Anything else is ``undetermined``.
    """
    if isinstance(grid, str):
        grid = Grid.parse(grid)
    fs = fixed_set_probe(flow, grid, tol)
    evidence = {"fixed_set": fs.to_dict(), "horizon": horizon, "tol": tol}
    if not fs.interior_empty:
        evidence["reason"] = "fixed set has interior points"
        return ZidStructure("interior_case", [], evidence)

    fixed_pts = fs.fixed_points
    trivial_tangent = []
    for z in fixed_pts:
        try:
            if is_tangent_flow_trivial(flow, z, tangent_tol):
                trivial_tangent.append(z.tolist())
        except InvalidArgument:
            continue
    pts = grid.points()
    regular = pts[~fs.fixed.ravel()]
    verdicts = pmap(lambda p: classify_orbit(flow, p, horizon, tol), regular)
    kinds = [v.kind for v in verdicts]
    evidence["orbit_counts"] = {k: kinds.count(k) for k in sorted(set(kinds))}
    non_closed = [p.tolist() for p, k in zip(regular, kinds) if k == "non_closed"]
    if trivial_tangent or non_closed:
        evidence.update(reason="identity tangent flow at a fixed point" if trivial_tangent
                        else "non-closed orbit found",
                        trivial_tangent_points=trivial_tangent[:20],
                        non_closed_points=non_closed[:20])
        return ZidStructure("trivial", [], evidence)
    if any(k != "periodic" for k in kinds):
        unresolved = [p.tolist() for p, k in zip(regular, kinds) if k != "periodic"]
        evidence.update(reason="some regular points are unresolved at this horizon",
                        unresolved_points=unresolved[:20])
        return ZidStructure("undetermined", [], evidence)

    periods = {tuple(p.tolist()): float(v.period) for p, v in zip(regular, verdicts)}

    # constancy on orbits: the period at Phi(s, x) must equal the period at x
    orbit_gap = 0.0
    check = regular[np.linspace(0, len(regular) - 1, min(8, len(regular))).astype(int)]
    for p in check:
        Pp = periods[tuple(p.tolist())]
        q = flow(0.37 * Pp, p)
        v = classify_orbit(flow, q, horizon, tol)
        if v.kind != "periodic":
            orbit_gap = math.inf
            break
        orbit_gap = max(orbit_gap, abs(v.period - Pp) / Pp)
    evidence["orbit_constancy_gap"] = orbit_gap
    if orbit_gap > 1e-6:
        evidence["reason"] = "period not constant along an orbit"
        return ZidStructure("undetermined", [], evidence)

    # no jumps between grid neighbours
    index = {tuple(p.tolist()): i for i, p in enumerate(pts)}
    shape = grid.shape
    jumps = []
    for p in regular:
        i = np.unravel_index(index[tuple(p.tolist())], shape)
        for ax in range(grid.dim):
            j = list(i)
            j[ax] += 1
            if j[ax] >= shape[ax]:
                continue
            q = tuple(float(grid.axes[k][j[k]]) for k in range(grid.dim))
            if q not in periods:
                continue
            Pp, Pq = periods[tuple(p.tolist())], periods[q]
            if max(Pp, Pq) / min(Pp, Pq) > jump_ratio:
                why = _discontinuity(flow, p, q, Pp, Pq, horizon, tol)
                if why:
                    jumps.append(why)
    if jumps:
        evidence.update(reason="period function jumps", jumps=jumps[:10])
        return ZidStructure("undetermined", [], evidence)

    samples = sorted(periods.items())
    fixed_values = []
    for z in fixed_pts:
        mu = fixed_point_generator(flow, z)
        if mu is not None:
            fixed_values.append((tuple(z.tolist()), mu))
    # continuity across the fixed set is reported, not enforced
    diag = []
    reg_arr = np.array([p for p, _ in samples])
    reg_val = np.array([v for _, v in samples])
    for z, mu in fixed_values:
        k = int(np.argmin(np.linalg.norm(reg_arr - np.asarray(z), axis=1)))
        diag.append({"point": list(z), "mu": mu, "nearest_regular_mu": float(reg_val[k])})
    evidence["fixed_point_limits"] = diag
    samples = sorted(samples + fixed_values)
    if not all(v > 0 for _, v in samples):
        evidence["reason"] = "non-positive generator sample"
        return ZidStructure("undetermined", [], evidence)
    evidence["reason"] = "all regular points periodic with a continuous period function"
    return ZidStructure("infinite_cyclic", samples, evidence)
