"""Orbit classification, tangent linear flows and fixed-set probes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import InvalidArgument, NumericFailure
from .flows import Flow
from .matrix_core import mat_exp

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OrbitClass:
    """Verdict on one orbit: ``fixed``, ``periodic``, ``non_closed`` or ``unresolved``."""

    kind: str
    period: Optional[float] = None
    evidence: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "period": self.period, "evidence": self.evidence}


def _golden_min(fn, a: float, b: float, xtol: float, max_iter: int = 200):
    """Golden-section search for a minimum of a unimodal function on [a, b]."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def scan_step(flow: Flow, step: Optional[float] = None) -> float:
    if step is not None:
        return float(step)
    bound = flow.period_hint if flow.period_hint else 0.01
    return min(0.01, bound / 20.0)


def classify_orbit(flow: Flow, z, horizon: float, tol: float = 1e-8,
                   step: Optional[float] = None, escape_radius: Optional[float] = None) -> OrbitClass:
    """Classify the orbit of ``z`` from samples on ``[0, horizon]``.

    The return distance ``d(t) = |Phi(t, z) - z|`` is scanned on a uniform
    grid; grid-level local minima that are small relative to the distance the
    orbit travels in one step are refined by golden-section search and accepted
    as the period when ``d(t*) < tol``.  Without a verified return the orbit is
    called ``non_closed`` only on positive evidence (escape to infinity, a
    drift away from the transverse section through ``z``, or a monotone
    sequence of section crossings); otherwise the verdict is ``unresolved``.
    """
    z = np.asarray(z, dtype=float).reshape(flow.dim)
    if not horizon > 0:
        raise InvalidArgument("horizon must be positive")
    t_end = min(float(horizon), flow.interval[1] * (1 - 1e-12))
    dt = scan_step(flow, step)
    ts = np.arange(0.0, t_end, dt)
    ts = np.append(ts, t_end) if ts[-1] < t_end else ts
    X = flow.trajectory(ts, z)
    evidence = {"horizon": t_end, "step": dt, "samples": int(len(ts)), "tol": tol}

    radius = escape_radius if escape_radius is not None else 1e6 * (1.0 + np.linalg.norm(z))
    norms = np.linalg.norm(X, axis=1)
    escaped = ~np.isfinite(norms) | (norms > radius)
    if escaped.any():
        k = int(np.argmax(escaped))
        evidence.update(reason="escape", escape_time=float(ts[k]), escape_radius=float(radius))
        return OrbitClass("non_closed", None, evidence)

    d = np.linalg.norm(X - z, axis=1)
    evidence["max_distance"] = float(d.max())
    if d.max() < tol:
        evidence["reason"] = "no displacement above tol"
        return OrbitClass("fixed", None, evidence)

    vmax = float((np.linalg.norm(np.diff(X, axis=0), axis=1) / np.diff(ts)).max())
    thr = max(math.sqrt(tol), 2.0 * dt * vmax)
    evidence["candidate_threshold"] = thr
    left = np.maximum.accumulate(d) > thr
    cand = np.flatnonzero((d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:]) & (d[1:-1] < thr) & left[1:-1]) + 1

    def dist(t):
        return float(np.linalg.norm(flow.trajectory([t], z)[0] - z))

    tried = []
    for i in cand:
        t_star, d_star = _golden_min(dist, ts[i - 1], ts[i + 1], xtol=1e-15 * max(1.0, ts[i]))
        tried.append((float(t_star), d_star))
        if d_star < tol:
            evidence.update(reason="verified return", return_distance=d_star,
                            candidates=[list(c) for c in tried])
            return OrbitClass("periodic", float(t_star), evidence)
    if tried:
        evidence["candidates"] = [list(c) for c in tried]

    F0 = flow.field(z)
    nF = float(np.linalg.norm(F0))
    if nF > 0:
        nu = F0 / nF
        p = (X - z) @ nu
        up = np.flatnonzero((p[1:-1] < 0) & (p[2:] >= 0)) + 1
        radii = []
        for i in up:
            w = p[i + 1] / (p[i + 1] - p[i])
            radii.append(float(np.linalg.norm(w * X[i] + (1 - w) * X[i + 1] - z)))
        evidence["section_crossings"] = len(radii)
        if len(radii) >= 3:
            steps = np.diff(radii)
            if np.all(steps > tol) or np.all(steps < -tol):
                evidence.update(reason="monotone section crossings", crossing_radii=radii[:20])
                return OrbitClass("non_closed", None, evidence)
        if not radii and np.all(np.diff(p) >= 0) and p[-1] > thr:
            evidence.update(reason="monotone drift away from section", drift=float(p[-1]))
            return OrbitClass("non_closed", None, evidence)
    evidence.setdefault("reason", "no verified return and no drift evidence")
    return OrbitClass("unresolved", None, evidence)


def orbit_samples(flow: Flow, z, horizon: float, step: Optional[float] = None):
    """Time grid and orbit samples used by :func:`classify_orbit`."""
    dt = scan_step(flow, step)
    ts = np.arange(0.0, horizon, dt)
    return ts, flow.trajectory(ts, np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# tangent linear flow

@dataclass(frozen=True)
class TangentFlowSample:
    point: np.ndarray
    t: float
    matrix: np.ndarray
    generator: np.ndarray
    residual: float

    def to_dict(self) -> dict:
        return {"point": self.point.tolist(), "t": self.t, "matrix": self.matrix.tolist(),
                "generator": self.generator.tolist(), "residual": self.residual}


def spatial_derivative(flow: Flow, t: float, z, exact: bool = True) -> np.ndarray:
    """``dPhi/dx(t, z)``; central differences with one Richardson level unless exact."""
    z = np.asarray(z, dtype=float).reshape(flow.dim)
    if exact and flow.jacobian_fn is not None:
        return np.asarray(flow.jacobian_fn(float(t), z), dtype=float)
    h = 1e-6 * (1.0 + np.linalg.norm(z))
    if np.any(z + h == z):
        raise NumericFailure("finite-difference step underflows", {"h": h, "point": z.tolist()})

    def central(step):
        E = np.eye(flow.dim) * step
        P = np.vstack([z + E, z - E])
        V = flow(np.full(len(P), float(t)), P)
        return ((V[:flow.dim] - V[flow.dim:]) / (2 * step)).T
    return (4.0 * central(h / 2) - central(h)) / 3.0


def tangent_flow(flow: Flow, z, t: float, exact: bool = True, tau: float = 1e-3) -> TangentFlowSample:
    """Tangent linear flow ``Psi(t, z)`` and an estimate of its generator.

    The generator comes from a Richardson-refined central difference of
    ``Psi(., z)`` at ``0``.  ``residual`` is ``|e^{A t} - Psi(t, z)|_inf``; it
    is small only where ``Psi(., z)`` is a one-parameter group, i.e. at fixed
    points.
    """
    z = np.asarray(z, dtype=float).reshape(flow.dim)
    Psi = spatial_derivative(flow, t, z, exact)
    n = flow.dim
    if flow.in_interval(-tau):
        def diff(s):
            return (spatial_derivative(flow, s, z, exact) - spatial_derivative(flow, -s, z, exact)) / (2 * s)
        A = (4.0 * diff(tau / 2) - diff(tau)) / 3.0
    else:
        def diff(s):
            return (spatial_derivative(flow, s, z, exact) - np.eye(n)) / s
        A = 2.0 * diff(tau / 2) - diff(tau)
    residual = float(np.abs(mat_exp(A * t) - Psi).max())
    return TangentFlowSample(z, float(t), Psi, A, residual)


def is_fixed_point(flow: Flow, z, tol: float = 1e-8, horizon: float = 1.0) -> bool:
    return classify_orbit(flow, z, horizon, tol).kind == "fixed"


def is_tangent_flow_trivial(flow: Flow, z, tol: float = 1e-6, t_max: float = 5.0,
                            n_times: int = 21, exact: bool = True) -> bool:
    """True when ``Psi(t, z)`` stays within ``tol`` of the identity on sampled t.

    ``z`` must be a fixed point of ``flow``.
    """
    z = np.asarray(z, dtype=float).reshape(flow.dim)
    if not is_fixed_point(flow, z, min(tol, 1e-8)):
        raise InvalidArgument(f"point {z.tolist()} is not a fixed point of {flow.name}")
    lo, hi = flow.interval
    ts = np.linspace(max(-t_max, lo * (1 - 1e-9)), min(t_max, hi * (1 - 1e-9)), n_times)
    eye = np.eye(flow.dim)
    worst = max(float(np.abs(spatial_derivative(flow, t, z, exact) - eye).max()) for t in ts)
    return worst < tol


# ---------------------------------------------------------------------------
# grids and fixed sets

@dataclass(frozen=True)
class Grid:
    """Axis-aligned sampling grid, one ``(lo, hi, steps)`` triple per axis."""

    axes: tuple

    @classmethod
    def from_triples(cls, triples: Sequence[Sequence[float]]) -> "Grid":
        axes = []
        for tr in triples:
            if len(tr) != 3:
                raise InvalidArgument(f"grid axis needs lo,hi,steps: {tr!r}")
            lo, hi, steps = float(tr[0]), float(tr[1]), tr[2]
            if int(steps) != float(steps) or int(steps) < 2:
                raise InvalidArgument(f"grid steps must be an integer >= 2, got {steps!r}")
            if not lo < hi:
                raise InvalidArgument(f"grid axis needs lo < hi: {tr!r}")
            axes.append(np.linspace(lo, hi, int(steps)))
        if not axes:
            raise InvalidArgument("empty grid")
        return cls(tuple(axes))

    @classmethod
    def parse(cls, spec: str) -> "Grid":
        """Parse ``"lo,hi,steps;lo,hi,steps;..."``."""
        triples = []
        for part in filter(None, (p.strip() for p in spec.split(";"))):
            try:
                lo, hi, steps = part.split(",")
                triples.append((float(lo), float(hi), float(steps)))
            except ValueError as exc:
                raise InvalidArgument(f"bad grid axis {part!r}") from exc
        return cls.from_triples(triples)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class FixedSetReport:
    grid: Grid
    fixed: np.ndarray
    interior: np.ndarray
    frontier: np.ndarray
    tol: float

    @property
    def interior_empty(self) -> bool:
        return not bool(self.interior.any())

    def _coords(self, mask):
        return self.grid.points()[mask.ravel()]

    @property
    def fixed_points(self) -> np.ndarray:
        return self._coords(self.fixed)

    @property
    def interior_points(self) -> np.ndarray:
        return self._coords(self.interior)

    @property
    def frontier_points(self) -> np.ndarray:
        return self._coords(self.frontier)

    def to_dict(self, max_points: int = 50) -> dict:
        return {
            "grid_shape": list(self.grid.shape),
            "tol": self.tol,
            "fixed_count": int(self.fixed.sum()),
            "interior_count": int(self.interior.sum()),
            "frontier_count": int(self.frontier.sum()),
            "interior_empty": self.interior_empty,
            "fixed_samples": self.fixed_points[:max_points].tolist(),
        }


DEFAULT_PROBE_TIMES = (0.6180339887498949, -0.3819660112501051, 1.4142135623730951)


def fixed_set_probe(flow: Flow, grid, tol: float = 1e-8,
                    times: Sequence[float] = DEFAULT_PROBE_TIMES) -> FixedSetReport:
    """Grid estimate of the fixed set F, its interior and the frontier of the interior.

    A grid point is fixed when the vector field and the displacements
    ``Phi(t, x) - x`` at the probe times are all below ``tol``.  A fixed point
    is interior when all of its grid neighbours (diagonals included) are
    fixed; neighbours beyond the grid edge count as fixed.
    """
    if isinstance(grid, str):
        grid = Grid.parse(grid)
    if grid.dim != flow.dim:
        raise InvalidArgument(f"grid has dimension {grid.dim}, flow has {flow.dim}")
    pts = grid.points()
    if len(pts) == 0:
        raise InvalidArgument("empty grid")
    fixed = np.linalg.norm(flow.field(pts), axis=1) < tol
    times = [t for t in times if flow.in_interval(t)]
    for t in times:
        idx = np.flatnonzero(fixed)
        if len(idx) == 0:
            break
        moved = np.linalg.norm(flow(t, pts[idx]) - pts[idx], axis=1) >= tol
        fixed[idx[moved]] = False
    fixed = fixed.reshape(grid.shape)
    structure = np.ones((3,) * grid.dim, dtype=bool)
    interior = ndimage.binary_erosion(fixed, structure=structure, border_value=1)
    frontier = (fixed & ndimage.binary_dilation(interior, structure=structure)
                & ndimage.binary_dilation(~interior, structure=structure))
    return FixedSetReport(grid, fixed, interior, frontier, tol)
