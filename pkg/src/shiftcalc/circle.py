"""Circle actions, their covering flows, ineffectivity kernels and fixed-set probes.

The circle is parametrised by ``[0, 1)``, so the covering map is
``p(t) = t mod 1`` and a finite kernel of order m is exactly ``{j/m}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._parallel import pmap
from .errors import InconsistentKernel, InvalidArgument, TheoremViolation
from .flows import Flow, parse_spec
from .orbits import Grid, fixed_set_probe

MAX_KERNEL_ORDER = 1024
SCAN_POINTS = 4096
# per-point isotropy scan; resolves isotropy groups of order up to 512
ADMISSIBLE_SCAN = 2048
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
# irrational probe angles, away from every j/m with small m
NEWMAN_TIMES = (0.6180339887498949, 0.3819660112501051, 0.1415926535897932)


@dataclass(frozen=True, eq=False)
class CircleAction:
    """Action of ``S^1 = R/Z`` on ``R^n``; ``evaluator(theta, X)`` is vectorised."""

    name: str
    dim: int
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    field_fn: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __call__(self, theta, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        th = np.mod(np.broadcast_to(np.asarray(theta, dtype=float), (len(X),)), 1.0)
        out = self.evaluator(th, X)
        return out[0] if x.ndim == 1 and np.ndim(theta) == 0 else out


def _planar_rotation(k: int, dim: int):
    """Rotate the first two coordinates by ``2*pi*k*theta``; the rest are fixed."""
    w = 2.0 * math.pi * k

    def evaluate(T, X):
        c, s = np.cos(w * T), np.sin(w * T)
        out = X.copy()
        out[:, 0] = c * X[:, 0] - s * X[:, 1]
        out[:, 1] = s * X[:, 0] + c * X[:, 1]
        return out

    def vfield(X):
        out = np.zeros_like(X)
        out[:, 0] = -w * X[:, 1]
        out[:, 1] = w * X[:, 0]
        return out

    def jacobian(t, x):
        c, s = math.cos(w * t), math.sin(w * t)
        J = np.eye(dim)
        J[:2, :2] = [[c, -s], [s, c]]
        return J
    return evaluate, vfield, jacobian


ACTION_NAMES = ("k-fold-rotation", "trivial", "product-rotation")


def make_action(spec, **params) -> CircleAction:
    """Builtin action from ``"k-fold-rotation:k"``, ``"trivial[:dim=n]"`` or
    ``"product-rotation[:k]"`` (rotation of the C factor of C x R)."""
    if isinstance(spec, CircleAction):
        return spec
    name, parsed = parse_spec(spec)
    parsed.update(params)
    if name in ("k-fold-rotation", "product-rotation"):
        k = parsed.get("k", parsed.get("_0", 1))
        if int(k) != k or int(k) < 1:
            raise InvalidArgument(f"k must be a positive integer, got {k!r}")
        k = int(k)
        dim = 2 if name == "k-fold-rotation" else 3
        ev, vf, jac = _planar_rotation(k, dim)
        return CircleAction(name, dim, ev, vf, jac, {"k": k})
    if name == "trivial":
        dim = int(parsed.get("dim", parsed.get("_0", 2)))
        if dim < 1:
            raise InvalidArgument("dim must be positive")
        return CircleAction(name, dim, lambda T, X: X.copy(), lambda X: np.zeros_like(X),
                            lambda t, x: np.eye(dim), {"dim": dim})
    raise InvalidArgument(f"unknown action {name!r}; known: {', '.join(ACTION_NAMES)}")


def lift_action(action: CircleAction) -> Flow:
    """Covering flow ``(t, x) -> Phi(t mod 1, x)`` on the whole line of times."""
    k = action.params.get("k")
    return Flow(name=f"lift({action.name})", dim=action.dim, kind="analytic",
                evaluator=lambda T, X: action.evaluator(np.mod(T, 1.0), X),
                field_fn=action.field_fn, jacobian_fn=action.jacobian_fn,
                period_hint=1.0 / k if k else None, params=dict(action.params))


def _golden_vec(fn, a, b, iters: int = 80):
    """Elementwise golden-section minimisation on the intervals ``[a_i, b_i]``."""
    a, b = np.array(a, dtype=float), np.array(b, dtype=float)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc <= fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        nc = np.where(left, b - _GOLDEN * (b - a), d)
        nd = np.where(left, c, a + _GOLDEN * (b - a))
        fx = fn(np.where(left, nc, nd))
        fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
        c, d = nc, nd
    best = np.where(fc <= fd, c, d)
    return best, np.minimum(fc, fd)


def _minima(D: np.ndarray) -> np.ndarray:
    """Indices of periodic local minima along the last axis (as a boolean mask)."""
    return (D <= np.roll(D, 1, axis=-1)) & (D <= np.roll(D, -1, axis=-1))


def _refine(disp, idx: np.ndarray, n: int):
    h = 1.0 / n
    th, val = _golden_vec(disp, idx * h - h, idx * h + h)
    return np.mod(th, 1.0), val


def _dedupe_angles(th, val, tol_angle: float = 1e-7):
    """Merge refined angles closer than ``tol_angle`` on the circle, keeping the best."""
    th = np.mod(np.asarray(th, dtype=float), 1.0)
    th = np.where(th > 1.0 - tol_angle, th - 1.0, th)
    order = np.argsort(th)
    th, val = th[order], np.asarray(val)[order]
    out_t, out_v = [], []
    for t, v in zip(th, val):
        if out_t and t - out_t[-1] < tol_angle:
            if v < out_v[-1]:
                out_t[-1], out_v[-1] = t, v
            continue
        out_t.append(t)
        out_v.append(v)
    return np.array(out_t), np.array(out_v)


def _fit_cyclic(values, tol_angle: float = 1e-7):
    """m when the sorted angles are ``{j/m}``; None otherwise."""
    v = np.sort(np.asarray(values, dtype=float))
    m = len(v)
    if m == 0 or m > MAX_KERNEL_ORDER:
        return None
    return m if np.abs(v - np.arange(m) / m).max() < tol_angle else None


@dataclass(frozen=True)
class KernelReport:
    """Ineffectivity kernel ``K``: ``order`` is m (``K = {j/m}``) or ``"full"``."""

    order: object
    elements: tuple
    raw_elements: tuple
    max_displacement: tuple
    tol: float

    @property
    def is_full(self) -> bool:
        return self.order == "full"

    def to_dict(self) -> dict:
        return {"order": self.order, "elements": list(self.elements),
                "raw_elements": list(self.raw_elements),
                "max_displacement": list(self.max_displacement), "tol": self.tol}


def _grid_points(grid, dim: int) -> np.ndarray:
    if isinstance(grid, str):
        grid = Grid.parse(grid)
    pts = grid.points() if isinstance(grid, Grid) else np.atleast_2d(np.asarray(grid, dtype=float))
    if len(pts) == 0:
        raise InvalidArgument("grid is empty")
    if pts.shape[1] != dim:
        raise InvalidArgument(f"grid has dimension {pts.shape[1]}, action has {dim}")
    return pts


def ineffectivity_kernel(action: CircleAction, grid, tol: float = 1e-8,
                         scan: int = SCAN_POINTS) -> KernelReport:
    """Angles acting as the identity on every grid point.

    The maximal displacement over the grid is scanned on ``scan`` angles;
    each scan minimum is refined by golden-section search and kept when the
    refined displacement is below ``tol``.  The survivors must be ``{j/m}``.
    """
    pts = _grid_points(grid, action.dim)

    def disp(thetas):
        thetas = np.atleast_1d(thetas)
        out = np.empty(len(thetas))
        for i, th in enumerate(thetas):
            out[i] = np.abs(action(th, pts) - pts).max()
        return out

    thetas = np.arange(scan) / scan
    D = np.concatenate(pmap(disp, np.array_split(thetas, max(1, min(16, scan // 64)))))
    if D.max() < tol:
        return KernelReport("full", (), (), (float(D.max()),), tol)
    idx = np.flatnonzero(_minima(D))
    th, val = _refine(disp, idx, scan)
    keep = val < tol
    raw, vals = _dedupe_angles(th[keep], val[keep])
    if D[0] >= tol and not np.any(np.minimum(raw, 1 - raw) < 1e-9):
        raise InconsistentKernel("theta = 0 does not act as the identity")
    m = _fit_cyclic(raw)
    if m is None:
        raise InconsistentKernel(f"kernel candidates {raw[:10].tolist()} do not form a cyclic group "
                                 f"of order <= {MAX_KERNEL_ORDER}")
    elements = tuple(j / m for j in range(m))
    return KernelReport(m, elements, tuple(float(v) for v in raw),
                        tuple(float(v) for v in vals), tol)


@dataclass(frozen=True)
class CircleZid:
    """``Z_id`` of a circle action: constant maps into ``K = {j/m}``, or the trivial-action verdict."""

    verdict: str
    order: object
    constants: tuple
    admissible: list = field(repr=False, compare=False, default_factory=list)
    common: tuple = ()
    constancy_forced: bool = False
    tol: float = 1e-8

    def to_dict(self, max_points: int = 50) -> dict:
        return {"verdict": self.verdict, "order": self.order, "constants": list(self.constants),
                "common_refinement": list(self.common), "constancy_forced": self.constancy_forced,
                "tol": self.tol, "admissible_sets": self.admissible[:max_points],
                "admissible_count": len(self.admissible)}


def admissible_angles(action: CircleAction, points, tol: float = 1e-8,
                      scan: int = ADMISSIBLE_SCAN, chunk: int = 256) -> list:
    """Per point, the angles with ``Phi(theta, x) = x``; ``"all"`` for fixed points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    thetas = np.arange(scan) / scan

    def work(block):
        P = pts[block]
        m = len(P)
        D = np.linalg.norm(action(np.repeat(thetas, m), np.tile(P, (scan, 1)))
                           - np.tile(P, (scan, 1)), axis=1).reshape(scan, m).T
        full = D.max(axis=1) < tol
        rows_idx, th_idx = np.nonzero(_minima(D) & ~full[:, None])
        Q = P[rows_idx]
        th, val = _refine(lambda t: np.linalg.norm(action(t, Q) - Q, axis=1), th_idx, scan)
        rows = []
        for i in range(m):
            if full[i]:
                rows.append("all")
                continue
            sel = (rows_idx == i) & (val < tol)
            rows.append(_dedupe_angles(th[sel], val[sel])[0].tolist())
        return rows

    blocks = [np.arange(i, min(i + chunk, len(pts))) for i in range(0, len(pts), chunk)]
    return [r for rows in pmap(work, blocks) for r in rows]


def _same_angle_set(u, v, tol_angle=1e-7) -> bool:
    if len(u) != len(v):
        return False
    du = np.abs(np.mod(np.asarray(u) - np.asarray(v) + 0.5, 1.0) - 0.5)
    return bool(du.max(initial=0.0) < tol_angle)


def zid_circle(action: CircleAction, grid, tol: float = 1e-8,
               kernel: Optional[KernelReport] = None) -> CircleZid:
    """Describe ``Z_id`` through admissible angle sets.

    A continuous shift function in ``Z_id`` takes at each point ``x`` a value
    in ``A(x) = {theta : Phi(theta, x) = x}``.  When every non-fixed grid point
    has the same finite ``A(x)``, equal to the kernel, only constant choices
    are continuous and ``Z_id`` is the kernel.
    """
    kernel = kernel or ineffectivity_kernel(action, grid, tol)
    if kernel.is_full:
        return CircleZid("trivial-action", "full", (), [], (), False, tol)
    pts = _grid_points(grid, action.dim)
    sets = admissible_angles(action, pts, tol)
    moving = [s for s in sets if s != "all"]
    common = list(kernel.raw_elements)
    for s in moving:
        common = [c for c in common
                  if np.any(np.abs(np.mod(np.asarray(s) - c + 0.5, 1.0) - 0.5) < 1e-7)]
    uniform = bool(moving) and all(_same_angle_set(s, moving[0]) for s in moving)
    forced = uniform and _same_angle_set(moving[0], kernel.raw_elements)
    table = [{"point": p.tolist(), "admissible": s} for p, s in zip(pts, sets)]
    return CircleZid("constants-in-kernel", kernel.order, kernel.elements, table,
                     tuple(common), forced, tol)


@dataclass(frozen=True)
class NewmanReport:
    fix_samples: list
    fixed_count: int
    interior_empty: bool
    interior_count: int
    grid_shape: tuple
    tol: float

    def to_dict(self) -> dict:
        return {"fix_samples": self.fix_samples, "fixed_count": self.fixed_count,
                "interior_empty": self.interior_empty, "interior_count": self.interior_count,
                "grid_shape": list(self.grid_shape), "tol": self.tol}


def newman_check(action: CircleAction, grid, tol: float = 1e-8,
                 kernel: Optional[KernelReport] = None) -> NewmanReport:
    """Probe the fixed set of a non-trivial action; it must have empty interior.

    Raises TheoremViolation when interior points are found, which points at
    a bug or a tolerance that is too loose.
    """
    if isinstance(grid, str):
        grid = Grid.parse(grid)
    kernel = kernel or ineffectivity_kernel(action, grid, tol)
    if kernel.is_full:
        raise InvalidArgument("the action is trivial; the fixed set is everything")
    fs = fixed_set_probe(lift_action(action), grid, tol, times=NEWMAN_TIMES)
    report = NewmanReport(fs.fixed_points[:50].tolist(), int(fs.fixed.sum()), fs.interior_empty,
                          int(fs.interior.sum()), grid.shape, tol)
    if not fs.interior_empty:
        raise TheoremViolation("fixed set of a non-trivial circle action has interior points",
                               report.to_dict())
    return report
