"""Local flows on Euclidean charts and the builtin flow registry.

A :class:`Flow` wraps a vectorised evaluator ``(t, X) -> Phi(t, X)`` together
with its chart box ``U``, its time interval ``J`` and, where known, exact
formulas for the generating vector field and the spatial derivative.
Three kinds exist: ``analytic`` (closed form), ``linear`` (``e^{At} x``) and
``integrated`` (adaptive Runge-Kutta on a vector field).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, InvalidArgument, NumericFailure
from .matrix_core import as_real_matrix, mat_exp
from .linear_flow import min_period_bound

TWO_PI = 2.0 * math.pi

# Integrator tolerances for integrated flows.
RTOL = 1e-10
ATOL = 1e-10
_BATCH = 64


@dataclass(frozen=True, eq=False)
class Flow:
    name: str
    dim: int
    kind: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    field_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian_fn: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    box: Optional[tuple] = None
    interval: tuple = (-math.inf, math.inf)
    matrix: Optional[np.ndarray] = None
    period_hint: Optional[float] = None
    params: dict = field(default_factory=dict)

    # -- domain handling -------------------------------------------------
    def in_interval(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lo, hi = self.interval
        return (t > lo) & (t < hi) if math.isfinite(lo) or math.isfinite(hi) else np.isfinite(t)

    def in_box(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        ok = np.all(np.isfinite(X), axis=1)
        if self.box is not None:
            lo, hi = self.box
            ok &= np.all((X >= lo) & (X <= hi), axis=1)
        return ok

    def _prepare(self, t, x):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if x.shape[-1:] != (self.dim,) or x.ndim > 2:
            raise InvalidArgument(f"{self.name}: expected points of dimension {self.dim}, got shape {x.shape}")
        single_point = x.ndim == 1
        X = np.atleast_2d(x)
        if t.ndim > 1:
            raise InvalidArgument("times must be a scalar or a 1-d array")
        if t.ndim == 1 and X.shape[0] not in (1, t.shape[0]):
            raise InvalidArgument("times and points have incompatible lengths")
        m = max(X.shape[0], t.size if t.ndim == 1 else 1)
        T = np.broadcast_to(t, (m,)) if t.ndim == 1 else np.full(m, float(t))
        X = np.broadcast_to(X, (m, self.dim))
        squeeze = single_point and t.ndim == 0
        return np.ascontiguousarray(T), np.ascontiguousarray(X), squeeze

    def __call__(self, t, x) -> np.ndarray:
        """Evaluate ``Phi(t, x)``.

        ``t`` may be a scalar or an array of length m, ``x`` a point or an
        ``(m, n)`` array; they broadcast against each other.
        """
        T, X, squeeze = self._prepare(t, x)
        bad_t = ~self.in_interval(T)
        if bad_t.any():
            raise DomainError(f"{self.name}: time outside {self.interval}", T[bad_t][:5].tolist())
        bad_x = ~self.in_box(X)
        if bad_x.any():
            raise DomainError(f"{self.name}: point outside the chart box", X[bad_x][:5].tolist())
        out = self.evaluator(T, X)
        return out[0] if squeeze else out

    def trajectory(self, ts, x) -> np.ndarray:
        """Samples ``Phi(ts[k], x)`` of one orbit, shape ``(len(ts), n)``."""
        ts = np.asarray(ts, dtype=float)
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if self.kind == "integrated":
            if not self.in_box(x).all():
                raise DomainError(f"{self.name}: point outside the chart box", [x.tolist()])
            if not self.in_interval(ts).all():
                raise DomainError(f"{self.name}: time outside {self.interval}")
            return _integrate_trajectory(self.field_fn, x, ts)
        return self(ts, x)

    # -- derived objects ---------------------------------------------------
    def field(self, x) -> np.ndarray:
        """Generating vector field ``dPhi/dt(0, x)``."""
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        if self.field_fn is not None:
            out = self.field_fn(X)
        else:
            h = 1e-6
            out = (self(h, X) - self(-h, X)) / (2 * h)
        return out[0] if x.ndim == 1 else out


def _batched_field(field_fn, scales):
    m = len(scales)

    def rhs(_, y):
        Y = y.reshape(m, -1)
        return (scales[:, None] * field_fn(Y)).ravel()
    return rhs


def _integrate_batch(field_fn, T, X):
    """Phi(T[i], X[i]) for an integrated flow.

    Each orbit is rescaled to unit time, ``y' = T[i] * v(y)``, so a whole
    batch shares one adaptive integration.
    """
    out = X.copy()
    idx = np.flatnonzero(T != 0)
    for start in range(0, len(idx), _BATCH):
        sel = idx[start:start + _BATCH]
        m = len(sel)
        shrink = math.sqrt(m)
        sol = solve_ivp(_batched_field(field_fn, T[sel]), (0.0, 1.0), X[sel].ravel(),
                        method="DOP853", rtol=RTOL / shrink, atol=ATOL / shrink)
        if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
            raise NumericFailure("integration failed", {"message": sol.message})
        out[sel] = sol.y[:, -1].reshape(m, -1)
    return out


def _integrate_trajectory(field_fn, x, ts):
    ts = np.asarray(ts, dtype=float)
    out = np.empty((len(ts), len(x)))
    for sign in (1.0, -1.0):
        sel = np.flatnonzero(ts * sign > 0)
        if len(sel) == 0:
            continue
        tt = ts[sel] * sign
        order = np.argsort(tt)
        sol = solve_ivp(lambda _, y: sign * field_fn(y[None])[0], (0.0, tt[order][-1]), x,
                        method="DOP853", rtol=RTOL, atol=ATOL, t_eval=tt[order])
        if sol.status != 0:
            raise NumericFailure("integration failed", {"message": sol.message})
        out[sel[order]] = sol.y.T
    out[ts == 0] = x
    return out


def _fd_matrix(fn, x, h):
    n = len(x)
    E = np.eye(n) * h
    P = np.vstack([x + E, x - E])
    V = fn(P)
    return ((V[:n] - V[n:]) / (2 * h)).T


def _variational_jacobian(field_fn, field_jac):
    """Spatial derivative of an integrated flow by the variational equation."""
    def jac_of_field(x):
        if field_jac is not None:
            return field_jac(x)
        return _fd_matrix(field_fn, x, 1e-7 * (1.0 + np.linalg.norm(x)))

    def jacobian(t, x):
        n = len(x)
        if t == 0:
            return np.eye(n)

        def rhs(_, y):
            p = y[:n]
            P = y[n:].reshape(n, n)
            return np.concatenate([t * field_fn(p[None])[0], (t * jac_of_field(p) @ P).ravel()])
        sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate([x, np.eye(n).ravel()]),
                        method="DOP853", rtol=RTOL, atol=ATOL)
        if sol.status != 0:
            raise NumericFailure("variational integration failed", {"message": sol.message})
        return sol.y[n:, -1].reshape(n, n)
    return jacobian


# ---------------------------------------------------------------------------
# builtin vector fields and flows

def _complex_rotation_flow(offset: float):
    """Phi(t, z) = exp(2 pi i (offset + |z|^2) t) z on C = R^2."""
    def evaluate(T, X):
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        ang = TWO_PI * (offset + r2) * T
        c, s = np.cos(ang), np.sin(ang)
        return np.column_stack([c * X[:, 0] - s * X[:, 1], s * X[:, 0] + c * X[:, 1]])

    def vfield(X):
        w = TWO_PI * (offset + X[:, 0] ** 2 + X[:, 1] ** 2)
        return np.column_stack([-w * X[:, 1], w * X[:, 0]])

    def vfield_jac(x):
        w = TWO_PI * (offset + x @ x)
        J = np.array([[0.0, -w], [w, 0.0]])
        return J + 2 * TWO_PI * np.outer([-x[1], x[0]], x)

    def jacobian(t, x):
        r2 = x @ x
        ang = TWO_PI * (offset + r2) * t
        c, s = math.cos(ang), math.sin(ang)
        rot = np.array([[c, -s], [s, c]])
        w = rot @ x
        # d(angle)/dx = 4 pi t x, and d(rot x)/d(angle) = i * w
        return rot + 2 * TWO_PI * t * np.outer([-w[1], w[0]], x)
    return evaluate, vfield, vfield_jac, jacobian


def _bump_field(a: float, b: float):
    height = math.exp(4.0 / (b - a) ** 2)

    def vfield(X):
        x = X[:, :1]
        inside = (x > a) & (x < b)
        q = np.where(inside, (x - a) * (b - x), 1.0)
        return np.where(inside, height * np.exp(-1.0 / q), 0.0)
    return vfield


def _field_registry(name: str, params: dict):
    """Return ``(dim, field, field_jacobian, period_hint)`` for a named vector field."""
    if name in ("example61-phi", "example61-psi"):
        offset = 1.0 if name == "example61-phi" else 0.0
        _, vf, vj, _ = _complex_rotation_flow(offset)
        return 2, vf, vj, None
    if name == "rotation":
        omega = float(params.get("omega", 1.0))
        if omega == 0:
            raise InvalidArgument("omega must be non-zero")
        A = np.array([[0.0, -omega], [omega, 0.0]])
        return 2, (lambda X: X @ A.T), (lambda x: A), TWO_PI / abs(omega)
    if name == "bump-1d":
        a, b = float(params.get("a", 1.0)), float(params.get("b", 2.0))
        if not a < b:
            raise InvalidArgument("bump support needs a < b")
        return 1, _bump_field(a, b), None, None
    raise InvalidArgument(f"unknown vector field {name!r}; known: {sorted(FIELD_NAMES)}")


FIELD_NAMES = ("example61-phi", "example61-psi", "rotation", "bump-1d")
FLOW_NAMES = ("example61-phi", "example61-psi", "rigid-rotation", "translation",
              "bump-1d", "linear", "integrated")


def integrated_flow(field_name: str, **params) -> Flow:
    dim, vf, vj, hint = _field_registry(field_name, params)
    return Flow(name=f"integrated:{field_name}", dim=dim, kind="integrated",
                evaluator=lambda T, X: _integrate_batch(vf, T, X),
                field_fn=vf, jacobian_fn=_variational_jacobian(vf, vj),
                period_hint=hint, params={"field": field_name, **params})


def linear_flow(A) -> Flow:
    A = as_real_matrix(A)
    n = A.shape[0]

    def evaluate(T, X):
        uniq, inv = np.unique(T, return_inverse=True)
        E = mat_exp(A[None] * uniq[:, None, None])
        return np.einsum("mij,mj->mi", E[inv.reshape(-1)], X)

    return Flow(name="linear", dim=n, kind="linear", evaluator=evaluate,
                field_fn=lambda X: X @ A.T,
                jacobian_fn=lambda t, x: mat_exp(A * t),
                matrix=A, period_hint=min_period_bound(A), params={"matrix": A.tolist()})


def make_flow(spec, **params) -> Flow:
    """Build a flow from a registry name or a ``NAME:params`` string.

    Names: ``example61-phi``, ``example61-psi``, ``rigid-rotation`` (omega),
    ``translation`` (dim), ``bump-1d`` (a, b), ``linear`` (matrix) and
    ``integrated`` (field plus the field's own parameters).
    """
    if isinstance(spec, Flow):
        return spec
    name, parsed = parse_spec(spec)
    parsed.update(params)
    params = parsed
    if name in ("example61-phi", "example61-psi"):
        offset = 1.0 if name == "example61-phi" else 0.0
        ev, vf, _, jac = _complex_rotation_flow(offset)
        return Flow(name=name, dim=2, kind="analytic", evaluator=ev, field_fn=vf,
                    jacobian_fn=jac, params={})
    if name == "rigid-rotation":
        omega = float(params.get("omega", 1.0))
        if omega == 0:
            raise InvalidArgument("omega must be non-zero")

        def rotate(T, X, omega=omega):
            c, s = np.cos(omega * T), np.sin(omega * T)
            return np.column_stack([c * X[:, 0] - s * X[:, 1], s * X[:, 0] + c * X[:, 1]])

        def jac(t, x, omega=omega):
            c, s = math.cos(omega * t), math.sin(omega * t)
            return np.array([[c, -s], [s, c]])
        return Flow(name=name, dim=2, kind="analytic", evaluator=rotate,
                    field_fn=lambda X: omega * np.column_stack([-X[:, 1], X[:, 0]]),
                    jacobian_fn=jac, period_hint=TWO_PI / abs(omega),
                    params={"omega": omega})
    if name == "translation":
        dim = int(params.get("dim", 1))
        if dim < 1:
            raise InvalidArgument("dim must be positive")
        e1 = np.zeros(dim)
        e1[0] = 1.0
        return Flow(name=name, dim=dim, kind="analytic",
                    evaluator=lambda T, X: X + T[:, None] * e1,
                    field_fn=lambda X: np.broadcast_to(e1, X.shape).copy(),
                    jacobian_fn=lambda t, x: np.eye(dim), params={"dim": dim})
    if name == "bump-1d":
        return dataclasses.replace(integrated_flow("bump-1d", **params), name="bump-1d")
    if name == "linear":
        if "matrix" not in params:
            raise InvalidArgument("linear flow needs a matrix")
        return linear_flow(params["matrix"])
    if name == "integrated":
        params = dict(params)
        field_name = params.pop("field", None)
        if field_name is None:
            raise InvalidArgument("integrated flow needs field=NAME")
        return integrated_flow(field_name, **params)
    raise InvalidArgument(f"unknown flow {name!r}; known: {', '.join(FLOW_NAMES)}")


def parse_spec(spec: str):
    """Split ``"name:key=value,key=value"`` (or ``"name:value"``) into name and params."""
    if not isinstance(spec, str):
        raise InvalidArgument(f"expected a flow specification string, got {spec!r}")
    name, _, rest = spec.partition(":")
    params: dict = {}
    for i, item in enumerate(filter(None, rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            key, value = f"_{i}", key
        value = value.strip()
        try:
            params[key.strip()] = float(value) if any(c in value for c in ".eE") else int(value)
        except ValueError:
            params[key.strip()] = value
    return name.strip(), params


# ---------------------------------------------------------------------------
# checks on flows

@dataclass(frozen=True)
class AxiomReport:
    passed: bool
    max_identity_violation: float
    max_group_violation: float
    checked: int
    skipped: int
    tol: float
    worst_sample: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def check_flow_axioms(flow: Flow, samples, tol: float = 1e-8) -> AxiomReport:
    """Largest violations of ``Phi(0,x) = x`` and ``Phi(s, Phi(t,x)) = Phi(t+s, x)``.

    Samples are ``(t, s, x)`` triples; those leaving the time interval or the
    chart box are skipped and counted.
    """
    samples = list(samples)
    if not samples:
        return AxiomReport(True, 0.0, 0.0, 0, 0, tol)
    T = np.array([float(s[0]) for s in samples])
    S = np.array([float(s[1]) for s in samples])
    X = np.array([np.asarray(s[2], dtype=float).reshape(flow.dim) for s in samples])
    ok = flow.in_box(X) & flow.in_interval(T) & flow.in_interval(S) & flow.in_interval(T + S)
    X, T, S = X[ok], T[ok], S[ok]
    id_err = np.abs(flow(np.zeros(len(X)), X) - X).max(axis=1) if len(X) else np.zeros(0)
    Y = flow(T, X) if len(X) else X
    inside = flow.in_box(Y)
    grp = np.zeros(len(X))
    if inside.any():
        lhs = flow(S[inside], Y[inside])
        rhs = flow(T[inside] + S[inside], X[inside])
        grp[inside] = np.abs(lhs - rhs).max(axis=1)
    skipped = int((~ok).sum() + (~inside).sum())
    mi = float(id_err.max(initial=0.0))
    mg = float(grp.max(initial=0.0))
    worst = None
    if len(grp) and mg > 0:
        k = int(np.argmax(grp))
        worst = (float(T[k]), float(S[k]), X[k].tolist())
    return AxiomReport(bool(mi < tol and mg < tol), mi, mg, int(inside.sum()), skipped, tol, worst)


def random_axiom_samples(flow: Flow, count: int, rng: np.random.Generator,
                         time_range: float = 2.0, radius: float = 2.0):
    """Random ``(t, s, x)`` triples with ``x`` uniform in the chart box (or a cube)."""
    lo = np.full(flow.dim, -radius)
    hi = np.full(flow.dim, radius)
    if flow.box is not None:
        lo = np.maximum(lo, flow.box[0])
        hi = np.minimum(hi, flow.box[1])
    tlo, thi = max(-time_range, flow.interval[0]), min(time_range, flow.interval[1])
    out = []
    for _ in range(count):
        t, s = rng.uniform(tlo, thi, size=2) * 0.5
        out.append((float(t), float(s), rng.uniform(lo, hi)))
    return out


def vector_field(flow: Flow, x) -> np.ndarray:
    return flow.field(x)


def write_orbit_csv(fh, ts, X) -> None:
    """Write orbit samples as CSV with header ``t,x1,...,xn``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    fh.write(",".join(["t"] + [f"x{i + 1}" for i in range(n)]) + "\n")
    for t, row in zip(np.asarray(ts, dtype=float), X):
        fh.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")
