"""Shift functions ``alpha: U -> R`` and the mappings ``phi(alpha)(x) = Phi(alpha(x), x)``."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.optimize import brentq

from .errors import DomainError, InvalidArgument
from .flows import Flow, parse_spec


class ShiftFunction:
    """A real-valued function on a chart, vectorised over points.

    Shift functions add, negate and scale pointwise, which is the group law
    of ``C(U, R)``.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str = "shift",
                 dim: Optional[int] = None):
        self._fn = fn
        self.name = name
        self.dim = dim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        vals = np.asarray(self._fn(X), dtype=float).reshape(len(X))
        if not np.all(np.isfinite(vals)):
            bad = X[~np.isfinite(vals)]
            raise DomainError(f"shift {self.name} is not finite at some points", bad[:5].tolist())
        return float(vals[0]) if x.ndim == 1 else vals

    def __repr__(self):
        return f"ShiftFunction({self.name})"

    def __add__(self, other):
        other = as_shift(other)
        return ShiftFunction(lambda X: self._fn(X) + other._fn(X),
                             f"({self.name} + {other.name})", self.dim or other.dim)

    __radd__ = __add__

    def __neg__(self):
        return ShiftFunction(lambda X: -self._fn(X), f"-{self.name}", self.dim)

    def __sub__(self, other):
        return self + (-as_shift(other))

    def __rsub__(self, other):
        return as_shift(other) - self

    def __mul__(self, k):
        k = float(k)
        return ShiftFunction(lambda X: k * self._fn(X), f"{k:g}*{self.name}", self.dim)

    __rmul__ = __mul__


def constant(c: float, dim: Optional[int] = None) -> ShiftFunction:
    c = float(c)
    return ShiftFunction(lambda X: np.full(len(X), c), f"{c:g}", dim)


def as_shift(obj) -> ShiftFunction:
    if isinstance(obj, ShiftFunction):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return constant(float(obj))
    raise InvalidArgument(f"cannot use {obj!r} as a shift function")


def example61_mu() -> ShiftFunction:
    """``z -> 1 / (1 + |z|^2)``, the period function of the example flow on C."""
    return ShiftFunction(lambda X: 1.0 / (1.0 + np.sum(X * X, axis=1)), "example61-mu", 2)


def bump(center, radius: float, height: float = 1.0) -> ShiftFunction:
    """Smooth radial bump ``height * exp(1 - 1/(1 - (|x-c|/r)^2))`` supported in the open ball."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    r = float(radius)
    if not r > 0:
        raise InvalidArgument("bump radius must be positive")

    def fn(X):
        q = np.sum((X - c) ** 2, axis=1) / r ** 2
        inside = q < 1
        out = np.zeros(len(X))
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out
    return ShiftFunction(fn, f"bump(c={c.tolist()},r={r:g},h={height:g})", len(c))


def tabulated(points, values) -> ShiftFunction:
    """Piecewise-linear interpolation of samples; outside their hull the value is undefined."""
    P = np.asarray(points, dtype=float)
    v = np.asarray(values, dtype=float).reshape(-1)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) != len(v) or len(v) == 0:
        raise InvalidArgument("tabulated shift needs one value per point")
    if P.shape[1] == 1:
        order = np.argsort(P[:, 0])
        xs, ys = P[order, 0], v[order]

        def fn(X):
            x = X[:, 0]
            out = np.interp(x, xs, ys)
            out[(x < xs[0]) | (x > xs[-1])] = np.nan
            return out
    else:
        interp = LinearNDInterpolator(P, v, fill_value=np.nan)

        def fn(X):
            return interp(X)
    return ShiftFunction(fn, f"tabulated[{len(v)}]", P.shape[1])


def read_shift_csv(text: str) -> ShiftFunction:
    """Parse CSV rows ``x1,...,xn,value``; a non-numeric first row is a header."""
    rows = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            if rows:
                raise InvalidArgument(f"bad shift CSV row: {row!r}")
    if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
        raise InvalidArgument("shift CSV needs rows x1,...,xn,value of equal length")
    arr = np.array(rows)
    return tabulated(arr[:, :-1], arr[:, -1])


SHIFT_NAMES = ("zero", "constant", "example61-mu", "bump")


def make_shift(spec) -> ShiftFunction:
    """Builtin shift from ``"zero"``, ``"constant:c"``, ``"example61-mu"`` or
    ``"bump:center=...,radius=...,height=..."`` (center may be ``a|b`` for 2-d)."""
    if isinstance(spec, ShiftFunction):
        return spec
    name, params = parse_spec(spec)
    if name == "zero":
        return constant(0.0)
    if name == "constant":
        return constant(float(params.get("c", params.get("_0", 0.0))))
    if name == "example61-mu":
        return example61_mu()
    if name == "bump":
        center = params.get("center", 0.0)
        if isinstance(center, str):
            center = [float(v) for v in center.split("|")]
        return bump(center, float(params.get("radius", 1.0)), float(params.get("height", 1.0)))
    raise InvalidArgument(f"unknown shift function {name!r}; known: {', '.join(SHIFT_NAMES)}")


@dataclass(frozen=True, eq=False)
class ParamMapping:
    """The self-map ``x -> Phi(alpha(x), x)`` of a flow."""

    flow: Flow
    alpha: ShiftFunction

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        T = np.atleast_1d(self.alpha(X))
        bad = ~self.flow.in_interval(T)
        if bad.any():
            raise DomainError(f"shift {self.alpha.name} leaves the time interval of {self.flow.name}",
                              X[bad][:5].tolist())
        out = self.flow(T, X)
        return out[0] if x.ndim == 1 else out


def apply_phi(flow: Flow, alpha) -> ParamMapping:
    return ParamMapping(flow, as_shift(alpha))


def sigma_compose(alpha, beta, g: ParamMapping, flow: Optional[Flow] = None) -> ShiftFunction:
    """Shift function of ``phi(alpha) o g`` where ``g = phi(beta)``: ``alpha(g(z)) + beta(z)``."""
    alpha, beta = as_shift(alpha), as_shift(beta)
    if not isinstance(g, ParamMapping) or g.alpha is not beta:
        raise InvalidArgument("g must be phi(beta) for the given beta")
    if flow is not None and g.flow is not flow:
        raise InvalidArgument("g is built over a different flow")
    return ShiftFunction(lambda X: alpha(g(X)) + beta(X),
                         f"sigma({alpha.name} o {beta.name})", beta.dim)


def sigma_inverse(gamma, h: ParamMapping, h_inv: Callable[[np.ndarray], np.ndarray],
                  tol: float = 1e-8) -> ShiftFunction:
    """Shift function of ``h^{-1}`` for ``h = phi(gamma)``: ``-gamma(h^{-1}(z))``.

    ``h_inv`` may be numeric; each evaluation checks ``|h(h_inv(z)) - z| <= tol``.
    """
    gamma = as_shift(gamma)
    if not isinstance(h, ParamMapping) or h.alpha is not gamma:
        raise InvalidArgument("h must be phi(gamma) for the given gamma")

    def fn(X):
        W = np.atleast_2d(np.asarray(h_inv(X), dtype=float)).reshape(X.shape)
        err = np.abs(h(W) - X).max(axis=1)
        if np.any(err > tol * (1.0 + np.abs(X).max(axis=1))):
            k = int(np.argmax(err))
            raise InvalidArgument(f"h_inv is not an inverse of h at {X[k].tolist()} (error {err[k]:.3g})")
        return -gamma(W)
    return ShiftFunction(fn, f"sigma_inv({gamma.name})", gamma.dim)


def invert_by_bisection(h: Callable, reach: float = 10.0, xtol: float = 1e-14) -> Callable:
    """Numeric inverse of an increasing map of the line, searched in ``[z - reach, z + reach]``."""
    def inv(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty_like(X)
        for i, z in enumerate(X[:, 0]):
            def f(w, z=z):
                return float(np.atleast_1d(h(np.array([w])))[0]) - z
            out[i, 0] = brentq(f, z - reach, z + reach, xtol=xtol, rtol=4 * np.finfo(float).eps)
        return out
    return inv


def invert_param_mapping(h: ParamMapping, bound: float, xtol: float = 1e-15) -> Callable:
    """Numeric inverse of an injective ``h = phi(alpha)`` with ``|alpha| < bound``.

    ``h(w) = z`` forces ``w = Phi(-s, z)`` with ``s = alpha(w)``, so ``s`` is
    the root of ``s - alpha(Phi(-s, z))`` in ``[-bound, bound]``.
    """
    flow, alpha = h.flow, h.alpha
    bound = float(bound)
    if not bound > 0:
        raise InvalidArgument("bound must be positive")

    def inv(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty_like(X)
        for i, z in enumerate(X):
            def g(s, z=z):
                return s - alpha(flow(-s, z))
            s = brentq(g, -bound, bound, xtol=xtol, rtol=4 * np.finfo(float).eps)
            out[i] = flow(-s, z)
        return out
    return inv


def make_fmap(flow: Flow, spec) -> Callable:
    """Orbit-preserving map from ``"identity"``, ``"time:a"`` (``Phi_a``) or ``"phi:SHIFT"``."""
    if callable(spec) and not isinstance(spec, str):
        return spec
    name, _, rest = str(spec).partition(":")
    if name == "identity":
        return lambda X: np.array(X, dtype=float)
    if name == "time":
        try:
            a = float(rest)
        except ValueError as exc:
            raise InvalidArgument(f"bad time map {spec!r}") from exc
        return lambda X: flow(a, X)
    if name == "phi":
        return apply_phi(flow, make_shift(rest))
    raise InvalidArgument(f"unknown fmap {spec!r}; use identity, time:A or phi:SHIFT")


def ball_samples(center, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` points uniform in the closed ball, the centre first."""
    c = np.asarray(center, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    n = len(c)
    d = rng.normal(size=(count - 1, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(count - 1) ** (1.0 / n)
    return np.vstack([c, c + d * r[:, None]])

