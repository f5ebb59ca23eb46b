"""Real matrix utilities: rotation blocks, real Jordan cells, spectra and exponentials.

Jordan cells follow the lower-bidiagonal layout: the base block sits on the
diagonal and identity blocks sit immediately *below* it.  Spectra and
exponential norms are insensitive to the transpose, so nothing downstream
depends on this choice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.cluster.hierarchy
import scipy.linalg
import scipy.spatial.distance

from .errors import InvalidArgument, NumericFailure

EPS = np.finfo(float).eps

# Padé coefficients b_0..b_m of the diagonal [m/m] approximant to exp.
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
# Largest 1-norm for which the [m/m] approximant is accurate to unit roundoff.
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0,
          13: 5.371920351148152e0}

# Spread allowance for eigenvalues of a defective cluster of size k:
# perturbations grow like (eps * ||X||)**(1/k).
_DEFECT_FACTOR = 2.0


def as_real_matrix(X) -> np.ndarray:
    """Validate and return ``X`` as a finite square float array."""
    A = np.array(X, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidArgument(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("matrix has non-finite entries")
    return A


def rotation_block(alpha: float, beta: float) -> np.ndarray:
    """The 2x2 real block ``[[alpha, -beta], [beta, alpha]]`` of ``alpha + i*beta``."""
    return np.array([[alpha, -beta], [beta, alpha]], dtype=float)


def jordan_cell(base, p: int) -> np.ndarray:
    """Block lower-bidiagonal Jordan cell with ``p`` copies of ``base``.

    >>> jordan_cell([[0.0]], 2)
    array([[0., 0.],
           [1., 0.]])
    """
    B = as_real_matrix(base)
    if int(p) != p or p < 1:
        raise InvalidArgument(f"cell size must be a positive integer, got {p!r}")
    p = int(p)
    k = B.shape[0]
    J = np.zeros((p * k, p * k))
    eye = np.eye(k)
    for i in range(p):
        J[i * k:(i + 1) * k, i * k:(i + 1) * k] = B
        if i > 0:
            J[i * k:(i + 1) * k, (i - 1) * k:i * k] = eye
    return J


@dataclass(frozen=True)
class RealCell:
    eigenvalue: float
    size: int

    @property
    def dimension(self) -> int:
        return self.size

    def base(self) -> np.ndarray:
        return np.array([[self.eigenvalue]], dtype=float)


@dataclass(frozen=True)
class ComplexCell:
    """Cell for the conjugate pair ``alpha +- i*beta`` (``beta != 0``)."""

    alpha: float
    beta: float
    size: int

    @property
    def dimension(self) -> int:
        return 2 * self.size

    def base(self) -> np.ndarray:
        return rotation_block(self.alpha, self.beta)


Cell = Union[RealCell, ComplexCell]


@dataclass(frozen=True)
class JordanBlueprint:
    """Ordered list of real and complex Jordan cells with structure known by construction."""

    cells: tuple

    def __post_init__(self):
        cells = tuple(self.cells)
        if not cells:
            raise InvalidArgument("blueprint needs at least one cell")
        for c in cells:
            if not isinstance(c, (RealCell, ComplexCell)):
                raise InvalidArgument(f"not a Jordan cell: {c!r}")
            if int(c.size) != c.size or c.size < 1:
                raise InvalidArgument(f"cell size must be a positive integer: {c!r}")
            if isinstance(c, ComplexCell) and c.beta == 0:
                raise InvalidArgument("complex cell with beta == 0")
            vals = (c.eigenvalue,) if isinstance(c, RealCell) else (c.alpha, c.beta)
            if not all(math.isfinite(v) for v in vals):
                raise InvalidArgument(f"non-finite cell parameter: {c!r}")
        object.__setattr__(self, "cells", cells)

    @property
    def dimension(self) -> int:
        return sum(c.dimension for c in self.cells)

    def eigenvalues(self) -> np.ndarray:
        """Exact eigenvalues with multiplicity, sorted by (Re, Im)."""
        vals = []
        for c in self.cells:
            if isinstance(c, RealCell):
                vals += [complex(c.eigenvalue)] * c.size
            else:
                vals += [complex(c.alpha, c.beta), complex(c.alpha, -c.beta)] * c.size
        return np.sort(np.array(vals, dtype=complex))

    def offsets(self):
        """Start index of each cell in the assembled matrix."""
        out, pos = [], 0
        for c in self.cells:
            out.append(pos)
            pos += c.dimension
        return out


def assemble_real_jordan(bp: JordanBlueprint) -> np.ndarray:
    blocks = [jordan_cell(c.base(), c.size) for c in bp.cells]
    return scipy.linalg.block_diag(*blocks)


def random_blueprint(rng: np.random.Generator, max_dim: int = 8, *,
                     require_imaginary: bool = False,
                     max_cell_size: int = 3) -> JordanBlueprint:
    """Draw a random blueprint of dimension at most ``max_dim``.

    Real eigenvalues lie in [-1, 0.5], complex pairs have real part in
    [-0.5, 0.2] (or exactly 0 when purely imaginary) and frequency in [0.5, 3].
    With ``require_imaginary`` the first cell is a purely imaginary pair.
    """
    if max_dim < 1 or (require_imaginary and max_dim < 2):
        raise InvalidArgument("max_dim too small")
    target = int(rng.integers(2 if require_imaginary else 1, max_dim + 1))
    cells: list = []
    used = 0
    while used < target:
        room = target - used
        first = not cells
        want_complex = (first and require_imaginary) or (room >= 2 and rng.random() < 0.6)
        if want_complex:
            size = int(rng.integers(1, min(max_cell_size, room // 2) + 1))
            beta = float(rng.uniform(0.5, 3.0)) * (1 if rng.random() < 0.5 else -1)
            purely = (first and require_imaginary) or rng.random() < 0.4
            alpha = 0.0 if purely else float(rng.uniform(-0.5, 0.2))
            cells.append(ComplexCell(alpha, beta, size))
        else:
            size = int(rng.integers(1, min(max_cell_size, room) + 1))
            lam = 0.0 if rng.random() < 0.15 else float(rng.uniform(-1.0, 0.5))
            cells.append(RealCell(lam, size))
        used += cells[-1].dimension
    order = rng.permutation(len(cells))
    return JordanBlueprint(tuple(cells[i] for i in order))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a real matrix grouped into clusters with multiplicities.

    ``distinct`` holds cluster centroids sorted lexicographically by
    (Re, Im); ``multiplicity[i]`` is the number of raw eigenvalues merged into
    ``distinct[i]``.  ``raw`` keeps the unclustered solver output.
    """

    distinct: np.ndarray
    multiplicity: np.ndarray
    raw: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.distinct, self.multiplicity)

    def __len__(self):
        return int(self.multiplicity.sum())


def _separated(raw, node, spread, limit, ratio: float = 8.0) -> bool:
    """Two sub-clusters of size >= 2 that are each tight and far apart from each other.

    The split of one defective eigenvalue is roughly isotropic, so its halves
    are about as far apart as they are wide; two genuinely different
    multiple eigenvalues are not.
    """
    a, b = node.get_left().pre_order(), node.get_right().pre_order()
    if len(a) < 2 or len(b) < 2:
        return False
    sa, sb = spread(a), spread(b)
    if sa > limit(len(a)) or sb > limit(len(b)):
        return False
    gap = abs(raw[a].mean() - raw[b].mean())
    return gap > ratio * max(sa, sb)


def _cluster_eigenvalues(raw: np.ndarray, tol: float, scale: float):
    n = len(raw)

    def limit(k):
        # round-off of size eps*s splits a defective eigenvalue of multiplicity
        # k by up to about s * eps**(1/k)
        return max(tol, _DEFECT_FACTOR * scale * EPS ** (1.0 / k))

    groups = []
    if n == 1:
        groups = [[0]]
    else:
        pts = np.column_stack([raw.real, raw.imag])
        tree = scipy.cluster.hierarchy.to_tree(
            scipy.cluster.hierarchy.linkage(scipy.spatial.distance.pdist(pts), method="single"))
        def spread(ids):
            members = raw[ids]
            return float(np.abs(members - members.mean()).max())

        stack = [tree]
        while stack:
            node = stack.pop()
            ids = node.pre_order()
            if node.is_leaf():
                groups.append(ids)
                continue
            if spread(ids) <= limit(len(ids)) and not _separated(raw, node, spread, limit):
                groups.append(ids)
            else:
                stack += [node.get_left(), node.get_right()]
    cents, mult = [], []
    for ids in groups:
        m = complex(raw[ids].mean())
        if abs(m.imag) <= limit(len(ids)):
            m = complex(m.real, 0.0)
        cents.append(m)
        mult.append(len(ids))
    cents = np.array(cents, dtype=complex)
    mult = np.array(mult, dtype=int)
    order = np.lexsort((cents.imag, cents.real))
    return cents[order], mult[order]


def spectrum(X, cluster_tol: float = 1e-8) -> Spectrum:
    """All eigenvalues of ``X`` with algebraic multiplicities.

    Eigenvalues closer than ``cluster_tol`` are merged.  Clusters whose spread
    is consistent with the O(||X|| * eps**(1/k)) splitting of a defective
    eigenvalue of multiplicity k are merged too; their centroid is accurate to
    working precision even when the individual values are not.
    """
    A = as_real_matrix(X)
    try:
        raw = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("eigenvalue iteration failed to converge",
                             {"shape": A.shape, "norm": float(np.abs(A).max())}) from exc
    if not np.all(np.isfinite(raw)):
        raise NumericFailure("eigenvalue solver returned non-finite values",
                             {"raw": raw.tolist()})
    scale = float(np.linalg.norm(A, np.inf))
    distinct, mult = _cluster_eigenvalues(raw, cluster_tol, scale)
    return Spectrum(distinct, mult, np.sort(raw))


def _pade_parts(A: np.ndarray, m: int):
    b = _PADE[m]
    n = A.shape[-1]
    ident = np.broadcast_to(np.eye(n), A.shape)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ A2)
    U = sum(b[2 * j + 1] * powers[j] for j in range(len(powers)))
    U = A @ U
    V = sum(b[2 * j] * powers[j] for j in range(len(powers)))
    return U, V


def mat_exp(X) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Padé approximants.

    Accepts a single ``(n, n)`` matrix or a stack ``(..., n, n)``.  The
    approximant degree (3, 5, 7, 9 or 13) and the number of squarings are
    chosen from the 1-norm so that the truncation error is at unit roundoff.
    """
    A = np.array(X, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InvalidArgument(f"expected square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidArgument("matrix has non-finite entries")
    batch_shape = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n))
    norms = np.abs(A).sum(axis=-2).max(axis=-1) if A.size else np.zeros(len(A))

    biggest = float(norms.max()) if len(norms) else 0.0
    m = next((k for k in (3, 5, 7, 9) if biggest <= _THETA[k]), 13)
    if m == 13:
        with np.errstate(divide="ignore"):
            s = np.maximum(0, np.ceil(np.log2(np.where(norms > 0, norms, 1.0) / _THETA[13])))
        s = s.astype(int)
    else:
        s = np.zeros(len(A), dtype=int)
    if s.size and s.max() > 1000:
        raise NumericFailure("matrix norm too large for the exponential",
                             {"norm": biggest})
    As = A / (2.0 ** s)[:, None, None]
    U, V = _pade_parts(As, m)
    try:
        E = np.linalg.solve(V - U, V + U)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("singular Padé denominator", {"norm": biggest}) from exc
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, int(s.max(initial=0)) + 1):
            sel = s >= k
            E[sel] = E[sel] @ E[sel]
    if not np.all(np.isfinite(E)):
        raise NumericFailure("matrix exponential overflowed", {"norm": biggest})
    return E.reshape(batch_shape + (n, n))


def _base_exp(B: np.ndarray, t: float) -> np.ndarray:
    """Closed form of e^{Bt} for 1x1 and rotation blocks, Padé otherwise."""
    if B.shape == (1, 1):
        return np.array([[math.exp(B[0, 0] * t)]])
    if B.shape == (2, 2) and B[0, 0] == B[1, 1] and B[0, 1] == -B[1, 0]:
        a, b = B[0, 0], B[1, 0]
        c, s = math.cos(b * t), math.sin(b * t)
        return math.exp(a * t) * np.array([[c, -s], [s, c]])
    return mat_exp(B * t)


def jordan_cell_exp(base, p: int, t: float) -> np.ndarray:
    """Closed-form exponential of ``jordan_cell(base, p) * t``.

    Block (i, j) with i >= j equals t**(i-j) / (i-j)! * e^{base*t}.
    """
    B = as_real_matrix(base)
    if int(p) != p or p < 1:
        raise InvalidArgument(f"cell size must be a positive integer, got {p!r}")
    p = int(p)
    k = B.shape[0]
    E = _base_exp(B, float(t))
    out = np.zeros((p * k, p * k))
    for d in range(p):
        coef = float(t) ** d / math.factorial(d)
        for j in range(p - d):
            i = j + d
            out[i * k:(i + 1) * k, j * k:(j + 1) * k] = coef * E
    return out


def blueprint_exp(bp: JordanBlueprint, t: float) -> np.ndarray:
    """Block-diagonal exponential of the assembled blueprint, cell by cell."""
    return scipy.linalg.block_diag(*[jordan_cell_exp(c.base(), c.size, t) for c in bp.cells])


def read_matrix(text: str) -> np.ndarray:
    """Parse the whitespace-separated matrix text format.

    Blank lines and lines starting with ``#`` are skipped.
    """
    rows = []
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in s.split()])
        except ValueError as exc:
            raise InvalidArgument(f"bad matrix row: {line!r}") from exc
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InvalidArgument("matrix text is not square")
    return as_real_matrix(rows)


def format_matrix(A: Sequence[Sequence[float]]) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in np.asarray(A)) + "\n"
