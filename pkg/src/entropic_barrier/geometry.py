"""Bounded convex polytopes.

Five representations share one interface: half-space (``HPolytope``), vertex
(``VPolytope``), axis-aligned ``Box``, ``Simplex`` and Cartesian ``Product``.
Every body can report a normalized half-space description, its vertices and a
simplicial decomposition into ``SimplexCell`` objects; the latter feeds the
exact log-Laplace evaluator.

Bodies are immutable after construction. Derived data (vertices, cells) is
computed lazily and cached on the instance; recomputation is idempotent, so a
race between threads costs time but never changes a result.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

# desk-scale guards for the exact (enumeration/triangulation) paths
MAX_EXACT_DIM = 6
MAX_EXACT_ROWS = 32
VERTEX_DEDUP_TOL = 1e-9


class BodyError(ValueError):
    """Invalid body: unbounded, empty interior, degenerate or malformed."""


class GuardError(BodyError):
    """Instance exceeds the desk-scale limits of the exact code paths."""


def _frozen_array(a, ndim: int, name: str) -> np.ndarray:
    try:
        arr = np.array(a, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BodyError(f"{name}: expected numeric array ({exc})") from None
    if arr.ndim != ndim:
        raise BodyError(f"{name}: expected {ndim}-D array, got shape {arr.shape}")
    if arr.size == 0:
        raise BodyError(f"{name}: empty")
    if not np.all(np.isfinite(arr)):
        raise BodyError(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SimplexCell:
    """An n-simplex given by n+1 vertices (rows)."""

    vertices: np.ndarray
    volume: float

    @classmethod
    def from_vertices(cls, vertices) -> "SimplexCell":
        v = np.asarray(vertices, dtype=float)
        n = v.shape[1]
        if v.shape[0] != n + 1:
            raise BodyError(f"cell needs {n + 1} vertices, got {v.shape[0]}")
        vol = _simplex_volume(v)
        if not vol > 0:
            raise BodyError("degenerate (zero-volume) cell")
        v = v.copy()
        v.setflags(write=False)
        return cls(v, vol)


def _simplex_volume(v: np.ndarray) -> float:
    n = v.shape[1]
    return abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(n)


def chebyshev_center_lp(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Largest inscribed ball of {A x <= b}; rows of A must have unit norm."""
    m, n = A.shape
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([A, np.ones((m, 1))])
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise BodyError(f"Chebyshev LP failed: {res.message}")
    center = res.x[:n]
    radius = float(res.x[-1])
    if radius <= 1e-12:
        raise BodyError("body has empty interior")
    return center, radius


class ConvexBody:
    """Common interface of all polytope representations."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (A, b) with unit-norm rows such that the body is {A x <= b}."""
        return self._hrep

    @cached_property
    def _hrep(self):
        A, b = self._compute_hrep()
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        A.setflags(write=False)
        b.setflags(write=False)
        return A, b

    def _compute_hrep(self):
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        x = self._check_point(x)
        A, b = self.halfspaces()
        return bool(np.all(A @ x <= b + tol))

    def interior_margin(self, x) -> float:
        """Smallest slack b_i - <a_i, x> over the normalized facets."""
        x = self._check_point(x)
        A, b = self.halfspaces()
        return float(np.min(b - A @ x))

    def _check_point(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, body dimension is {self.dim}")
        return x

    @cached_property
    def _chebyshev(self):
        return chebyshev_center_lp(*self.halfspaces())

    def chebyshev_center(self) -> tuple[np.ndarray, float]:
        c, r = self._chebyshev
        return c.copy(), r

    def vertices(self) -> np.ndarray:
        return self._vertices

    @cached_property
    def _vertices(self) -> np.ndarray:
        v = np.array(self._compute_vertices(), dtype=float)
        v.setflags(write=False)
        return v

    def _compute_vertices(self):
        raise NotImplementedError

    @cached_property
    def cell_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked triangulation: (vertices of shape (C, n+1, n), volumes (C,))."""
        if self.dim > MAX_EXACT_DIM:
            raise GuardError(f"triangulation limited to n <= {MAX_EXACT_DIM}")
        verts = np.asarray(self._compute_cells(), dtype=float)
        vols = np.abs(np.linalg.det(verts[:, 1:] - verts[:, :1])) / math.factorial(self.dim)
        keep = vols > 1e-14 * vols.sum()
        verts, vols = verts[keep], vols[keep]
        if verts.shape[0] == 0:
            raise BodyError("degenerate (zero-volume) body")
        verts.setflags(write=False)
        vols.setflags(write=False)
        return verts, vols

    def _compute_cells(self):
        return fan_triangulation(self.vertices())

    def triangulate(self) -> list[SimplexCell]:
        verts, vols = self.cell_arrays
        return [SimplexCell(v, float(w)) for v, w in zip(verts, vols)]

    @property
    def volume(self) -> float:
        return float(self.cell_arrays[1].sum())

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HPolytope(ConvexBody):
    """{x : A x <= b}; rows are rescaled to unit norm on construction."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = _frozen_array(self.A, 2, "A")
        b = _frozen_array(self.b, 1, "b")
        if A.shape[0] != b.shape[0]:
            raise BodyError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms <= 1e-14):
            raise BodyError("A: zero row")
        A = A / norms[:, None]
        b = b / norms
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        _check_bounded(A)
        self._chebyshev  # raises on empty interior

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def _compute_hrep(self):
        return self.A, self.b

    def _compute_vertices(self):
        return enumerate_hvertices(self.A, self.b)

    def to_dict(self):
        return {"type": "hpolytope", "A": self.A.tolist(), "b": self.b.tolist()}


def _check_bounded(A: np.ndarray) -> None:
    m, n = A.shape
    if np.linalg.matrix_rank(A) < n:
        raise BodyError("unbounded: constraint normals do not span the space")
    # {Ad <= 0} = {0} iff 0 is a strictly positive combination of the rows
    res = linprog(np.zeros(m), A_eq=A.T, b_eq=np.zeros(n), bounds=[(1, None)] * m, method="highs")
    if res.status != 0:
        raise BodyError("unbounded: recession cone {A d <= 0} is nontrivial")


@dataclass(frozen=True, eq=False)
class VPolytope(ConvexBody):
    """Convex hull of a finite point set."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points, 2, "vertices")
        object.__setattr__(self, "points", pts)
        if pts.shape[0] < pts.shape[1] + 1:
            raise BodyError("vertices: need at least n+1 points for a full-dimensional body")
        self._hull_data  # validates full dimensionality

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def _hull_data(self):
        pts = self.points
        if self.dim == 1:
            lo, hi = pts.min(), pts.max()
            if not hi > lo:
                raise BodyError("degenerate (zero-length) interval")
            return np.array([[lo], [hi]]), np.array([[1.0], [-1.0]]), np.array([hi, -lo])
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise BodyError(f"degenerate vertex set: {str(exc).splitlines()[0]}") from None
        eq = hull.equations
        A, b = _dedup_rows(eq[:, :-1], -eq[:, -1])
        return pts[np.sort(hull.vertices)], A, b

    def _compute_hrep(self):
        return self._hull_data[1], self._hull_data[2]

    def _compute_vertices(self):
        return self._hull_data[0]

    def contains(self, x, tol: float = 0.0) -> bool:
        """Membership LP: x = V^T lam, lam in the probability simplex (within tol)."""
        x = self._check_point(x)
        V = self._hull_data[0]
        k, n = V.shape
        # variables lam (k), slack s >= |V^T lam - x|_inf
        cost = np.zeros(k + 1)
        cost[-1] = 1.0
        ones = np.ones((n, 1))
        A_ub = np.vstack([np.hstack([V.T, -ones]), np.hstack([-V.T, -ones])])
        b_ub = np.concatenate([x, -x])
        A_eq = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * (k + 1), method="highs")
        if res.status != 0:
            raise BodyError(f"membership LP failed: {res.message}")
        return bool(res.fun <= tol + 1e-12)

    def to_dict(self):
        return {"type": "vpolytope", "vertices": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class Box(ConvexBody):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen_array(np.atleast_1d(self.lo), 1, "lo")
        hi = _frozen_array(np.atleast_1d(self.hi), 1, "hi")
        if lo.shape != hi.shape:
            raise BodyError(f"lo and hi have different lengths {lo.size} and {hi.size}")
        if not np.all(lo < hi):
            raise BodyError("box requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, n: int) -> "Box":
        return cls(np.zeros(n), np.ones(n))

    @property
    def dim(self) -> int:
        return self.lo.size

    def _compute_hrep(self):
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye]), np.concatenate([self.hi, -self.lo])

    def contains(self, x, tol: float = 0.0) -> bool:
        x = self._check_point(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def _compute_vertices(self):
        return [np.where(bits, self.hi, self.lo)
                for bits in itertools.product([False, True], repeat=self.dim)]

    def _compute_cells(self):
        # Kuhn subdivision: one simplex per coordinate ordering
        n = self.dim
        width = self.hi - self.lo
        cells = []
        for perm in itertools.permutations(range(n)):
            v = [self.lo.copy()]
            for axis in perm:
                nxt = v[-1].copy()
                nxt[axis] += width[axis]
                v.append(nxt)
            cells.append(v)
        return cells

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def to_dict(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Simplex(ConvexBody):
    points: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points, 2, "vertices")
        n = pts.shape[1]
        if pts.shape[0] != n + 1:
            raise BodyError(f"vertices: simplex in R^{n} needs {n + 1} vertices, got {pts.shape[0]}")
        edges = pts[1:] - pts[0]
        scale = max(float(np.max(np.abs(edges))), 1e-300)
        if abs(np.linalg.det(edges / scale)) < 1e-12:
            raise BodyError("vertices: simplex is degenerate (singular edge matrix)")
        object.__setattr__(self, "points", pts)

    @classmethod
    def standard(cls, n: int) -> "Simplex":
        return cls(np.vstack([np.zeros(n), np.eye(n)]))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _compute_hrep(self):
        v0 = self.points[0]
        Minv = np.linalg.inv((self.points[1:] - v0).T)
        # lambda_i = Minv_i (x - v0) >= 0 and sum_i lambda_i <= 1
        A = np.vstack([-Minv, Minv.sum(axis=0)])
        b = np.concatenate([-Minv @ v0, [1.0 + Minv.sum(axis=0) @ v0]])
        norms = np.linalg.norm(A, axis=1)
        return A / norms[:, None], b / norms

    def _compute_vertices(self):
        return self.points

    def _compute_cells(self):
        return [self.points]

    @property
    def volume(self) -> float:
        return _simplex_volume(self.points)

    def to_dict(self):
        return {"type": "simplex", "vertices": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class Product(ConvexBody):
    left: ConvexBody
    right: ConvexBody

    def __post_init__(self):
        for name in ("left", "right"):
            if not isinstance(getattr(self, name), ConvexBody):
                raise BodyError(f"{name}: expected a ConvexBody")

    @property
    def dim(self) -> int:
        return self.left.dim + self.right.dim

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = self._check_point(x)
        return x[: self.left.dim], x[self.left.dim:]

    def _compute_hrep(self):
        A1, b1 = self.left.halfspaces()
        A2, b2 = self.right.halfspaces()
        A = np.block([[A1, np.zeros((A1.shape[0], A2.shape[1]))],
                      [np.zeros((A2.shape[0], A1.shape[1])), A2]])
        return A, np.concatenate([b1, b2])

    def contains(self, x, tol: float = 0.0) -> bool:
        x1, x2 = self.split(x)
        return self.left.contains(x1, tol) and self.right.contains(x2, tol)

    def _compute_vertices(self):
        V1, V2 = self.left.vertices(), self.right.vertices()
        return [np.concatenate([a, c]) for a in V1 for c in V2]

    @property
    def volume(self) -> float:
        return self.left.volume * self.right.volume

    def to_dict(self):
        return {"type": "product", "left": self.left.to_dict(), "right": self.right.to_dict()}


# ---------------------------------------------------------------------------
# module-level operations

def dimension(body: ConvexBody) -> int:
    return body.dim


def contains(body: ConvexBody, x, tol: float = 0.0) -> bool:
    return body.contains(x, tol)


def chebyshev_center(body: ConvexBody) -> tuple[np.ndarray, float]:
    return body.chebyshev_center()


def enumerate_vertices(body: ConvexBody) -> np.ndarray:
    return body.vertices().copy()


def triangulate(body: ConvexBody) -> list[SimplexCell]:
    return body.triangulate()


def product(K: ConvexBody, K2: ConvexBody) -> Product:
    return Product(K, K2)


def as_hpolytope(body: ConvexBody) -> HPolytope:
    return HPolytope(*body.halfspaces())


def enumerate_hvertices(A: np.ndarray, b: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """All vertices of {A x <= b} by brute force over n-subsets of rows."""
    m, n = A.shape
    if n > MAX_EXACT_DIM or m > MAX_EXACT_ROWS:
        raise GuardError(f"vertex enumeration limited to n <= {MAX_EXACT_DIM}, m <= {MAX_EXACT_ROWS}")
    found = []
    combos = itertools.combinations(range(m), n)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        block = block.reshape(-1, n)
        M = A[block]
        rhs = b[block]
        dets = np.linalg.det(M)
        ok = np.abs(dets) > 1e-10
        if not np.any(ok):
            continue
        x = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feasible = np.all(x @ A.T <= b + VERTEX_DEDUP_TOL, axis=1)
        found.append(x[feasible])
    if not found:
        raise BodyError("no vertices found (degenerate body)")
    return dedup_points(np.vstack(found))


def dedup_points(pts: np.ndarray, tol: float = VERTEX_DEDUP_TOL) -> np.ndarray:
    order = np.lexsort(pts.T[::-1])
    out: list[np.ndarray] = []
    for p in pts[order]:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return np.array(out)


def _dedup_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    rows = np.hstack([A, b[:, None]])
    keep = dedup_points(rows, tol)
    return keep[:, :-1], keep[:, -1]


def fan_triangulation(vertices: np.ndarray) -> np.ndarray:
    """Cone over the triangulated boundary from the vertex centroid."""
    V = np.asarray(vertices, dtype=float)
    n = V.shape[1]
    c = V.mean(axis=0)
    if n == 1:
        lo, hi = V.min(axis=0), V.max(axis=0)
        return np.array([[lo, c], [c, hi]])
    try:
        hull = ConvexHull(V)
    except QhullError as exc:
        raise BodyError(f"degenerate body: {str(exc).splitlines()[0]}") from None
    facets = V[hull.simplices]  # (F, n, n)
    apex = np.broadcast_to(c, (facets.shape[0], 1, n))
    return np.concatenate([apex, facets], axis=1)


# ---------------------------------------------------------------------------
# JSON body format

def body_from_dict(d: Any, path: str = "body") -> ConvexBody:
    if not isinstance(d, dict):
        raise BodyError(f"{path}: expected an object")
    kind = d.get("type")

    def need(key):
        if key not in d:
            raise BodyError(f"{path}.{key}: missing field")
        return d[key]

    def arr(key, ndim):
        val = need(key)
        try:
            a = np.array(val, dtype=float)
        except (TypeError, ValueError):
            raise BodyError(f"{path}.{key}: expected numbers") from None
        if a.ndim != ndim:
            raise BodyError(f"{path}.{key}: expected a {ndim}-D list, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise BodyError(f"{path}.{key}: entries must be finite")
        return a

    try:
        if kind == "hpolytope":
            return HPolytope(arr("A", 2), arr("b", 1))
        if kind == "vpolytope":
            return VPolytope(arr("vertices", 2))
        if kind == "box":
            return Box(arr("lo", 1), arr("hi", 1))
        if kind == "simplex":
            return Simplex(arr("vertices", 2))
        if kind == "product":
            return Product(body_from_dict(need("left"), f"{path}.left"),
                           body_from_dict(need("right"), f"{path}.right"))
    except BodyError as exc:
        msg = str(exc)
        if msg.startswith(path):
            raise
        raise BodyError(f"{path}: {msg}") from None
    raise BodyError(f"{path}.type: unknown body type {kind!r}")


def body_to_dict(body: ConvexBody) -> dict:
    return body.to_dict()


def load_body(path) -> ConvexBody:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BodyError(f"body file is not valid JSON: {exc}") from None
    return body_from_dict(data)


def random_hpolytope(n: int, m: int, rng: np.random.Generator) -> HPolytope:
    """Random bounded polytope {a_i . x <= b_i} with b_i in [0.5, 1.5], containing the origin."""
    while True:
        A = rng.standard_normal((m, n))
        b = rng.uniform(0.5, 1.5, size=m)
        try:
            return HPolytope(A, b)
        except BodyError:
            continue


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def translate(body: ConvexBody, v) -> ConvexBody:
    """Translate a body by v, keeping its representation."""
    v = np.asarray(v, dtype=float)
    if isinstance(body, Box):
        return Box(body.lo + v, body.hi + v)
    if isinstance(body, Simplex):
        return Simplex(body.points + v)
    if isinstance(body, VPolytope):
        return VPolytope(body.points + v)
    if isinstance(body, Product):
        return Product(translate(body.left, v[: body.left.dim]), translate(body.right, v[body.left.dim:]))
    A, b = body.halfspaces()
    return HPolytope(A, b + A @ v)
