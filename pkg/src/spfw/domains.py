"""Constraint sets accessed through a linear minimization oracle (LMO).

Every domain answers ``linmin(r)``, i.e. returns a point ``s`` of the set that
minimizes ``<s, r>``.  Ties are resolved towards the lowest-index vertex (the
lexicographically smallest one on the cube), so results are deterministic.
"""
from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, InvalidArgumentError, UnsupportedError
from .rng import make_rng

DEFAULT_VERTEX_CAP = 1 << 16


class PointPair(NamedTuple):
    """Joint point ``z = (x, y)`` of a product domain."""

    x: np.ndarray
    y: np.ndarray

    def copy(self) -> "PointPair":
        return PointPair(self.x.copy(), self.y.copy())


def as_point(p, dim=None, name="point") -> np.ndarray:
    """Convert to a finite float vector, optionally checking its length."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidArgumentError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    # cheap test first; the sum of finite entries can still overflow
    if not np.isfinite(arr.sum()) and not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or infinite entries")
    return arr


def _unit(dim, index=0) -> np.ndarray:
    e = np.zeros(dim)
    e[index] = 1.0
    return e


class Domain:
    """Base class. Subclasses set ``kind``, ``dim`` and ``diameter``."""

    kind: str = "abstract"
    polytopal: bool = True
    beta: float | None = None
    pyramidal_width: float | None = None

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise InvalidArgumentError(f"dimension must be a positive integer, got {dim}")
        self.dim = int(dim)

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def _check_width(self):
        w = self.pyramidal_width
        if w is not None and not (0 < w <= self.diameter + 1e-15):
            raise InvalidArgumentError(
                f"pyramidal width must lie in (0, diameter={self.diameter}], got {w}")

    def linmin(self, direction) -> np.ndarray:
        return self._linmin(as_point(direction, self.dim, "direction"))

    def _linmin(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, p, tol: float = 1e-10) -> bool:
        raise NotImplementedError

    def vertices(self, cap: int = DEFAULT_VERTEX_CAP) -> list[np.ndarray]:
        raise UnsupportedError(f"{self.kind} has no finite vertex set")

    def border_distance(self, p) -> float:
        """Euclidean distance from ``p`` to the boundary of the set."""
        raise UnsupportedError(f"border distance is not implemented for {self.kind}")

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class UnitCube(Domain):
    """The cube ``[0, 1]^d``; pyramidal width ``1/sqrt(d)``."""

    kind = "unit-cube"

    def __init__(self, dim: int):
        super().__init__(dim)
        self.pyramidal_width = 1.0 / np.sqrt(self.dim)

    @property
    def diameter(self):
        return float(np.sqrt(self.dim))

    def _linmin(self, r):
        # zero components go to 0, the lexicographically smallest choice
        return (r < 0).astype(float)

    def contains(self, p, tol=1e-10):
        p = np.asarray(p, dtype=float)
        return bool(p.min() >= -tol and p.max() <= 1 + tol)

    def vertices(self, cap=DEFAULT_VERTEX_CAP):
        if self.dim >= 63 or 2 ** self.dim > cap:
            raise CapacityError(f"cube of dimension {self.dim} has more than {cap} vertices")
        return [np.array(v, dtype=float) for v in itertools.product((0, 1), repeat=self.dim)]

    def border_distance(self, p):
        p = np.asarray(p, dtype=float)
        return float(max(0.0, np.min(np.minimum(p, 1.0 - p))))


class Simplex(Domain):
    """Probability simplex in ``R^d``."""

    kind = "simplex"

    def __init__(self, dim: int, pyramidal_width: float | None = None):
        super().__init__(dim)
        self.pyramidal_width = pyramidal_width
        self._check_width()

    @property
    def diameter(self):
        return float(np.sqrt(2.0)) if self.dim > 1 else 0.0

    def _linmin(self, r):
        return _unit(self.dim, int(np.argmin(r)))

    def contains(self, p, tol=1e-10):
        p = np.asarray(p, dtype=float)
        return bool(p.min() >= -tol and abs(p.sum() - 1.0) <= tol)

    def vertices(self, cap=DEFAULT_VERTEX_CAP):
        if self.dim > cap:
            raise CapacityError(f"simplex of dimension {self.dim} exceeds cap {cap}")
        return [_unit(self.dim, i) for i in range(self.dim)]


class L1Ball(Domain):
    """``{x : ||x - c||_1 <= R}``."""

    kind = "l1-ball"

    def __init__(self, dim: int, radius: float = 1.0, center=None,
                 pyramidal_width: float | None = None):
        super().__init__(dim)
        if not radius > 0:
            raise InvalidArgumentError(f"radius must be positive, got {radius}")
        self.radius = float(radius)
        self.center = np.zeros(self.dim) if center is None else as_point(center, self.dim, "center")
        self.pyramidal_width = pyramidal_width
        self._check_width()

    @property
    def diameter(self):
        return 2.0 * self.radius

    def _linmin(self, r):
        i = int(np.argmax(np.abs(r)))
        s = self.center.copy()
        # r_i == 0 only when r == 0: take +R e_1, the first listed vertex
        s[i] += -self.radius if r[i] > 0 else self.radius
        return s

    def contains(self, p, tol=1e-10):
        return bool(np.abs(np.asarray(p, dtype=float) - self.center).sum() <= self.radius + tol)

    def vertices(self, cap=DEFAULT_VERTEX_CAP):
        if 2 * self.dim > cap:
            raise CapacityError(f"l1-ball of dimension {self.dim} exceeds cap {cap}")
        out = []
        for i in range(self.dim):
            for sign in (1.0, -1.0):
                v = self.center.copy()
                v[i] += sign * self.radius
                out.append(v)
        return out


class L2Ball(Domain):
    """Euclidean ball; strongly convex with ``beta = 1/R``."""

    kind = "l2-ball"
    polytopal = False

    def __init__(self, dim: int, radius: float = 1.0, center=None, beta: float | None = None):
        super().__init__(dim)
        if not radius > 0:
            raise InvalidArgumentError(f"radius must be positive, got {radius}")
        self.radius = float(radius)
        self.center = np.zeros(self.dim) if center is None else as_point(center, self.dim, "center")
        self.beta = 1.0 / self.radius if beta is None else float(beta)

    @property
    def diameter(self):
        return 2.0 * self.radius

    def _linmin(self, r):
        nrm = np.linalg.norm(r)
        if nrm == 0.0:
            return self.center + self.radius * _unit(self.dim)
        return self.center - self.radius * (r / nrm)

    def contains(self, p, tol=1e-10):
        return bool(np.linalg.norm(np.asarray(p, dtype=float) - self.center) <= self.radius + tol)

    def border_distance(self, p):
        return float(max(0.0, self.radius - np.linalg.norm(np.asarray(p, dtype=float) - self.center)))

    def max_norm(self) -> float:
        """Largest Euclidean norm of a point in the ball."""
        return float(np.linalg.norm(self.center) + self.radius)


class VertexPolytope(Domain):
    """Convex hull of an explicit vertex list (deduplicated, order kept)."""

    kind = "vertex-polytope"

    def __init__(self, vertices, pyramidal_width: float | None = None):
        arr = np.asarray(vertices, dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise InvalidArgumentError("vertex list must be a nonempty 2-d array")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("vertex list contains NaN or infinite entries")
        super().__init__(arr.shape[1])
        seen, keep = set(), []
        for v in arr:
            key = v.tobytes()
            if key not in seen:
                seen.add(key)
                keep.append(v)
        self._vertices = np.array(keep)
        diffs = self._vertices[:, None, :] - self._vertices[None, :, :]
        self._diameter = float(np.sqrt((diffs ** 2).sum(-1).max()))
        self.pyramidal_width = pyramidal_width
        self._check_width()

    @property
    def diameter(self):
        return self._diameter

    def _linmin(self, r):
        return self._vertices[int(np.argmin(self._vertices @ r))].copy()

    def contains(self, p, tol=1e-10):
        # only used for iterates built as convex combinations; a full hull
        # membership test would need an LP, so check the bounding box
        p = np.asarray(p, dtype=float)
        lo, hi = self._vertices.min(0), self._vertices.max(0)
        return bool(np.all(p >= lo - tol) and np.all(p <= hi + tol))

    def vertices(self, cap=DEFAULT_VERTEX_CAP):
        if len(self._vertices) > cap:
            raise CapacityError(f"{len(self._vertices)} vertices exceed cap {cap}")
        return [v.copy() for v in self._vertices]


class ProductDomain(NamedTuple):
    x_domain: Domain
    y_domain: Domain

    @property
    def polytopal(self) -> bool:
        return self.x_domain.polytopal and self.y_domain.polytopal

    def contains(self, z: PointPair, tol: float = 1e-10) -> bool:
        return self.x_domain.contains(z.x, tol) and self.y_domain.contains(z.y, tol)


def linmin(domain: Domain, direction) -> np.ndarray:
    """Point of ``domain`` minimizing ``<s, direction>``."""
    return domain.linmin(direction)


def linmin_product(pd: ProductDomain, r: PointPair) -> PointPair:
    """Blockwise LMO over ``X x Y``."""
    return PointPair(pd.x_domain.linmin(r[0]), pd.y_domain.linmin(r[1]))


def enumerate_vertices(domain: Domain, cap: int = DEFAULT_VERTEX_CAP) -> list[np.ndarray]:
    """Exact vertex list of a polytopal domain, in a stable order."""
    return domain.vertices(cap)


def ball_inclusion_check(domain: Domain, x, y, gamma: float, samples: int = 100,
                         rng: np.random.Generator | None = None, tol: float = 1e-12) -> bool:
    """Sampled test that the strong-convexity ball around ``gamma*x + (1-gamma)*y`` fits.

    The ball has radius ``gamma*(1-gamma)*(beta/2)*||x-y||^2``.  Its surface is
    probed along the coordinate axes and along ``samples`` random directions.
    """
    if domain.beta is None:
        raise UnsupportedError(f"{domain.kind} has no strong-convexity constant")
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError(f"gamma must lie in [0, 1], got {gamma}")
    x = as_point(x, domain.dim, "x")
    y = as_point(y, domain.dim, "y")
    rng = make_rng(0) if rng is None else rng
    mid = gamma * x + (1.0 - gamma) * y
    radius = gamma * (1.0 - gamma) * 0.5 * domain.beta * float(np.sum((x - y) ** 2))
    eye = np.eye(domain.dim)
    dirs = rng.standard_normal((samples, domain.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([eye, -eye, dirs])
    center = getattr(domain, "center", None)
    if center is not None and np.linalg.norm(mid - center) > 0:
        # for a ball the outward radial direction is the worst case
        out = (mid - center) / np.linalg.norm(mid - center)
        dirs = np.vstack([out[None, :], dirs])
    pts = np.vstack([mid[None, :], mid + radius * dirs])
    return all(domain.contains(p, tol) for p in pts)
