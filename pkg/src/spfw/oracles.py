"""Reference computations used to check the solver.

Nothing in the solver imports this module.  The routines here are slow and
simple on purpose: fictitious play with explicit counts, exhaustive grid
search, central finite differences, vertex enumeration, and random sampling.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .domains import (Domain, L1Ball, L2Ball, PointPair, ProductDomain, Simplex, UnitCube,
                      VertexPolytope, enumerate_vertices, linmin_product)
from .errors import CapacityError, InvalidArgumentError, UnsupportedError
from .rng import make_rng
from .objectives import vip_field

MAX_GRID_POINTS = 10 ** 7


# --------------------------------------------------------------------------
# fictitious play

@dataclass
class FictitiousPlayState:
    """Counts of the pure actions played so far and the round counter."""

    counts_x: np.ndarray
    counts_y: np.ndarray
    t: int = 0

    def averages(self) -> tuple[np.ndarray, np.ndarray]:
        return self.counts_x / self.t, self.counts_y / self.t


def fictitious_play(M, T: int, x0=None, y0=None, tie_break: str = "lowest-index",
                    state: FictitiousPlayState | None = None):
    """Average strategies of ``T`` rounds of fictitious play on ``min_x max_y x^T M y``.

    Round 0 responds to the starting mixed strategies ``x0``, ``y0`` (default
    ``e_1``); later rounds respond to the empirical averages.  Returns a list
    of ``T + 1`` pairs, the starting pair first.  Pass ``state`` to collect
    the action counts.
    """
    if tie_break != "lowest-index":
        raise InvalidArgumentError("only the lowest-index tie break is implemented")
    if T < 1:
        raise InvalidArgumentError(f"T must be at least 1, got {T}")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    p, q = M.shape
    sx, sy = Simplex(p), Simplex(q)
    x_bar = np.eye(p)[0] if x0 is None else np.asarray(x0, dtype=float)
    y_bar = np.eye(q)[0] if y0 is None else np.asarray(y0, dtype=float)
    if state is None:
        state = FictitiousPlayState(np.zeros(p), np.zeros(q))
    history = [(x_bar.copy(), y_bar.copy())]
    for t in range(T):
        br_x = sx.linmin(M @ y_bar)           # row player minimizes
        br_y = sy.linmin(-(M.T @ x_bar))      # column player maximizes
        # running mean of the responses, updated incrementally; exact ties in
        # degenerate games then resolve the same way as in a harmonic-step run
        w = 1.0 / (1.0 + t)
        x_bar = (1.0 - w) * x_bar + w * br_x
        y_bar = (1.0 - w) * y_bar + w * br_y
        state.counts_x += br_x
        state.counts_y += br_y
        state.t += 1
        history.append((x_bar.copy(), y_bar.copy()))
    return history


# --------------------------------------------------------------------------
# grids and sampling

def _compositions(n: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``n``."""
    for cuts in itertools.combinations(range(n + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(n + parts - 2 - prev)
        yield out


def domain_grid(domain: Domain, resolution: float, max_points: int = MAX_GRID_POINTS) -> np.ndarray:
    """Points of ``domain`` on a regular grid with the given spacing."""
    if not resolution > 0:
        raise InvalidArgumentError(f"resolution must be positive, got {resolution}")
    n = int(round(1.0 / resolution)) if isinstance(domain, (UnitCube, Simplex)) else None
    if isinstance(domain, UnitCube):
        if (n + 1) ** domain.dim > max_points:
            raise CapacityError(f"cube grid has {(n + 1) ** domain.dim} points")
        axis = np.linspace(0.0, 1.0, n + 1)
        mesh = np.meshgrid(*([axis] * domain.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if isinstance(domain, Simplex):
        from math import comb
        size = comb(n + domain.dim - 1, domain.dim - 1)
        if size > max_points:
            raise CapacityError(f"simplex grid has {size} points")
        return np.array(list(_compositions(n, domain.dim)), dtype=float) / n
    if isinstance(domain, (L2Ball, L1Ball)):
        m = int(np.floor(domain.radius / resolution))
        if (2 * m + 1) ** domain.dim > max_points:
            raise CapacityError(f"ball grid has about {(2 * m + 1) ** domain.dim} points")
        axis = np.arange(-m, m + 1) * resolution
        mesh = np.meshgrid(*([axis] * domain.dim), indexing="ij")
        pts = domain.center + np.stack([m_.ravel() for m_ in mesh], axis=1)
        return pts[[domain.contains(p, 0.0) for p in pts]]
    raise UnsupportedError(f"no grid for {domain.kind}")


def sample_point(domain: Domain, rng: np.random.Generator) -> np.ndarray:
    """Random point of the domain (uniform for cubes, simplices and balls)."""
    d = domain.dim
    if isinstance(domain, UnitCube):
        return rng.uniform(0.0, 1.0, d)
    if isinstance(domain, Simplex):
        return rng.dirichlet(np.ones(d))
    if isinstance(domain, L2Ball):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        return domain.center + domain.radius * rng.uniform() ** (1.0 / d) * u
    if isinstance(domain, L1Ball):
        weights = rng.dirichlet(np.ones(d + 1))[:d]
        return domain.center + domain.radius * weights * rng.choice([-1.0, 1.0], d)
    if isinstance(domain, VertexPolytope):
        verts = np.array(enumerate_vertices(domain))
        return rng.dirichlet(np.ones(len(verts))) @ verts
    raise UnsupportedError(f"no sampler for {domain.kind}")


def sample_pair(pd: ProductDomain, rng: np.random.Generator) -> PointPair:
    return PointPair(sample_point(pd.x_domain, rng), sample_point(pd.y_domain, rng))


@dataclass
class GridSaddle:
    x: np.ndarray
    y: np.ndarray
    value: float        # min over grid x of max over grid y
    gap: float          # minimax - maximin, nonnegative


def grid_saddle_search(obj, pd: ProductDomain, resolution: float,
                       max_points: int = MAX_GRID_POINTS) -> GridSaddle:
    """Minimax over a tensor grid of ``X x Y``.

    ``max_points`` caps the total number of grid points over both blocks;
    all pairs are evaluated, in chunks, through ``obj.value_grid``.
    """
    gx = domain_grid(pd.x_domain, resolution, max_points)
    gy = domain_grid(pd.y_domain, resolution, max_points)
    if len(gx) + len(gy) > max_points:
        raise CapacityError(f"grid has {len(gx) + len(gy)} points, cap is {max_points}")
    chunk = max(1, 4_000_000 // len(gy))
    row_max = np.empty(len(gx))
    row_arg = np.empty(len(gx), dtype=int)
    col_min = np.full(len(gy), np.inf)
    for start in range(0, len(gx), chunk):
        vals = obj.value_grid(gx[start:start + chunk], gy)
        row_arg[start:start + chunk] = np.argmax(vals, axis=1)
        row_max[start:start + chunk] = vals.max(axis=1)
        np.minimum(col_min, vals.min(axis=0), out=col_min)
    i = int(np.argmin(row_max))
    j = int(np.argmax(col_min))
    return GridSaddle(gx[i], gy[j], float(row_max[i]), float(row_max[i] - col_min[j]))


# --------------------------------------------------------------------------
# derivatives and Lipschitz sampling

def _margin(domain: Domain, p: np.ndarray) -> float:
    if isinstance(domain, Simplex):
        return float(p.min())
    if isinstance(domain, L1Ball):
        return domain.radius - float(np.abs(p - domain.center).sum())
    return domain.border_distance(p)


def finite_diff_gradient(obj, z: PointPair, h: float = 1e-5) -> PointPair:
    """Central differences of ``obj.value`` in every coordinate of both blocks."""
    if not h > 0:
        raise InvalidArgumentError(f"step h must be positive, got {h}")
    pd = obj.domain
    if _margin(pd.x_domain, z.x) <= h or _margin(pd.y_domain, z.y) <= h:
        raise InvalidArgumentError("point is within h of the boundary")

    def partial(block):
        base = np.array(z[block], dtype=float)
        out = np.empty_like(base)
        for i in range(base.size):
            up, down = base.copy(), base.copy()
            up[i] += h
            down[i] -= h
            zu = PointPair(up, z.y) if block == 0 else PointPair(z.x, up)
            zd = PointPair(down, z.y) if block == 0 else PointPair(z.x, down)
            out[i] = (obj.value(zu) - obj.value(zd)) / (2.0 * h)
        return out

    return PointPair(partial(0), partial(1))


def blockwise_norm(z: PointPair) -> float:
    """``|x| + |y|`` with Euclidean block norms."""
    return float(np.linalg.norm(z[0]) + np.linalg.norm(z[1]))


def sampled_lipschitz_ratio(fn, pd: ProductDomain, n_pairs: int,
                            rng: np.random.Generator | None = None) -> float:
    """Largest ``|fn(z) - fn(z')| / |z - z'|`` over random pairs (blockwise norms)."""
    if n_pairs < 1:
        raise InvalidArgumentError("n_pairs must be at least 1")
    rng = make_rng(0) if rng is None else rng
    best = 0.0
    for _ in range(n_pairs):
        a, b = sample_pair(pd, rng), sample_pair(pd, rng)
        den = blockwise_norm(PointPair(a.x - b.x, a.y - b.y))
        if den == 0.0:
            continue
        fa, fb = fn(a), fn(b)
        best = max(best, blockwise_norm(PointPair(fa[0] - fb[0], fa[1] - fb[1])) / den)
    return best


def fw_corner_map(obj):
    """``z -> LMO(F(z))``, the Frank-Wolfe corner as a function of the iterate."""
    return lambda z: linmin_product(obj.domain, vip_field(obj, z))


def brute_force_fw_gap(obj, z: PointPair) -> float:
    """FW gap by enumerating every vertex pair of a polytopal product domain."""
    r = vip_field(obj, z)
    vx = np.array(enumerate_vertices(obj.domain.x_domain))
    vy = np.array(enumerate_vertices(obj.domain.y_domain))
    return float(np.max((z.x - vx) @ r.x) + np.max((z.y - vy) @ r.y))
