"""Convex-concave objectives ``L(x, y)`` and the test problems built on them.

The solver only needs values and partial gradients.  Best responses and a
known saddle are optional; without them the suboptimality ``h`` or the merit
``w`` are simply not reported.
"""
from __future__ import annotations

import numpy as np

from .constants import spectral_norm
from .domains import (L2Ball, PointPair, ProductDomain, Simplex, UnitCube, as_point,
                      linmin_product)
from .errors import InvalidArgumentError, UnsupportedError


class SaddleObjective:
    """Interface for ``min_x max_y L(x, y)`` over ``self.domain``."""

    domain: ProductDomain
    known_saddle: PointPair | None = None
    known_L_star: float | None = None

    def value(self, z: PointPair) -> float:
        raise NotImplementedError

    def grad_x(self, z: PointPair) -> np.ndarray:
        raise NotImplementedError

    def grad_y(self, z: PointPair) -> np.ndarray:
        raise NotImplementedError

    def value_grid(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Matrix of ``L(X[i], Y[j])``; subclasses vectorize this."""
        return np.array([[self.value(PointPair(x, y)) for y in Y] for x in X])

    def best_response_x(self, y) -> np.ndarray:
        raise UnsupportedError(f"{type(self).__name__} has no best response for x")

    def best_response_y(self, x) -> np.ndarray:
        raise UnsupportedError(f"{type(self).__name__} has no best response for y")

    def lipschitz(self) -> dict:
        """Gradient Lipschitz constants ``L, L_XX, L_XY, L_YX, L_YY``."""
        raise UnsupportedError(f"{type(self).__name__} does not expose Lipschitz constants")

    def strong_convexity(self) -> tuple[float, float]:
        """``(mu_X, mu_Y)``; zero means not strongly convex(-concave)."""
        return 0.0, 0.0


class QuadBilinear(SaddleObjective):
    """``(mu/2)|x-x*|^2 + (x-x*)^T M (y-y*) - (mu/2)|y-y*|^2`` on a cube pair.

    The gradient vanishes at ``(x*, y*)``, so it is the saddle whenever it lies
    in the cube.
    """

    def __init__(self, mu: float, M, x_star, y_star):
        if not mu > 0:
            raise InvalidArgumentError(f"mu must be positive, got {mu}")
        self.mu = float(mu)
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        d = self.M.shape[0]
        if self.M.shape != (d, d):
            raise InvalidArgumentError(f"M must be square, got shape {self.M.shape}")
        self.x_star = as_point(x_star, d, "x_star")
        self.y_star = as_point(y_star, d, "y_star")
        self.dim = d
        self.domain = ProductDomain(UnitCube(d), UnitCube(d))
        if self.domain.contains(PointPair(self.x_star, self.y_star), tol=0.0):
            self.known_saddle = PointPair(self.x_star.copy(), self.y_star.copy())
            self.known_L_star = 0.0
        self._norm_M = None

    @classmethod
    def random(cls, dim: int, mu: float, rng: np.random.Generator, saddle: str = "interior",
               scale: float = 0.1, max_tries: int = 100) -> "QuadBilinear":
        """Random instance: ``M ~ U[-scale, scale]``, saddle interior or at a cube vertex."""
        for _ in range(max_tries):
            M = rng.uniform(-scale, scale, size=(dim, dim))
            if saddle == "interior":
                xs, ys = rng.uniform(0.25, 0.75, size=(2, dim))
            elif saddle == "vertex":
                xs, ys = rng.integers(0, 2, size=(2, dim)).astype(float)
            else:
                raise InvalidArgumentError(f"unknown saddle mode {saddle!r}")
            prob = cls(mu, M, xs, ys)
            if is_first_order_saddle(prob, prob.known_saddle):
                return prob
        raise InvalidArgumentError("could not generate an instance passing the saddle check")

    def value(self, z):
        dx, dy = z[0] - self.x_star, z[1] - self.y_star
        return float(0.5 * self.mu * dx @ dx + dx @ self.M @ dy - 0.5 * self.mu * dy @ dy)

    def value_grid(self, X, Y):
        DX, DY = X - self.x_star, Y - self.y_star
        return (0.5 * self.mu * (DX ** 2).sum(1)[:, None] + DX @ self.M @ DY.T
                - 0.5 * self.mu * (DY ** 2).sum(1)[None, :])

    def grad_x(self, z):
        return self.mu * (z[0] - self.x_star) + self.M @ (z[1] - self.y_star)

    def grad_y(self, z):
        return self.M.T @ (z[0] - self.x_star) - self.mu * (z[1] - self.y_star)

    def best_response_y(self, x):
        return np.clip(self.y_star + self.M.T @ (np.asarray(x) - self.x_star) / self.mu, 0.0, 1.0)

    def best_response_x(self, y):
        return np.clip(self.x_star - self.M @ (np.asarray(y) - self.y_star) / self.mu, 0.0, 1.0)

    @property
    def norm_M(self) -> float:
        if self._norm_M is None:
            self._norm_M = spectral_norm(self.M)
        return self._norm_M

    def lipschitz(self):
        s = self.norm_M
        return dict(L=self.mu + s, L_XX=self.mu, L_XY=s, L_YX=s, L_YY=self.mu)

    def strong_convexity(self):
        return self.mu, self.mu


class MatrixGame(SaddleObjective):
    """Bilinear game ``x^T M y`` over two simplices."""

    def __init__(self, M, known_saddle: PointPair | None = None):
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        if not np.all(np.isfinite(self.M)):
            raise InvalidArgumentError("payoff matrix contains non-finite entries")
        p, q = self.M.shape
        self.domain = ProductDomain(Simplex(p), Simplex(q))
        if known_saddle is not None:
            known_saddle = PointPair(as_point(known_saddle[0], p, "x_star"),
                                     as_point(known_saddle[1], q, "y_star"))
            self.known_L_star = float(known_saddle[0] @ self.M @ known_saddle[1])
        self.known_saddle = known_saddle
        self._norm_M = None

    @classmethod
    def matching_pennies(cls) -> "MatrixGame":
        half = np.array([0.5, 0.5])
        return cls([[1.0, -1.0], [-1.0, 1.0]], known_saddle=PointPair(half, half.copy()))

    @classmethod
    def random(cls, p: int, q: int, rng: np.random.Generator, scale: float = 1.0) -> "MatrixGame":
        return cls(rng.uniform(-scale, scale, size=(p, q)))

    def value(self, z):
        return float(z[0] @ self.M @ z[1])

    def value_grid(self, X, Y):
        return X @ self.M @ Y.T

    def grad_x(self, z):
        return self.M @ z[1]

    def grad_y(self, z):
        return self.M.T @ z[0]

    def best_response_x(self, y):
        return self.domain.x_domain.linmin(self.M @ np.asarray(y))

    def best_response_y(self, x):
        return self.domain.y_domain.linmin(-(self.M.T @ np.asarray(x)))

    def lipschitz(self):
        if self._norm_M is None:
            self._norm_M = spectral_norm(self.M)
        s = self._norm_M
        return dict(L=s, L_XX=0.0, L_XY=s, L_YX=s, L_YY=0.0)


class BallGame(SaddleObjective):
    """``a^T x + x^T M y - b^T y`` over two Euclidean balls.

    The gradients stay away from zero: ``min(|grad_x|, |grad_y|) >= delta`` with
    ``delta = min(|a| - |M| max|y|, |b| - |M| max|x|)``, which must be positive.
    """

    def __init__(self, a, b, M, x_domain: L2Ball, y_domain: L2Ball):
        self.a = as_point(a, x_domain.dim, "a")
        self.b = as_point(b, y_domain.dim, "b")
        self.M = np.asarray(M, dtype=float).reshape(x_domain.dim, y_domain.dim)
        self.domain = ProductDomain(x_domain, y_domain)
        self.norm_M = spectral_norm(self.M)
        self.delta = min(np.linalg.norm(self.a) - self.norm_M * y_domain.max_norm(),
                         np.linalg.norm(self.b) - self.norm_M * x_domain.max_norm())
        if not self.delta > 0:
            raise InvalidArgumentError(
                f"gradient lower bound delta={self.delta:.6g} is not positive")

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, grad_scale: float = 1.0,
               matrix_scale: float = 0.1, radius: float = 1.0) -> "BallGame":
        a, b = rng.standard_normal((2, dim))
        a *= grad_scale / np.linalg.norm(a)
        b *= grad_scale / np.linalg.norm(b)
        M = rng.uniform(-matrix_scale, matrix_scale, size=(dim, dim))
        return cls(a, b, M, L2Ball(dim, radius), L2Ball(dim, radius))

    @property
    def beta(self) -> float:
        return min(self.domain.x_domain.beta, self.domain.y_domain.beta)

    def value(self, z):
        return float(self.a @ z[0] + z[0] @ self.M @ z[1] - self.b @ z[1])

    def value_grid(self, X, Y):
        return (X @ self.a)[:, None] + X @ self.M @ Y.T - (Y @ self.b)[None, :]

    def grad_x(self, z):
        return self.a + self.M @ z[1]

    def grad_y(self, z):
        return self.M.T @ z[0] - self.b

    def best_response_x(self, y):
        return self.domain.x_domain.linmin(self.a + self.M @ np.asarray(y))

    def best_response_y(self, x):
        return self.domain.y_domain.linmin(self.b - self.M.T @ np.asarray(x))

    def lipschitz(self):
        s = self.norm_M
        return dict(L=s, L_XX=0.0, L_XY=s, L_YX=s, L_YY=0.0)


def vip_field(obj: SaddleObjective, z: PointPair) -> PointPair:
    """``F(z) = (grad_x L, -grad_y L)``, the direction handed to the LMO."""
    return PointPair(obj.grad_x(z), -obj.grad_y(z))


def best_response_x(obj: SaddleObjective, y) -> np.ndarray:
    return obj.best_response_x(y)


def best_response_y(obj: SaddleObjective, x) -> np.ndarray:
    return obj.best_response_y(x)


def suboptimality_h(obj: SaddleObjective, z: PointPair) -> float:
    """``L(x, y_hat) - L(x_hat, y)`` with exact best responses."""
    y_hat = obj.best_response_y(z[0])
    x_hat = obj.best_response_x(z[1])
    return obj.value(PointPair(z[0], y_hat)) - obj.value(PointPair(x_hat, z[1]))


def merit_w(obj: SaddleObjective, z: PointPair) -> float:
    """``L(x, y*) - L(x*, y)``; needs the saddle."""
    if obj.known_saddle is None:
        raise UnsupportedError("merit w needs a known saddle point")
    xs, ys = obj.known_saddle
    return obj.value(PointPair(z[0], ys)) - obj.value(PointPair(xs, z[1]))


def first_order_gap(obj: SaddleObjective, z: PointPair) -> float:
    """``max_s <z - s, F(z)>`` over the domain, i.e. the Frank-Wolfe gap at ``z``.

    For a convex-concave objective it is zero exactly when ``z`` satisfies
    the variational inequality against every vertex pair.
    """
    r = vip_field(obj, z)
    s = linmin_product(obj.domain, r)
    return float((z[0] - s.x) @ r.x + (z[1] - s.y) @ r.y)


def is_first_order_saddle(obj: SaddleObjective, z: PointPair | None, tol: float = 1e-12) -> bool:
    return z is not None and first_order_gap(obj, z) <= tol
