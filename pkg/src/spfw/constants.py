"""Step-size and rate constants computed from problem primitives.

Only computable upper/lower bounds are produced here: curvature via ``L D^2``,
interior or pyramidal strong convexity via border distances and widths, and
so on.  Functions return ``None`` where a rate is undefined for the given
inputs (for instance ``nu <= 0``) instead of raising.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidArgumentError, UnsupportedError


def spectral_norm(M, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value of ``M`` by power iteration on ``M^T M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.any(M):
        return 0.0
    n = M.shape[1]
    # deterministic start with distinct entries, unlikely to be orthogonal
    # to the top right singular vector
    v = 1.0 + np.arange(n) / n
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        u = M.T @ (M @ v)
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            # start happened to lie in the null space; restart on a basis vector
            v = np.zeros(n)
            v[int(np.argmax(np.abs(M).sum(0)))] = 1.0
            continue
        v = u / nrm
        new_sigma = math.sqrt(nrm)
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return float(np.linalg.norm(M @ v))


def _positive(name, value):
    if not value > 0:
        raise InvalidArgumentError(f"{name} must be positive, got {value}")


def _nonnegative(name, value):
    if not value >= 0:
        raise InvalidArgumentError(f"{name} must be nonnegative, got {value}")


def curvature_bound(L: float, D_X: float, D_Y: float) -> float:
    """``C = L (D_X^2 + D_Y^2) / 2``."""
    _positive("L", L)
    _nonnegative("D_X", D_X)
    _nonnegative("D_Y", D_Y)
    return 0.5 * L * (D_X ** 2 + D_Y ** 2)


def curvature_partial(L_XX: float, L_YY: float, D_X: float, D_Y: float) -> float:
    """Per-block alternative ``(L_XX D_X^2 + L_YY D_Y^2) / 2`` (reported only)."""
    _nonnegative("L_XX", L_XX)
    _nonnegative("L_YY", L_YY)
    return 0.5 * (L_XX * D_X ** 2 + L_YY * D_Y ** 2)


def _nu(a, delta_mu, mu_X, mu_Y, D_X, D_Y, L_XY, L_YX):
    coupling = max(D_X * L_XY / math.sqrt(mu_Y), D_Y * L_YX / math.sqrt(mu_X))
    return a - math.sqrt(2.0) / delta_mu * coupling


def nu_interior(delta_X, delta_Y, mu_X, mu_Y, D_X, D_Y, L_XY, L_YX) -> tuple[float, float]:
    """``(delta_mu, nu)`` for a saddle strictly inside the domain.

    ``delta_X``, ``delta_Y`` are distances from the saddle to the boundary.
    """
    for name, v in (("delta_X", delta_X), ("delta_Y", delta_Y), ("mu_X", mu_X), ("mu_Y", mu_Y)):
        _positive(name, v)
    delta_mu = math.sqrt(min(mu_X * delta_X ** 2, mu_Y * delta_Y ** 2))
    return delta_mu, _nu(1.0, delta_mu, mu_X, mu_Y, D_X, D_Y, L_XY, L_YX)


def nu_polytope(delta_A, delta_B, mu_X, mu_Y, D_X, D_Y, L_XY, L_YX) -> tuple[float, float]:
    """``(delta_mu, nu)`` for polytopes with pyramidal widths ``delta_A``, ``delta_B``."""
    if delta_A is None or delta_B is None:
        raise UnsupportedError("pyramidal width is not known for this domain; supply it")
    for name, v in (("delta_A", delta_A), ("delta_B", delta_B), ("mu_X", mu_X), ("mu_Y", mu_Y)):
        _positive(name, v)
    delta_mu = math.sqrt(min(mu_X * delta_A ** 2, mu_Y * delta_B ** 2))
    return delta_mu, _nu(0.5, delta_mu, mu_X, mu_Y, D_X, D_Y, L_XY, L_YX)


def geometric_rate(nu: float, delta_mu: float, C: float) -> float | None:
    """``rho = nu^2 delta_mu^2 / (2C)``, or ``None`` when ``nu <= 0``."""
    if nu is None or not nu > 0:
        return None
    _positive("delta_mu", delta_mu)
    _positive("C", C)
    return nu ** 2 * delta_mu ** 2 / (2.0 * C)


def sublinear_constant(w0: float, C_L: float, nu: float) -> float | None:
    """``2 max(w0, 2 C_L / (2 nu - 1))``, or ``None`` when ``nu <= 1/2``."""
    if nu is None or not nu > 0.5:
        return None
    return 2.0 * max(w0, 2.0 * C_L / (2.0 * nu - 1.0))


def rates(nu: float, delta_mu: float, C: float, w0: float | None = None):
    """``(rho, C_sub)``; ``C_sub`` uses ``C`` as the curvature and needs ``w0``."""
    rho = geometric_rate(nu, delta_mu, C)
    c_sub = None if w0 is None else sublinear_constant(w0, C, nu)
    return rho, c_sub


def ball_constants(L: float, beta: float, delta: float) -> tuple[float, float]:
    """``(C_delta, rho)`` for strongly convex sets with gradients bounded below by ``delta``."""
    for name, v in (("L", L), ("beta", beta), ("delta", delta)):
        _positive(name, v)
    c_delta = 2.0 * L + 8.0 * L ** 2 / (beta * delta)
    return c_delta, beta * delta / (16.0 * c_delta)


def p_l_bound(mu_X, mu_Y, grad_sup_x, grad_sup_y) -> float:
    """Upper bound on the constant relating ``h`` and ``sqrt(w)``."""
    _positive("mu_X", mu_X)
    _positive("mu_Y", mu_Y)
    return math.sqrt(2.0) * max(grad_sup_x / math.sqrt(mu_X), grad_sup_y / math.sqrt(mu_Y))


def gradient_sup_bounds(grad_ref_x, grad_ref_y, L_XX, L_XY, L_YX, L_YY, D_X, D_Y):
    """Bound ``sup |grad_x L|`` and ``sup |grad_y L|`` from one reference point.

    ``grad_ref_*`` are the gradients at any feasible point; the spread over the
    domain is controlled by the partial Lipschitz constants.
    """
    sup_x = float(np.linalg.norm(grad_ref_x)) + L_XX * D_X + L_XY * D_Y
    sup_y = float(np.linalg.norm(grad_ref_y)) + L_YX * D_X + L_YY * D_Y
    return sup_x, sup_y


def m_bounds(mu_X, mu_Y, D_X, D_Y, L_XY, L_YX) -> tuple[float | None, float | None]:
    """Bounds on the bilinearity constants; ``None`` where a ``mu`` is zero."""
    m_xy = math.sqrt(2.0 / mu_Y) * L_XY * D_X if mu_Y > 0 else None
    m_yx = math.sqrt(2.0 / mu_X) * L_YX * D_Y if mu_X > 0 else None
    return m_xy, m_yx


def heuristic_c_tilde(L, D_X, D_Y, L_XY, L_YX, mu_X, mu_Y) -> float:
    """``L D_X^2 + L D_Y^2 + L_XY L_YX (D_X^2/mu_X + D_Y^2/mu_Y)``."""
    _positive("mu_X", mu_X)
    _positive("mu_Y", mu_Y)
    return L * D_X ** 2 + L * D_Y ** 2 + L_XY * L_YX * (D_X ** 2 / mu_X + D_Y ** 2 / mu_Y)


@dataclass
class ProblemConstants:
    """Every constant used by the step rules and the rate bounds.

    Fields that do not apply to a problem (or whose preconditions fail) are
    ``None``.
    """

    L: float | None = None
    L_XX: float | None = None
    L_XY: float | None = None
    L_YX: float | None = None
    L_YY: float | None = None
    mu_X: float | None = None
    mu_Y: float | None = None
    D_X: float | None = None
    D_Y: float | None = None
    delta_X: float | None = None
    delta_Y: float | None = None
    delta_A: float | None = None
    delta_B: float | None = None
    delta_mu: float | None = None
    nu: float | None = None
    C: float | None = None
    C_partial: float | None = None
    rho: float | None = None
    C_sub: float | None = None
    P_L_bound: float | None = None
    M_XY_bound: float | None = None
    M_YX_bound: float | None = None
    beta: float | None = None
    delta: float | None = None
    C_delta: float | None = None
    rho_ball: float | None = None
    C_tilde: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def problem_constants(obj, case: str = "interior", w0: float | None = None,
                      pyramidal_widths: tuple | None = None) -> ProblemConstants:
    """Assemble :class:`ProblemConstants` for an objective.

    ``case`` is ``"interior"`` (saddle inside the domain, border distances) or
    ``"polytope"`` (pyramidal widths).  ``w0`` enables the sublinear constant.
    """
    if case not in ("interior", "polytope"):
        raise InvalidArgumentError(f"unknown case {case!r}")
    pd = obj.domain
    pc = ProblemConstants(D_X=pd.x_domain.diameter, D_Y=pd.y_domain.diameter)
    lip = obj.lipschitz()
    pc.L, pc.L_XX, pc.L_XY, pc.L_YX, pc.L_YY = (lip[k] for k in ("L", "L_XX", "L_XY", "L_YX", "L_YY"))
    pc.mu_X, pc.mu_Y = obj.strong_convexity()
    if pc.L > 0:
        pc.C = curvature_bound(pc.L, pc.D_X, pc.D_Y)
    pc.C_partial = curvature_partial(pc.L_XX, pc.L_YY, pc.D_X, pc.D_Y)
    pc.M_XY_bound, pc.M_YX_bound = m_bounds(pc.mu_X, pc.mu_Y, pc.D_X, pc.D_Y, pc.L_XY, pc.L_YX)

    strongly = pc.mu_X > 0 and pc.mu_Y > 0
    if strongly:
        pc.C_tilde = heuristic_c_tilde(pc.L, pc.D_X, pc.D_Y, pc.L_XY, pc.L_YX, pc.mu_X, pc.mu_Y)
    saddle = obj.known_saddle
    if strongly and saddle is not None:
        ref = saddle
        sup_x, sup_y = gradient_sup_bounds(obj.grad_x(ref), obj.grad_y(ref), pc.L_XX, pc.L_XY,
                                           pc.L_YX, pc.L_YY, pc.D_X, pc.D_Y)
        pc.P_L_bound = p_l_bound(pc.mu_X, pc.mu_Y, sup_x, sup_y)

    if strongly and pc.C is not None:
        if case == "interior" and saddle is not None:
            pc.delta_X = pd.x_domain.border_distance(saddle.x)
            pc.delta_Y = pd.y_domain.border_distance(saddle.y)
            if pc.delta_X > 0 and pc.delta_Y > 0:
                pc.delta_mu, pc.nu = nu_interior(pc.delta_X, pc.delta_Y, pc.mu_X, pc.mu_Y,
                                                 pc.D_X, pc.D_Y, pc.L_XY, pc.L_YX)
        elif case == "polytope":
            if pyramidal_widths is None:
                pyramidal_widths = (pd.x_domain.pyramidal_width, pd.y_domain.pyramidal_width)
            pc.delta_A, pc.delta_B = pyramidal_widths
            if pc.delta_A is not None and pc.delta_B is not None:
                pc.delta_mu, pc.nu = nu_polytope(pc.delta_A, pc.delta_B, pc.mu_X, pc.mu_Y,
                                                 pc.D_X, pc.D_Y, pc.L_XY, pc.L_YX)
        if pc.nu is not None:
            pc.rho, pc.C_sub = rates(pc.nu, pc.delta_mu, pc.C, w0)

    delta = getattr(obj, "delta", None)
    beta = getattr(obj, "beta", None)
    if delta is not None and beta is not None:
        pc.beta, pc.delta = beta, delta
        if pc.L > 0:
            pc.C_delta, pc.rho_ball = ball_constants(pc.L, beta, delta)
    return pc
