import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spfw.constants import (ProblemConstants, ball_constants, curvature_bound, geometric_rate,
                            gradient_sup_bounds, heuristic_c_tilde, m_bounds, nu_interior,
                            nu_polytope, p_l_bound, problem_constants, rates, spectral_norm,
                            sublinear_constant)
from spfw.errors import InvalidArgumentError, UnsupportedError
from spfw.objectives import BallGame, MatrixGame, QuadBilinear
from spfw.rng import make_rng

positive = st.floats(1e-3, 1e3)


def test_curvature_examples():
    D = 2.0   # diameter of the cube d=4
    assert curvature_bound(1.0, D, D) == 4.0
    assert curvature_bound(3.0, 2.0, 0.0) == pytest.approx(3.0 * 4 / 2)
    with pytest.raises(InvalidArgumentError):
        curvature_bound(0.0, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        curvature_bound(1.0, -1.0, 1.0)


@pytest.mark.parametrize("seed", range(8))
def test_spectral_norm_matches_svd(seed):
    rng = make_rng(seed)
    p, q = rng.integers(1, 31, size=2)
    M = rng.standard_normal((p, q))
    assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-8)


def test_spectral_norm_special_cases():
    assert spectral_norm(np.zeros((3, 3))) == 0.0
    assert spectral_norm([[3.0]]) == 3.0
    assert spectral_norm([[1.0, -1.0], [-1.0, 1.0]]) == pytest.approx(2.0)
    # a start vector inside the null space must not stall the iteration
    M = np.array([[3.0, -2.0]])   # annihilates the default start (1, 1.5)
    assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-10)


def test_quad_bilinear_lipschitz_uses_spectral_norm():
    prob = QuadBilinear.random(12, 2.5, make_rng(3))
    lip = prob.lipschitz()
    assert lip["L"] == pytest.approx(2.5 + np.linalg.norm(prob.M, 2), rel=1e-8)
    pc = problem_constants(prob)
    assert pc.C == pytest.approx(lip["L"] * 12, rel=1e-12)   # D^2 = d in each block


def test_nu_decoupled():
    dm, nu = nu_interior(0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0)
    assert nu == 1.0 and dm == pytest.approx(0.5)
    dm, nu = nu_polytope(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 0.0, 0.0)
    assert nu == 0.5 and dm == pytest.approx(math.sqrt(2))


def test_nu_hand_value():
    # a = 1, delta_mu = sqrt(min(4 * 0.25, 1 * 1)) = 1
    # coupling = max(2 * 0.5 / 1, 1 * 0.25 / 2) = 1  ->  nu = 1 - sqrt(2)
    dm, nu = nu_interior(0.5, 1.0, 4.0, 1.0, 2.0, 1.0, 0.5, 0.25)
    assert dm == pytest.approx(1.0)
    assert nu == pytest.approx(1 - math.sqrt(2))


def test_nu_goes_negative_as_mu_vanishes():
    values = [nu_interior(0.5, 0.5, mu, mu, 1.0, 1.0, 0.1, 0.1)[1] for mu in (1.0, 1e-2, 1e-4, 1e-6)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < -1e3


def test_nu_errors():
    with pytest.raises(InvalidArgumentError):
        nu_interior(0.0, 0.5, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        nu_interior(0.5, 0.5, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0)
    with pytest.raises(UnsupportedError):
        nu_polytope(None, 0.5, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(positive, positive, positive, positive, positive, st.floats(0, 10), st.floats(0, 10))
def test_nu_polytope_homogeneity(wa, wb, mu, dx, dy, lxy, lyx):
    dm1, nu1 = nu_polytope(wa, wb, mu, mu, dx, dy, lxy, lyx)
    dm4, nu4 = nu_polytope(wa, wb, 4 * mu, 4 * mu, dx, dy, lxy, lyx)
    assert dm4 == pytest.approx(2 * dm1, rel=1e-12)
    # the coupling term is divided by sqrt(mu) and by delta_mu: it shrinks by 4
    assert 0.5 - nu4 == pytest.approx((0.5 - nu1) / 4, rel=1e-9, abs=1e-12)


def _nu_reference(prob, norm_bound):
    """Independent recomputation from the raw formula with a given bound on |M|."""
    d = prob.dim
    delta = min(np.min(np.minimum(prob.x_star, 1 - prob.x_star)),
                np.min(np.minimum(prob.y_star, 1 - prob.y_star)))
    delta_mu = math.sqrt(prob.mu) * delta
    D = math.sqrt(d)
    return 1.0 - math.sqrt(2) / delta_mu * D * norm_bound / math.sqrt(prob.mu)


@pytest.mark.parametrize("seed", range(5))
def test_nu_sign_against_independent_bounds(seed):
    prob = QuadBilinear.random(30, 5.0, make_rng(seed))
    nu = problem_constants(prob).nu
    M = prob.M
    upper = math.sqrt(np.abs(M).sum(0).max() * np.abs(M).sum(1).max())   # sqrt(|M|_1 |M|_inf)
    lower = max(np.linalg.norm(M, axis=0).max(), np.linalg.norm(M, axis=1).max())
    nu_lo, nu_hi = _nu_reference(prob, upper), _nu_reference(prob, lower)
    assert nu_lo - 1e-12 <= nu <= nu_hi + 1e-12
    if nu_lo > 0 or nu_hi < 0:
        assert np.sign(nu) == np.sign(nu_lo)


def test_rates_examples():
    assert geometric_rate(1.0, 1.0, 2.0) == 0.25
    assert sublinear_constant(1.0, 2.0, 0.75) == 16.0
    assert sublinear_constant(1.0, 2.0, 0.4) is None
    assert sublinear_constant(1.0, 2.0, 0.5) is None
    assert geometric_rate(0.0, 1.0, 2.0) is None
    assert geometric_rate(-1.0, 1.0, 2.0) is None
    assert rates(1.0, 1.0, 2.0) == (0.25, None)
    assert rates(0.75, 1.0, 2.0, w0=1.0) == (0.75 ** 2 / 4, 16.0)


def test_ball_constants_examples():
    c_delta, rho = ball_constants(1.0, 1.0, 1.0)
    assert c_delta == 10.0 and rho == pytest.approx(1 / 160)
    for delta in (1e3, 1e6, 1e9):
        assert ball_constants(2.0, 1.0, delta)[0] == pytest.approx(4.0, rel=1e-2)
    with pytest.raises(InvalidArgumentError):
        ball_constants(1.0, 0.0, 1.0)


def test_ball_game_delta_is_sampled_lower_bound():
    rng = make_rng(11)
    game = BallGame.random(4, rng, matrix_scale=0.2)
    pc = problem_constants(game)
    assert pc.delta == game.delta > 0
    assert pc.C_delta == pytest.approx(ball_constants(pc.L, pc.beta, pc.delta)[0])
    u = rng.standard_normal((10_000, 2, 4))
    u /= np.linalg.norm(u, axis=2, keepdims=True)
    u *= rng.uniform(size=(10_000, 2, 1)) ** 0.25
    gx = game.a[None, :] + u[:, 1] @ game.M.T
    gy = u[:, 0] @ game.M - game.b[None, :]
    assert min(np.linalg.norm(gx, axis=1).min(), np.linalg.norm(gy, axis=1).min()) >= game.delta


def test_p_l_examples():
    # exact supremum of |grad_x| over [0, 1] for the decoupled d=1 instance
    grid = np.linspace(0, 1, 1001)
    sup = np.abs(grid - 0.5).max()
    assert p_l_bound(1.0, 1.0, sup, sup) == pytest.approx(math.sqrt(2) * 0.5)
    assert p_l_bound(4.0, 4.0, sup, sup) == pytest.approx(p_l_bound(1.0, 1.0, sup, sup) / 2)
    g = np.array([3.0, 4.0])
    assert p_l_bound(2.0, 2.0, np.linalg.norm(g), 0.0) == pytest.approx(math.sqrt(2) * 5 / math.sqrt(2))


def test_gradient_sup_bounds_cover_sampled_gradients():
    rng = make_rng(12)
    prob = QuadBilinear.random(5, 1.0, rng, scale=0.5)
    lip = prob.lipschitz()
    D = math.sqrt(5)
    z0 = prob.known_saddle
    sup_x, sup_y = gradient_sup_bounds(prob.grad_x(z0), prob.grad_y(z0), lip["L_XX"], lip["L_XY"],
                                       lip["L_YX"], lip["L_YY"], D, D)
    X, Y = rng.uniform(size=(2, 5000, 5))
    gx = prob.mu * (X - prob.x_star) + (Y - prob.y_star) @ prob.M.T
    gy = (X - prob.x_star) @ prob.M - prob.mu * (Y - prob.y_star)
    assert np.linalg.norm(gx, axis=1).max() <= sup_x
    assert np.linalg.norm(gy, axis=1).max() <= sup_y
    pc = problem_constants(prob)
    assert pc.P_L_bound == pytest.approx(p_l_bound(1.0, 1.0, sup_x, sup_y))


def test_m_bounds_examples():
    assert m_bounds(1.0, 1.0, 1.0, 1.0, 0.0, 0.0) == (0.0, 0.0)
    assert m_bounds(1.0, 2.0, 1.0, 1.0, 1.0, 0.0)[0] == pytest.approx(1.0)
    assert m_bounds(0.0, 0.0, 1.0, 1.0, 1.0, 1.0) == (None, None)


def test_heuristic_examples():
    C = curvature_bound(3.0, 1.0, 2.0)
    assert heuristic_c_tilde(3.0, 1.0, 2.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(2 * C)
    assert heuristic_c_tilde(1, 1, 1, 1, 1, 1, 1) == 4
    assert heuristic_c_tilde(1.0, 2.0, 2.0, 0.5, 0.5, 1.0, 1.0) == pytest.approx(10.0)
    with pytest.raises(InvalidArgumentError):
        heuristic_c_tilde(1, 1, 1, 1, 1, 0, 1)


def test_problem_constants_interior_matches_pure_functions():
    prob = QuadBilinear.random(6, 20.0, make_rng(13))
    pc = problem_constants(prob, w0=0.3)
    s = np.linalg.norm(prob.M, 2)
    D = math.sqrt(6)
    assert pc.L == pytest.approx(20.0 + s, rel=1e-8)
    assert pc.D_X == pytest.approx(D)
    dx = float(np.min(np.minimum(prob.x_star, 1 - prob.x_star)))
    dy = float(np.min(np.minimum(prob.y_star, 1 - prob.y_star)))
    assert (pc.delta_X, pc.delta_Y) == pytest.approx((dx, dy))
    dm, nu = nu_interior(dx, dy, 20.0, 20.0, D, D, pc.L_XY, pc.L_YX)
    assert (pc.delta_mu, pc.nu) == pytest.approx((dm, nu))
    assert pc.rho == pytest.approx(geometric_rate(nu, dm, pc.C))
    assert pc.C_tilde == pytest.approx(heuristic_c_tilde(pc.L, D, D, pc.L_XY, pc.L_YX, 20.0, 20.0))
    if nu > 0.5:
        assert pc.C_sub == pytest.approx(sublinear_constant(0.3, pc.C, nu))
    assert set(pc.as_dict()) == set(ProblemConstants.keys())


def test_problem_constants_polytope_and_bilinear():
    prob = QuadBilinear.random(9, 1.0, make_rng(14), saddle="vertex")
    pc = problem_constants(prob, case="polytope")
    assert pc.delta_A == pytest.approx(1 / 3) and pc.delta_B == pytest.approx(1 / 3)
    assert pc.delta_X is None
    game = MatrixGame.matching_pennies()
    pc = problem_constants(game)
    assert pc.nu is None and pc.C_tilde is None and pc.M_XY_bound is None
    assert pc.C == pytest.approx(0.5 * 2 * (2 + 2))
    with pytest.raises(InvalidArgumentError):
        problem_constants(game, case="edge")
