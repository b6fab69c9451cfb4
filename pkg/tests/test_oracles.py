import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spfw.domains import L1Ball, L2Ball, PointPair, ProductDomain, Simplex, UnitCube
from spfw.errors import CapacityError, InvalidArgumentError
from spfw.objectives import BallGame, MatrixGame, QuadBilinear, SaddleObjective
from spfw.oracles import (FictitiousPlayState, blockwise_norm, brute_force_fw_gap,
                          domain_grid, fictitious_play, finite_diff_gradient, fw_corner_map,
                          grid_saddle_search, sample_pair, sample_point,
                          sampled_lipschitz_ratio)
from spfw.rng import make_rng


def pp(x, y):
    return PointPair(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


# -- fictitious play ----------------------------------------------------------------

def test_fp_matching_pennies_four_rounds():
    # hand simulation, lowest index wins ties:
    #   round 1: br to (e1, e1) -> x plays 2, y plays 1
    #   round 2: br to (e2, e1) -> x plays 2, y plays 2
    #   round 3: br to (e2, (1/2, 1/2)) -> x ties -> 1, y plays 2
    #   round 4: br to ((1/3, 2/3), (1/3, 2/3)) -> x plays 1, y plays 2
    hist = fictitious_play([[1, -1], [-1, 1]], 4)
    assert len(hist) == 5
    np.testing.assert_allclose(hist[4][0], [0.5, 0.5])
    np.testing.assert_allclose(hist[4][1], [0.25, 0.75])
    np.testing.assert_allclose(hist[2][1], [0.5, 0.5])


def test_fp_constant_game_stays_at_first_action():
    for x, y in fictitious_play(np.zeros((3, 4)), 20):
        np.testing.assert_array_equal(x, [1, 0, 0])
        np.testing.assert_array_equal(y, [1, 0, 0, 0])


def test_fp_state_counts_and_recursion():
    M = MatrixGame.random(4, 3, make_rng(30)).M
    state = FictitiousPlayState(np.zeros(4), np.zeros(3))
    hist = fictitious_play(M, 200, state=state)
    assert state.t == 200 and state.counts_x.sum() == 200
    x_avg, y_avg = state.averages()
    np.testing.assert_allclose(hist[-1][0], x_avg, atol=1e-12)
    np.testing.assert_allclose(hist[-1][1], y_avg, atol=1e-12)
    for t in range(200):
        x_prev, y_prev = hist[t]
        br_x = np.eye(4)[np.argmin(M @ y_prev)]
        br_y = np.eye(3)[np.argmax(M.T @ x_prev)]
        w = 1 / (t + 1)
        assert np.array_equal(hist[t + 1][0], (1 - w) * x_prev + w * br_x)
        assert np.array_equal(hist[t + 1][1], (1 - w) * y_prev + w * br_y)
        assert abs(hist[t + 1][0].sum() - 1) <= 1e-12 and hist[t + 1][0].min() >= 0


def test_fp_errors():
    with pytest.raises(InvalidArgumentError):
        fictitious_play(np.eye(2), 0)
    with pytest.raises(InvalidArgumentError):
        fictitious_play(np.eye(2), 3, tie_break="random")


# -- grids --------------------------------------------------------------------------

def test_grid_decoupled_1d():
    prob = QuadBilinear(1.0, [[0.0]], [0.5], [0.5])
    res = grid_saddle_search(prob, prob.domain, 1e-3)
    assert abs(res.x[0] - 0.5) <= 1e-3 and abs(res.y[0] - 0.5) <= 1e-3
    assert res.value == pytest.approx(0.0, abs=1e-6)
    assert res.gap >= 0


def test_grid_matching_pennies():
    game = MatrixGame.matching_pennies()
    res = grid_saddle_search(game, game.domain, 0.01)
    assert abs(res.value) <= 0.02
    np.testing.assert_allclose(res.x, [0.5, 0.5], atol=0.02)


def test_grid_two_by_two_closed_form():
    M = np.array([[3.0, 0.0], [0.0, 1.0]])
    res = grid_saddle_search(MatrixGame(M), MatrixGame(M).domain, 0.01)
    # the minimizer mixes so that the maximizer is indifferent between columns
    (q11, q12), (q21, q22) = M
    x_closed = np.array([q22 - q21, q11 - q12]) / (q11 + q22 - q12 - q21)
    np.testing.assert_allclose(x_closed, [0.25, 0.75])
    np.testing.assert_allclose(res.x, x_closed, atol=0.01)
    assert res.value == pytest.approx(np.linalg.det(M) / (q11 + q22 - q12 - q21), abs=0.02)


@pytest.mark.parametrize("seed", range(31, 36))
def test_grid_gap_shrinks_with_resolution(seed):
    # strong coupling, so that coarse grids have no pure saddle; refinement is
    # not nested, so only the overall trend is asserted
    prob = QuadBilinear.random(2, 0.1, make_rng(seed), scale=1.0)
    gaps = [grid_saddle_search(prob, prob.domain, r).gap for r in (0.25, 0.05, 0.01)]
    assert all(g >= 0 for g in gaps)
    assert gaps[0] > 0 and gaps[-1] < gaps[0] / 10
    assert gaps[-1] <= 1e-3


def test_grid_locates_interior_saddle():
    prob = QuadBilinear.random(2, 1.0, make_rng(31), scale=0.5)
    res = grid_saddle_search(prob, prob.domain, 0.01)
    np.testing.assert_allclose(res.x, prob.x_star, atol=0.02)
    np.testing.assert_allclose(res.y, prob.y_star, atol=0.02)


def test_grid_capacity():
    prob = QuadBilinear.random(4, 1.0, make_rng(32))
    with pytest.raises(CapacityError):
        grid_saddle_search(prob, prob.domain, 1e-2)
    with pytest.raises(CapacityError):
        domain_grid(UnitCube(2), 0.1, max_points=100)
    with pytest.raises(InvalidArgumentError):
        domain_grid(UnitCube(2), 0.0)


def test_domain_grids():
    assert len(domain_grid(UnitCube(2), 0.5)) == 9
    simplex = domain_grid(Simplex(3), 0.25)
    assert len(simplex) == 15
    np.testing.assert_allclose(simplex.sum(1), 1.0)
    disk = domain_grid(L2Ball(2, 1.0), 0.5)
    assert len(disk) == 9 + 4    # the 3x3 block plus the axis points at radius 1
    assert all(L2Ball(2, 1.0).contains(p, 0.0) for p in disk)


@pytest.mark.parametrize("domain", [UnitCube(3), Simplex(4), L2Ball(3, 2.0, center=np.ones(3)),
                                    L1Ball(3, 0.5)])
def test_samples_are_feasible(domain):
    rng = make_rng(33)
    for _ in range(500):
        assert domain.contains(sample_point(domain, rng))


# -- finite differences ----------------------------------------------------------------

class Linear(SaddleObjective):
    def __init__(self, a, b):
        self.a, self.b = np.asarray(a, float), np.asarray(b, float)
        self.domain = ProductDomain(UnitCube(len(a)), UnitCube(len(b)))

    def value(self, z):
        return float(self.a @ z[0] + self.b @ z[1])

    def grad_x(self, z):
        return self.a

    def grad_y(self, z):
        return self.b


def test_finite_differences_exact_on_linear():
    obj = Linear([0.5, -2.0], [1.0, 0.25, 3.0])
    fd = finite_diff_gradient(obj, pp([0.5, 0.5], [0.5, 0.5, 0.5]), 1e-3)
    np.testing.assert_allclose(fd.x, obj.a, atol=1e-12)
    np.testing.assert_allclose(fd.y, obj.b, atol=1e-12)


def test_finite_differences_quad():
    prob = QuadBilinear.random(5, 2.0, make_rng(34), scale=1.0)
    z = pp(np.full(5, 0.4), np.full(5, 0.6))
    fd = finite_diff_gradient(prob, z, 1e-5)
    for num, ana in ((fd.x, prob.grad_x(z)), (fd.y, prob.grad_y(z))):
        assert np.linalg.norm(num - ana) < 1e-5 * np.linalg.norm(ana)


def test_finite_difference_errors():
    prob = QuadBilinear(1.0, [[0.0]], [0.5], [0.5])
    with pytest.raises(InvalidArgumentError):
        finite_diff_gradient(prob, pp([0.5], [0.5]), 0.0)
    with pytest.raises(InvalidArgumentError):
        finite_diff_gradient(prob, pp([1e-6], [0.5]), 1e-5)


# -- Lipschitz sampling ---------------------------------------------------------------

def test_lipschitz_ratio_identity_and_constant():
    pd = ProductDomain(UnitCube(3), Simplex(2))
    assert sampled_lipschitz_ratio(lambda z: z, pd, 100, make_rng(35)) == pytest.approx(1.0)
    const = pp([1, 2, 3], [4, 5])
    assert sampled_lipschitz_ratio(lambda z: const, pd, 100, make_rng(35)) == 0.0
    with pytest.raises(InvalidArgumentError):
        sampled_lipschitz_ratio(lambda z: z, pd, 0)


def test_lipschitz_ratio_linear_map():
    pd = ProductDomain(L2Ball(2), L2Ball(2))
    ratio = sampled_lipschitz_ratio(lambda z: pp(3 * z.x, 3 * z.y), pd, 50, make_rng(36))
    assert ratio == pytest.approx(3.0)


def test_fw_corner_map_bound_on_ball_game():
    rng = make_rng(37)
    game = BallGame.random(3, rng, matrix_scale=0.3)
    L = game.lipschitz()["L"]
    bound = 4 * L / (game.delta * game.beta)
    assert sampled_lipschitz_ratio(fw_corner_map(game), game.domain, 1000, rng) <= bound


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_blockwise_norm_triangle(seed):
    rng = make_rng(seed)
    a, b = pp(rng.standard_normal(3), rng.standard_normal(2)), pp(rng.standard_normal(3),
                                                                   rng.standard_normal(2))
    total = pp(a.x + b.x, a.y + b.y)
    assert blockwise_norm(total) <= blockwise_norm(a) + blockwise_norm(b) + 1e-12


def test_brute_force_gap_pennies():
    game = MatrixGame.matching_pennies()
    assert brute_force_fw_gap(game, pp([1, 0], [0, 1])) == pytest.approx(2.0)
    rng = make_rng(38)
    for _ in range(20):
        assert brute_force_fw_gap(game, sample_pair(game.domain, rng)) >= -1e-15
