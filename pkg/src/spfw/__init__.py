"""Frank-Wolfe type solvers for constrained convex-concave saddle-point problems."""
from .domains import (L1Ball, L2Ball, PointPair, ProductDomain, Simplex, UnitCube,
                      VertexPolytope, ball_inclusion_check, enumerate_vertices, linmin,
                      linmin_product)
from .objectives import (BallGame, MatrixGame, QuadBilinear, SaddleObjective, merit_w,
                         suboptimality_h, vip_field)
from .constants import ProblemConstants, problem_constants
from .solver import (ActiveSet, ActiveSetPair, GapReport, SolverTrace, StepRule, compute_gaps,
                     run_spafw, run_spfw, run_sppfw, step_size)

__version__ = "0.1.0"
