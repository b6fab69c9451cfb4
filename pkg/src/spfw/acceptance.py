"""Acceptance checks: proven per-iteration bounds verified on concrete runs.

Each ``check_*`` function builds (or reuses) a seeded run and returns a list
of :class:`CheckResult`.  The CLI ``verify`` command and the test suite both
call these.  Traces are cached per process; ``clear_cache`` resets them.
"""
from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .constants import problem_constants
from .domains import PointPair
from .objectives import BallGame, MatrixGame, QuadBilinear, merit_w
from .oracles import (fictitious_play, finite_diff_gradient, fw_corner_map, grid_saddle_search,
                      sample_pair, sampled_lipschitz_ratio)
from .rng import make_rng
from .solver import ActiveSet, StepRule, run_spafw, run_spfw

SLACK = 1e-9


@dataclass
class CheckResult:
    criterion: int | str
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"{status} [{self.criterion}] {self.name}: measured={self.measured:.6g} "
                f"bound={self.bound:.6g}")
        return text + (f" ({self.detail})" if self.detail else "")


_CACHE: dict = {}


def clear_cache():
    _CACHE.clear()


def _cached(key, build):
    if key not in _CACHE:
        _CACHE[key] = build()
    return _CACHE[key]


# --------------------------------------------------------------------------
# instances and runs

def interior_run():
    """QuadBilinear d=10 with interior saddle, SP-FW adaptive, 500 iterations."""
    def build():
        prob = QuadBilinear.random(10, 20.0, make_rng(1), saddle="interior")
        pc = problem_constants(prob, "interior")
        trace = run_spfw(prob, prob.domain, StepRule.adaptive(pc.nu, pc.C), eps=0.0,
                         max_iters=500)
        return prob, pc, trace
    return _cached("interior", build)


def vertex_run():
    """QuadBilinear d=10 with vertex saddle, SP-AFW adaptive (polytope case), 500 iterations."""
    def build():
        prob = QuadBilinear.random(10, 20.0, make_rng(2), saddle="vertex")
        pc = problem_constants(prob, "polytope")
        trace = run_spafw(prob, prob.domain, StepRule.adaptive(pc.nu, pc.C), eps=0.0,
                          max_iters=500)
        return prob, pc, trace
    return _cached("vertex", build)


def sublinear_run():
    """Decoupled QuadBilinear (M = 0), SP-FW universal rule, 10^4 iterations."""
    def build():
        rng = make_rng(3)
        d = 10
        prob = QuadBilinear(1.0, np.zeros((d, d)), *rng.uniform(0.25, 0.75, size=(2, d)))
        z0 = PointPair(np.zeros(d), np.zeros(d))
        pc = problem_constants(prob, "interior", w0=merit_w(prob, z0))
        trace = run_spfw(prob, prob.domain, StepRule.universal(), eps=0.0, max_iters=10_000,
                         z0=z0)
        return prob, pc, trace
    return _cached("sublinear", build)


def ball_run():
    """BallGame d=5, strongly-convex-set rule, up to 300 iterations."""
    def build():
        prob = BallGame.random(5, make_rng(4), matrix_scale=0.3)
        pc = problem_constants(prob)
        trace = run_spfw(prob, prob.domain, StepRule.strongly_convex_set(pc.C_delta), eps=0.0,
                         max_iters=300)
        return prob, pc, trace
    return _cached("ball", build)


# --------------------------------------------------------------------------
# trace-level invariants (also used on arbitrary runs by ``verify``)

def certificate_violation(trace) -> float:
    """Largest violation of ``g_fw >= h >= w`` (0 when only some are present)."""
    g, h, w = trace.column("gap_fw"), trace.column("h"), trace.column("w")
    worst = 0.0
    if not np.all(np.isnan(h)):
        worst = max(worst, float(np.nanmax(h - g)))
        if not np.all(np.isnan(w)):
            worst = max(worst, float(np.nanmax(w - h)))
    elif not np.all(np.isnan(w)):
        worst = max(worst, float(np.nanmax(w - g)))
    return worst


def sandwich_violation(trace) -> float:
    """Largest violation of ``g_pfw/2 <= max(g_fw, g_away) <= g_pfw``."""
    g_fw, g_a, g_p = trace.column("gap_fw"), trace.column("gap_away"), trace.column("gap_pfw")
    if np.all(np.isnan(g_p)):
        return 0.0
    chosen = np.maximum(g_fw, g_a)
    return float(max(np.nanmax(0.5 * g_p - chosen), np.nanmax(chosen - g_p)))


def pl_violation(trace, p_l: float) -> float:
    """Largest violation of ``h <= P_L sqrt(2 w)``."""
    h, w = trace.column("h"), trace.column("w")
    return float(np.nanmax(h - p_l * np.sqrt(2.0 * np.maximum(w, 0.0))))


def trace_checks(trace, label: str, p_l: float | None = None) -> list[CheckResult]:
    """Generic invariants for any trace: certificates, sandwich, counters."""
    out = [CheckResult(label, "gap certificate g_fw >= h >= w", certificate_violation(trace) <= SLACK,
                       certificate_violation(trace), SLACK, "max violation")]
    if trace.algorithm == "spafw":
        v = sandwich_violation(trace)
        out.append(CheckResult(label, "gap sandwich", v <= SLACK, v, SLACK, "max violation"))
        t = trace.column("t")
        drops = np.cumsum([kind == "drop" for kind in trace.step_kinds])
        drops_before = np.concatenate([[0], drops[:-1]])
        excess = float(np.max(drops_before - 2.0 * t / 3.0))
        out.append(CheckResult(label, "drop budget D_t <= 2t/3", excess <= 0, excess, 0.0,
                               "max of D_t - 2t/3"))
    k = trace.column("k_t")
    kinds = trace.step_kinds
    steps_ok = all(k[i + 1] - k[i] == (kinds[i] != "drop") for i in range(len(k) - 1))
    out.append(CheckResult(label, "non-drop counter", steps_ok, float(k[-1]) if len(k) else 0.0,
                           float(len(k)), "final k_t vs rows"))
    if p_l is not None and not np.all(np.isnan(trace.column("w"))):
        v = pl_violation(trace, p_l)
        out.append(CheckResult(label, "h <= P_L sqrt(2w)", v <= SLACK, v, SLACK, "max violation"))
    return out


# --------------------------------------------------------------------------
# acceptance criteria

def check_geometric_interior() -> list[CheckResult]:
    prob, pc, trace = interior_run()
    w, t = trace.column("w"), trace.column("t")
    excess = float(np.max(w - w[0] * (1.0 - pc.rho) ** t))
    return [CheckResult(1, "geometric bound w_t <= w_0 (1-rho)^t", excess <= SLACK, excess, SLACK,
                        f"nu={pc.nu:.4f} rho={pc.rho:.3e} rows={len(trace)} "
                        f"w_last={w[-1]:.3e}")]


def check_geometric_vertex() -> list[CheckResult]:
    prob, pc, trace = vertex_run()
    w, t, k = trace.column("w"), trace.column("t"), trace.column("k_t")
    drops = t - k
    excess = float(np.max(w - w[0] * (1.0 - pc.rho) ** k))
    increase = float(np.max(np.diff(w))) if len(w) > 1 else 0.0
    k_short = float(np.max(t / 3.0 - k))
    drop_excess = float(np.max(drops - 2.0 * t / 3.0))
    detail = f"nu={pc.nu:.4f} rho={pc.rho:.3e} drops={trace.drop_count()} rows={len(trace)}"
    return [
        CheckResult(2, "geometric bound w_t <= w_0 (1-rho)^k(t)", excess <= SLACK, excess, SLACK,
                    detail),
        CheckResult(2, "k(t) >= t/3", k_short <= 0, k_short, 0.0, "max of t/3 - k(t)"),
        CheckResult(2, "drops <= 2t/3", drop_excess <= 0, drop_excess, 0.0, "max of D_t - 2t/3"),
        CheckResult(2, "w non-increasing", increase <= SLACK, increase, SLACK,
                    "max w_{t+1} - w_t"),
    ]


def check_sublinear() -> list[CheckResult]:
    prob, pc, trace = sublinear_run()
    w, k = trace.column("w"), trace.column("k_t")
    excess = float(np.max(w - pc.C_sub / (2.0 + k)))
    return [CheckResult(3, "sublinear bound w_t <= C_sub/(2+t)", excess <= SLACK, excess, SLACK,
                        f"nu={pc.nu:.3f} C_sub={pc.C_sub:.4g} rows={len(trace)}")]


def check_gap_calculus() -> list[CheckResult]:
    out = []
    for label, run in (("1", interior_run), ("2", vertex_run), ("3", sublinear_run)):
        prob, pc, trace = run()
        for res in trace_checks(trace, f"4/trace{label}", p_l=pc.P_L_bound):
            out.append(res)
    return out


def check_strongly_convex_set() -> list[CheckResult]:
    prob, pc, trace = ball_run()
    g = trace.column("gap_fw")
    t = trace.column("t")
    gamma = trace.column("gamma")
    dist = trace.column("fw_distance")
    linear = float(np.max(g - g[0] * (1.0 - pc.rho_ball) ** t))
    rec = g[1:] - (g[:-1] * (1.0 - gamma[:-1]) + gamma[:-1] ** 2 * dist[:-1] ** 2 * pc.C_delta / 2)
    lower = float(np.max(pc.beta * pc.delta / 8.0 * dist ** 2 - g))
    lip_bound = 4.0 * pc.L / (pc.delta * pc.beta)
    ratio = sampled_lipschitz_ratio(fw_corner_map(prob), prob.domain, 1000, make_rng(5))
    detail = f"delta={pc.delta:.4f} C_delta={pc.C_delta:.4f} rho={pc.rho_ball:.3e} rows={len(trace)}"
    return [
        CheckResult(5, "linear gap rate g_t <= g_0 (1-rho)^t", linear <= SLACK, linear, SLACK,
                    detail),
        CheckResult(5, "gap recursion", float(rec.max()) <= SLACK, float(rec.max()), SLACK,
                    "max violation"),
        CheckResult(5, "gap lower bound g >= (beta delta/8)|s-z|^2", lower <= SLACK, lower, SLACK,
                    "max violation"),
        CheckResult(5, "FW-corner Lipschitz ratio", ratio <= lip_bound, ratio, lip_bound,
                    "1000 sampled pairs"),
    ]


def check_fictitious_play() -> list[CheckResult]:
    game = MatrixGame.random(5, 7, make_rng(6))
    trace = run_spfw(game, game.domain, StepRule.harmonic(), eps=0.0, max_iters=1001,
                     keep_iterates=True, merits=False)
    fp = fictitious_play(game.M, 1000)
    diff = max(max(float(np.abs(z.x - fx).max()), float(np.abs(z.y - fy).max()))
               for z, (fx, fy) in zip(trace.iterates, fp))
    n = min(len(trace.iterates), len(fp))
    return [CheckResult(6, "SP-FW harmonic equals fictitious play", diff <= 1e-12 and n == 1001,
                        diff, 1e-12, f"{n - 1} rounds compared")]


def check_bilinear_trend(seeds=range(10), iters: int = 100_000) -> list[CheckResult]:
    worst, monotone, exponents = 0.0, True, []
    for seed in seeds:
        game = MatrixGame.random(3, 3, make_rng(100 + seed))
        trace = run_spfw(game, game.domain, StepRule.harmonic(), eps=0.0, max_iters=iters)
        best = np.minimum.accumulate(trace.column("h"))
        monotone &= bool(np.all(np.diff(best) <= 0))
        worst = max(worst, float(best[-1]))
        tail = np.arange(len(best) // 2, len(best))
        ok = best[tail] > 0
        if ok.sum() >= 2:
            exponents.append(np.polyfit(np.log(tail[ok]), np.log(best[tail][ok]), 1)[0])
    note = "min-h exponents " + (", ".join(f"{e:.2f}" for e in exponents) if exponents
                                 else "n/a (exact equilibria reached)")
    return [CheckResult(7, "min h <= 0.05 after 1e5 harmonic steps", worst <= 0.05, worst, 0.05,
                        note),
            CheckResult(7, "running min h non-increasing", monotone, float(monotone), 1.0)]


def check_heuristic() -> list[CheckResult]:
    prob = QuadBilinear.random(10, 1.0, make_rng(7), saddle="vertex")
    pc = problem_constants(prob, "polytope")
    trace = run_spafw(prob, prob.domain, StepRule.heuristic(pc.C_tilde), eps=0.0, max_iters=2000)
    g = trace.column("gap_fw")
    factor = float(g[0] / max(np.min(g), 1e-300))
    return [CheckResult(8, "heuristic rule: min-gap drop factor", pc.nu < 0 and factor >= 10.0,
                        factor, 10.0, f"nu={pc.nu:.3f} C_tilde={pc.C_tilde:.4g}")]


def check_oracles() -> list[CheckResult]:
    rng = make_rng(8)
    prob = QuadBilinear.random(2, 1.0, rng, saddle="interior")
    found = grid_saddle_search(prob, prob.domain, 1e-2)
    dist = max(float(np.linalg.norm(found.x - prob.x_star)),
               float(np.linalg.norm(found.y - prob.y_star)))
    out = [CheckResult(9, "grid saddle search distance", dist <= 2e-2, dist, 2e-2,
                       f"grid minimax gap {found.gap:.2e}")]
    families = {
        "quad-bilinear": QuadBilinear.random(6, 1.0, rng),
        "matrix-game": MatrixGame.random(4, 5, rng),
        "ball-game": BallGame.random(5, rng),
    }
    h = 1e-5
    for name, obj in families.items():
        worst = 0.0
        n = 0
        while n < 100:
            z = sample_pair(obj.domain, rng)
            try:
                fd = finite_diff_gradient(obj, z, h)
            except ValueError:
                continue            # too close to the boundary
            n += 1
            for num, ana in ((fd.x, obj.grad_x(z)), (fd.y, obj.grad_y(z))):
                worst = max(worst, float(np.linalg.norm(num - ana) / max(np.linalg.norm(ana), 1e-12)))
        out.append(CheckResult(9, f"finite differences ({name})", worst <= 1e-5, worst, 1e-5,
                               "max relative error over 100 points"))
    return out


DETERMINISM_CONFIG = """\
problem = quad-bilinear
dim = 6
mu = 10
saddle = vertex
algorithm = spafw
step_rule = adaptive
max_iters = 300
eps = 1e-12
seed = 11
"""


def check_determinism() -> list[CheckResult]:
    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "run.cfg")
        with open(cfg, "w") as fh:
            fh.write(DETERMINISM_CONFIG)
        blobs = []
        for i in range(2):
            out = os.path.join(tmp, f"trace{i}.csv")
            # separate interpreter processes, as two real invocations would be
            subprocess.run([sys.executable, "-m", "spfw.cli", "run", cfg, "--out", out],
                           check=False, capture_output=True)
            with open(out, "rb") as fh:
                blobs.append(fh.read())
    same = blobs[0] == blobs[1] and len(blobs[0]) > 0
    return [CheckResult(10, "byte-identical traces", same, float(len(blobs[0])),
                        float(len(blobs[1])), "bytes in each file")]


CHECKS = {
    "geometric-interior": check_geometric_interior,
    "geometric-vertex": check_geometric_vertex,
    "sublinear": check_sublinear,
    "gap-calculus": check_gap_calculus,
    "strongly-convex-set": check_strongly_convex_set,
    "fictitious-play": check_fictitious_play,
    "bilinear-trend": check_bilinear_trend,
    "heuristic": check_heuristic,
    "oracles": check_oracles,
    "determinism": check_determinism,
}


@contextmanager
def away_sign_error():
    """Mutation for sanity runs: pick the away atom with the wrong sign."""
    original = ActiveSet.away_atom

    def flipped(self, r):
        return original(self, -r)

    ActiveSet.away_atom = flipped
    clear_cache()
    try:
        yield
    finally:
        ActiveSet.away_atom = original
        clear_cache()


MUTATIONS = {"away-sign": away_sign_error}
