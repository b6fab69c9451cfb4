"""Saddle-point Frank-Wolfe solvers: SP-FW, away-step SP-AFW and pairwise SP-PFW.

All three share one loop.  At iterate ``z`` the VIP field ``r = F(z)`` is fed
to the product LMO to get the FW corner ``s``; the away variants also pick
the away corner ``v`` from the per-block active sets.  The loop stops when
the FW gap drops below ``eps`` or after ``max_iters`` steps.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import PointPair, ProductDomain, linmin_product
from .errors import (InvalidArgumentError, InvariantViolationError, NumericalFailureError,
                     UnsupportedError)
from .objectives import SaddleObjective, merit_w, suboptimality_h, vip_field

STEP_KINDS = ("fw", "away", "pairwise", "drop", "stop")
CSV_COLUMNS = ("t", "k_t", "step_kind", "gamma", "gamma_max", "gap_fw", "gap_away", "gap_pfw",
               "w", "h", "active_x", "active_y")

WEIGHT_TOL = 1e-10
RECONSTRUCT_TOL = 1e-8
RENORMALIZE_EVERY = 100


# --------------------------------------------------------------------------
# step-size rules

@dataclass(frozen=True)
class StepRule:
    """A step-size rule; build it with the classmethods."""

    kind: str
    nu: float | None = None
    C: float | None = None
    C_delta: float | None = None
    C_tilde: float | None = None

    def __post_init__(self):
        needs = {"adaptive": ("nu", "C"), "universal": (), "harmonic": (),
                 "strongly-convex-set": ("C_delta",), "heuristic": ("C_tilde",)}
        if self.kind not in needs:
            raise InvalidArgumentError(f"unknown step rule {self.kind!r}")
        for name in needs[self.kind]:
            value = getattr(self, name)
            if value is None or not math.isfinite(value) or not value > 0:
                raise InvalidArgumentError(
                    f"{self.kind} step rule needs {name} > 0, got {name}={value}")

    @classmethod
    def adaptive(cls, nu: float, C: float) -> "StepRule":
        return cls("adaptive", nu=nu, C=C)

    @classmethod
    def universal(cls) -> "StepRule":
        return cls("universal")

    @classmethod
    def harmonic(cls) -> "StepRule":
        return cls("harmonic")

    @classmethod
    def strongly_convex_set(cls, C_delta: float) -> "StepRule":
        return cls("strongly-convex-set", C_delta=C_delta)

    @classmethod
    def heuristic(cls, C_tilde: float) -> "StepRule":
        return cls("heuristic", C_tilde=C_tilde)


def step_size(rule: StepRule, g: float | None = None, g_pfw: float | None = None,
              k_t: int | None = None, t: int | None = None, dist_sq: float | None = None,
              gamma_max: float = 1.0) -> float:
    """Step length in ``[0, gamma_max]``.

    ``adaptive`` and ``heuristic`` use ``g_pfw`` when given (away and pairwise
    variants) and ``g`` otherwise.  ``strongly-convex-set`` uses ``g`` and
    ``dist_sq``; ``universal`` uses ``k_t`` and ``harmonic`` uses ``t``.
    """
    def need(name, value):
        if value is None:
            raise InvalidArgumentError(f"{rule.kind} step rule needs {name}")
        return value

    if rule.kind == "adaptive":
        gap = g_pfw if g_pfw is not None else need("g", g)
        raw = rule.nu / (2.0 * rule.C) * gap
    elif rule.kind == "heuristic":
        gap = g_pfw if g_pfw is not None else need("g", g)
        raw = gap / rule.C_tilde
    elif rule.kind == "universal":
        raw = 2.0 / (2.0 + need("k_t", k_t))
    elif rule.kind == "harmonic":
        raw = 1.0 / (1.0 + need("t", t))
    else:
        gap, dsq = need("g", g), need("dist_sq", dist_sq)
        raw = 1.0 if dsq <= 0 else gap / (dsq * rule.C_delta)
    cap = gamma_max
    if rule.kind == "strongly-convex-set":
        cap = min(cap, 1.0)     # longer steps may leave the set
    return float(min(cap, max(raw, 0.0)))


# --------------------------------------------------------------------------
# active sets

class ActiveSet:
    """Atoms (vertices) with positive weights for one block.

    Atoms are identified by their exact coordinates; LMOs return canonical
    vertices so no tolerance is needed.
    """

    def __init__(self, vertex=None):
        self.atoms: dict[bytes, np.ndarray] = {}
        self.weights: dict[bytes, float] = {}
        if vertex is not None:
            self.add(np.asarray(vertex, dtype=float), 1.0)

    def __len__(self):
        return len(self.weights)

    @staticmethod
    def key(v: np.ndarray) -> bytes:
        # +0.0 so that -0.0 and 0.0 map to the same atom
        return (np.asarray(v, dtype=float) + 0.0).tobytes()

    def add(self, v: np.ndarray, weight: float):
        k = self.key(v)
        if k not in self.atoms:
            self.atoms[k] = np.array(v, dtype=float)
            self.weights[k] = 0.0
        self.weights[k] += weight

    def weight(self, v: np.ndarray) -> float:
        return self.weights.get(self.key(v), 0.0)

    def away_atom(self, r: np.ndarray) -> np.ndarray:
        """Atom maximizing ``<r, v>``; the first inserted wins ties."""
        best, best_val = None, -math.inf
        for k, v in self.atoms.items():
            val = float(v @ r)
            if val > best_val:
                best, best_val = k, val
        return self.atoms[best]

    def scale(self, factor: float):
        for k in self.weights:
            self.weights[k] *= factor

    def evict(self, v: np.ndarray):
        k = self.key(v)
        self.atoms.pop(k, None)
        self.weights.pop(k, None)

    def prune(self):
        for k in [k for k, a in self.weights.items() if a <= 0.0]:
            del self.weights[k]
            del self.atoms[k]

    def total(self) -> float:
        return math.fsum(self.weights.values())

    def renormalize(self):
        total = self.total()
        for k in self.weights:
            self.weights[k] /= total

    def reconstruct(self) -> np.ndarray:
        return sum(a * self.atoms[k] for k, a in self.weights.items())

    def fw_update(self, s: np.ndarray, gamma: float):
        if gamma >= 1.0:
            self.atoms.clear()
            self.weights.clear()
            self.add(s, 1.0)
            return
        if gamma <= 0.0:
            return      # a zero-weight atom would later pose as an away corner
        self.scale(1.0 - gamma)
        self.add(s, gamma)
        self.prune()    # tiny weights can underflow to zero

    def away_update(self, v: np.ndarray, gamma: float, drop: bool):
        if len(self) == 1:
            return      # the iterate is the atom itself; moving away is a no-op
        self.scale(1.0 + gamma)
        k = self.key(v)
        if drop:
            self.weights[k] = 0.0
        else:
            self.weights[k] -= gamma
        self.prune()
        # the weights sum to 1 in exact arithmetic; a large gamma magnifies
        # rounding, so restore the total explicitly
        self.renormalize()

    def pairwise_update(self, s: np.ndarray, v: np.ndarray, gamma: float, drop: bool):
        k = self.key(v)
        if drop:
            self.weights[k] = 0.0
        else:
            self.weights[k] -= gamma
        self.add(s, gamma)
        self.prune()
        if drop:
            self.renormalize()


@dataclass
class ActiveSetPair:
    x: ActiveSet
    y: ActiveSet

    @classmethod
    def singleton(cls, z: PointPair) -> "ActiveSetPair":
        return cls(ActiveSet(z.x), ActiveSet(z.y))

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.x), len(self.y)

    def check(self, z: PointPair, tol: float = RECONSTRUCT_TOL):
        for name, block, point in (("x", self.x, z.x), ("y", self.y, z.y)):
            if len(block) == 0:
                raise InvariantViolationError(f"active set for {name} is empty")
            if abs(block.total() - 1.0) > WEIGHT_TOL:
                block.renormalize()
            err = float(np.max(np.abs(block.reconstruct() - point)))
            if err > tol:
                raise InvariantViolationError(
                    f"active set for {name} reconstructs the iterate with error {err:.3g}")


# --------------------------------------------------------------------------
# gaps

@dataclass
class GapReport:
    g_x: float
    g_y: float
    g_fw: float
    g_away: float | None = None
    g_pfw: float | None = None
    w: float | None = None
    h: float | None = None


def _merits(obj, z, want_w, want_h):
    w = merit_w(obj, z) if want_w else None
    h = suboptimality_h(obj, z) if want_h else None
    return w, h


def _supports_h(obj) -> bool:
    z = _any_point(obj.domain)
    try:
        obj.best_response_x(z.y)
        obj.best_response_y(z.x)
    except UnsupportedError:
        return False
    return True


def _any_point(pd: ProductDomain) -> PointPair:
    return linmin_product(pd, PointPair(np.zeros(pd.x_domain.dim), np.zeros(pd.y_domain.dim)))


def compute_gaps(obj: SaddleObjective, pd: ProductDomain, z: PointPair,
                 active: ActiveSetPair | None = None, merits: bool = True):
    """Gap certificate at ``z``.

    Returns ``(report, s, v, r)``: the gaps, the FW corner, the away corner
    (``None`` without an active set) and the field ``r = F(z)``.
    """
    r = vip_field(obj, z)
    # r comes from the objective, not the caller; non-finite entries surface
    # as non-finite gaps, so skip the public argument validation
    s = PointPair(pd.x_domain._linmin(r.x), pd.y_domain._linmin(r.y))
    g_x = float((z.x - s.x) @ r.x)
    g_y = float((z.y - s.y) @ r.y)
    report = GapReport(g_x=g_x, g_y=g_y, g_fw=g_x + g_y)
    v = None
    if active is not None:
        active.check(z)
        v = PointPair(active.x.away_atom(r.x), active.y.away_atom(r.y))
        report.g_away = float((v.x - z.x) @ r.x + (v.y - z.y) @ r.y)
        report.g_pfw = report.g_fw + report.g_away
    if merits:
        report.w, report.h = _merits(obj, z, obj.known_saddle is not None, _supports_h(obj))
    return report, s, v, r


# --------------------------------------------------------------------------
# traces

@dataclass
class IterationRecord:
    t: int
    k_t: int
    step_kind: str
    gamma: float
    gamma_max: float | None
    gaps: GapReport
    active_sizes: tuple[int | None, int | None]
    fw_distance: float          # |s_x - x| + |s_y - y|


@dataclass
class SolverTrace:
    algorithm: str
    rule: StepRule
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    z: PointPair | None = None
    iterates: list[PointPair] | None = None

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Numeric column by CSV name (``nan`` for missing values)."""
        def get(rec):
            if name in ("t", "k_t", "gamma", "gamma_max", "fw_distance"):
                return getattr(rec, name)
            if name in ("gap_fw", "gap_away", "gap_pfw"):
                return getattr(rec.gaps, {"gap_fw": "g_fw", "gap_away": "g_away",
                                          "gap_pfw": "g_pfw"}[name])
            if name in ("g_x", "g_y", "w", "h"):
                return getattr(rec.gaps, name)
            if name == "active_x":
                return rec.active_sizes[0]
            if name == "active_y":
                return rec.active_sizes[1]
            raise KeyError(name)
        return np.array([np.nan if get(r) is None else get(r) for r in self.records], dtype=float)

    @property
    def step_kinds(self) -> list[str]:
        return [r.step_kind for r in self.records]

    def drop_count(self) -> int:
        return sum(r.step_kind == "drop" for r in self.records)

    def to_csv(self, target=None, header: dict | None = None) -> str:
        """Write the trace as CSV (17 significant digits) and return the text.

        ``target`` is a path or an open text stream.
        ``header`` entries become ``# key=value`` lines before the column row.
        """
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}={format_value(value)}\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for rec in self.records:
            g = rec.gaps
            row = (rec.t, rec.k_t, rec.step_kind, rec.gamma, rec.gamma_max, g.g_fw, g.g_away,
                   g.g_pfw, g.w, g.h, rec.active_sizes[0], rec.active_sizes[1])
            buf.write(",".join(format_value(v) for v in row) + "\n")
        text = buf.getvalue()
        if hasattr(target, "write"):
            target.write(text)
        elif target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


# --------------------------------------------------------------------------
# solver loop

def _check_run_args(rule, eps, max_iters):
    if not isinstance(rule, StepRule):
        raise InvalidArgumentError("rule must be a StepRule")
    if not eps >= 0:
        raise InvalidArgumentError(f"eps must be nonnegative, got {eps}")
    if int(max_iters) != max_iters or max_iters < 0:
        raise InvalidArgumentError(f"max_iters must be a nonnegative integer, got {max_iters}")


def _block_dist(a: PointPair, b: PointPair) -> float:
    dx, dy = a.x - b.x, a.y - b.y
    return math.sqrt(dx @ dx) + math.sqrt(dy @ dy)


def away_caps(alpha_x: float, alpha_y: float) -> tuple[float, float]:
    """Per-block largest away step keeping weights nonnegative: ``a / (1 - a)``.

    A block whose away atom carries all the weight imposes no limit.
    """
    return tuple(math.inf if a >= 1.0 else a / (1.0 - a) for a in (alpha_x, alpha_y))


def pairwise_caps(alpha_x: float, alpha_y: float) -> tuple[float, float]:
    """Per-block largest pairwise step: the weight of the away atom."""
    return float(alpha_x), float(alpha_y)


def _run(obj, pd, rule, eps, max_iters, variant, z0, keep_iterates, merits):
    _check_run_args(rule, eps, max_iters)
    if variant != "fw" and not pd.polytopal:
        raise UnsupportedError("away and pairwise steps need polytopal domains in both blocks")
    if variant != "fw" and rule.kind == "strongly-convex-set":
        raise InvalidArgumentError("the strongly-convex-set rule is defined for SP-FW only")
    if z0 is None:
        z0 = _any_point(pd)
    z = PointPair(np.array(z0[0], dtype=float), np.array(z0[1], dtype=float))
    if not pd.contains(z):
        raise InvalidArgumentError("starting point is outside the domain")
    active = ActiveSetPair.singleton(z) if variant != "fw" else None

    want_w = merits and obj.known_saddle is not None
    want_h = merits and _supports_h(obj)
    name = {"fw": "spfw", "away": "spafw", "pairwise": "sppfw"}[variant]
    trace = SolverTrace(name, rule, z=z, iterates=[] if keep_iterates else None)
    k = 0
    for t in range(int(max_iters)):
        report, s, v, r = compute_gaps(obj, pd, z, active, merits=False)
        report.w, report.h = _merits(obj, z, want_w, want_h)
        sizes = active.sizes if active is not None else (None, None)
        if keep_iterates:
            trace.iterates.append(z.copy())
        values = [report.g_fw, report.w, report.h, report.g_away]
        if not all(math.isfinite(x) for x in values if x is not None):
            trace.z = z
            raise NumericalFailureError(f"non-finite gap or merit at t={t}", trace)
        fw_dist = _block_dist(s, z)

        if report.g_fw <= eps:
            trace.records.append(IterationRecord(t, k, "stop", 0.0, None, report, sizes, fw_dist))
            trace.converged = True
            break

        caps = None
        if variant == "fw":
            kind, gamma_max = "fw", 1.0
        elif variant == "away":
            if report.g_fw >= report.g_away:
                kind, gamma_max = "fw", 1.0
            else:
                kind = "away"
                caps = away_caps(active.x.weight(v.x), active.y.weight(v.y))
                gamma_max = min(caps)
        else:
            kind = "pairwise"
            caps = pairwise_caps(active.x.weight(v.x), active.y.weight(v.y))
            gamma_max = min(caps)

        gamma = step_size(rule, g=report.g_fw,
                          g_pfw=report.g_pfw if variant != "fw" else None,
                          k_t=k, t=t, dist_sq=fw_dist ** 2, gamma_max=gamma_max)
        if kind in ("away", "pairwise") and gamma >= gamma_max and gamma_max < 1.0:
            kind = "drop"
        trace.records.append(IterationRecord(t, k, kind, gamma, gamma_max, report, sizes, fw_dist))

        if kind == "fw":
            z = PointPair((1.0 - gamma) * z.x + gamma * s.x, (1.0 - gamma) * z.y + gamma * s.y)
            if gamma >= 1.0:
                z = s.copy()
            if active is not None:
                active.x.fw_update(s.x, gamma)
                active.y.fw_update(s.y, gamma)
        elif variant == "away":
            z = PointPair((1.0 + gamma) * z.x - gamma * v.x, (1.0 + gamma) * z.y - gamma * v.y)
            active.x.away_update(v.x, gamma, drop=gamma >= caps[0])
            active.y.away_update(v.y, gamma, drop=gamma >= caps[1])
            if kind == "drop":
                z = PointPair(active.x.reconstruct(), active.y.reconstruct())
        else:
            z = PointPair(z.x + gamma * (s.x - v.x), z.y + gamma * (s.y - v.y))
            active.x.pairwise_update(s.x, v.x, gamma, drop=gamma >= caps[0])
            active.y.pairwise_update(s.y, v.y, gamma, drop=gamma >= caps[1])
        if kind != "drop":
            k += 1
        if active is not None and (t + 1) % RENORMALIZE_EVERY == 0:
            active.x.renormalize()
            active.y.renormalize()
        if not pd.contains(z):
            trace.z = z
            raise InvariantViolationError(f"iterate left the domain at t={t + 1}")
    trace.z = z
    return trace


def run_spfw(obj: SaddleObjective, pd: ProductDomain, rule: StepRule, eps: float = 1e-8,
             max_iters: int = 1000, z0: PointPair | None = None, keep_iterates: bool = False,
             merits: bool = True) -> SolverTrace:
    """SP-FW: ``z <- (1 - gamma) z + gamma s``.

    Starts at ``z0`` (default: the LMO tie-break vertex pair).  Merit values
    ``w`` and ``h`` are recorded when the objective supports them.
    """
    return _run(obj, pd, rule, eps, max_iters, "fw", z0, keep_iterates, merits)


def run_spafw(obj: SaddleObjective, pd: ProductDomain, rule: StepRule, eps: float = 1e-8,
              max_iters: int = 1000, z0: PointPair | None = None, keep_iterates: bool = False,
              merits: bool = True) -> SolverTrace:
    """SP-AFW: FW or away step, whichever has the larger linearized decrease.

    ``z0`` must be a vertex pair; it seeds singleton active sets.  With the
    adaptive rule the step uses the pairwise gap, so ``rule.nu`` should be the
    polytope-case constant.
    """
    return _run(obj, pd, rule, eps, max_iters, "away", z0, keep_iterates, merits)


def run_sppfw(obj: SaddleObjective, pd: ProductDomain, rule: StepRule, eps: float = 1e-8,
              max_iters: int = 1000, z0: PointPair | None = None, keep_iterates: bool = False,
              merits: bool = True) -> SolverTrace:
    """SP-PFW: move weight from the away corner to the FW corner in each block."""
    return _run(obj, pd, rule, eps, max_iters, "pairwise", z0, keep_iterates, merits)


ALGORITHMS = {"spfw": run_spfw, "spafw": run_spafw, "sppfw": run_sppfw}
