"""Command-line harness: ``run``, ``verify`` and ``ratefit``.

Run configurations are flat ``key = value`` files with ``#`` comments.
Exit codes for ``run``: 0 converged, 2 iteration budget exhausted, 1 error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass, fields

import numpy as np

from . import acceptance
from .constants import problem_constants
from .domains import PointPair
from .errors import InvalidArgumentError, SpfwError
from .objectives import BallGame, MatrixGame, QuadBilinear, merit_w
from .rng import make_rng
from .solver import ALGORITHMS, StepRule

PROBLEMS = ("quad-bilinear", "matrix-game", "ball-game")
DEFAULT_RULE = {"quad-bilinear": "adaptive", "matrix-game": "harmonic",
                "ball-game": "strongly-convex-set"}


class ConfigError(InvalidArgumentError):
    """Invalid or incompatible run configuration."""


@dataclass
class RunConfig:
    problem: str = ""
    dim: int = 10
    rows: int | None = None
    cols: int | None = None
    mu: float = 1.0
    matrix_scale: float | None = None
    matrix: str | None = None
    saddle: str = "interior"
    radius: float = 1.0
    grad_scale: float = 1.0
    algorithm: str = "spfw"
    step_rule: str | None = None
    nu: float | None = None
    C: float | None = None
    C_delta: float | None = None
    C_tilde: float | None = None
    delta_A: float | None = None
    delta_B: float | None = None
    eps: float = 1e-8
    max_iters: int = 1000
    seed: int = 0
    out: str | None = None


def _convert(name, raw, typ):
    base = typ.replace(" | None", "")
    try:
        if base == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if base == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {base}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines into a :class:`RunConfig`."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw, types[key])
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {', '.join(PROBLEMS)}, got {cfg.problem!r}")
    if cfg.algorithm not in (*ALGORITHMS, "fp"):
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")
    if cfg.algorithm == "fp" and cfg.problem != "matrix-game":
        raise ConfigError("fp (fictitious play) runs on matrix-game only")
    if cfg.algorithm in ("spafw", "sppfw") and cfg.problem == "ball-game":
        raise ConfigError(f"{cfg.algorithm} needs polytopes; ball-game domains are balls")
    if cfg.saddle not in ("interior", "vertex"):
        raise ConfigError(f"saddle must be interior or vertex, got {cfg.saddle!r}")
    if cfg.max_iters < 0 or cfg.seed < 0 or cfg.eps < 0:
        raise ConfigError("max_iters, seed and eps must be nonnegative")


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
        return np.array(rows, dtype=float)
    except ValueError:
        raise ConfigError(f"cannot parse matrix {text!r}; use rows separated by ';'") from None


def build_problem(cfg: RunConfig):
    rng = make_rng(cfg.seed)
    if cfg.problem == "quad-bilinear":
        scale = 0.1 if cfg.matrix_scale is None else cfg.matrix_scale
        if cfg.matrix is not None:
            M = _parse_matrix(cfg.matrix)
            d = M.shape[0]
            lo, hi = (0.25, 0.75) if cfg.saddle == "interior" else (0, 2)
            if cfg.saddle == "interior":
                xs, ys = rng.uniform(lo, hi, size=(2, d))
            else:
                xs, ys = rng.integers(lo, hi, size=(2, d)).astype(float)
            return QuadBilinear(cfg.mu, M, xs, ys)
        return QuadBilinear.random(cfg.dim, cfg.mu, rng, saddle=cfg.saddle, scale=scale)
    if cfg.problem == "matrix-game":
        if cfg.matrix is not None:
            M = _parse_matrix(cfg.matrix)
            if M.shape == (2, 2) and np.array_equal(M, [[1, -1], [-1, 1]]):
                return MatrixGame.matching_pennies()
            return MatrixGame(M)
        rows = cfg.rows or cfg.dim
        cols = cfg.cols or rows
        return MatrixGame.random(rows, cols, rng, 1.0 if cfg.matrix_scale is None else cfg.matrix_scale)
    scale = 0.1 if cfg.matrix_scale is None else cfg.matrix_scale
    return BallGame.random(cfg.dim, rng, grad_scale=cfg.grad_scale, matrix_scale=scale,
                           radius=cfg.radius)


def build_rule(cfg: RunConfig, pc) -> StepRule:
    kind = "harmonic" if cfg.algorithm == "fp" else (cfg.step_rule or DEFAULT_RULE[cfg.problem])
    if cfg.algorithm == "fp" and cfg.step_rule not in (None, "harmonic"):
        raise ConfigError("fp is SP-FW with the harmonic rule; other step rules do not apply")
    if kind == "adaptive":
        nu = cfg.nu if cfg.nu is not None else pc.nu
        C = cfg.C if cfg.C is not None else pc.C
        if nu is None or not nu > 0:
            raise ConfigError(f"adaptive step rule refused: nu={nu} (needs nu > 0); "
                              "use the heuristic, universal or harmonic rule instead")
        return StepRule.adaptive(nu, C)
    if kind == "heuristic":
        c_tilde = cfg.C_tilde if cfg.C_tilde is not None else pc.C_tilde
        if c_tilde is None:
            raise ConfigError("heuristic rule needs C_tilde (unavailable for this problem)")
        return StepRule.heuristic(c_tilde)
    if kind == "strongly-convex-set":
        c_delta = cfg.C_delta if cfg.C_delta is not None else pc.C_delta
        if c_delta is None:
            raise ConfigError("strongly-convex-set rule needs C_delta (unavailable for this problem)")
        return StepRule.strongly_convex_set(c_delta)
    if kind in ("universal", "harmonic"):
        return StepRule(kind)
    raise ConfigError(f"unknown step rule {kind!r}")


def execute(cfg: RunConfig):
    """Build the problem, run the solver and return ``(trace, header)``."""
    prob = build_problem(cfg)
    pd = prob.domain
    z0 = PointPair(pd.x_domain.linmin(np.zeros(pd.x_domain.dim)),
                   pd.y_domain.linmin(np.zeros(pd.y_domain.dim)))
    case = "polytope" if cfg.algorithm in ("spafw", "sppfw") else "interior"
    widths = None
    if cfg.delta_A is not None or cfg.delta_B is not None:
        widths = (cfg.delta_A if cfg.delta_A is not None else pd.x_domain.pyramidal_width,
                  cfg.delta_B if cfg.delta_B is not None else pd.y_domain.pyramidal_width)
    w0 = merit_w(prob, z0) if prob.known_saddle is not None else None
    pc = problem_constants(prob, case, w0=w0, pyramidal_widths=widths)
    rule = build_rule(cfg, pc)
    algorithm = "spfw" if cfg.algorithm == "fp" else cfg.algorithm
    trace = ALGORITHMS[algorithm](prob, pd, rule, eps=cfg.eps, max_iters=cfg.max_iters, z0=z0)
    header = {"problem": cfg.problem, "algorithm": cfg.algorithm, "step_rule": rule.kind,
              "seed": cfg.seed, "eps": cfg.eps, "max_iters": cfg.max_iters, "case": case,
              "w0": w0}
    if rule.kind == "adaptive":
        header.update(rule_nu=rule.nu, rule_C=rule.C)
    header.update(pc.as_dict())
    header["converged"] = trace.converged
    return trace, header


def cmd_run(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    for flag, key in (("seed", "seed"), ("iters", "max_iters"), ("eps", "eps"), ("out", "out")):
        value = getattr(args, flag)
        if value is not None:
            setattr(cfg, key, value)
    validate_config(cfg)
    trace, header = execute(cfg)
    text = trace.to_csv(cfg.out, header)
    if cfg.out is None:
        sys.stdout.write(text)
    status = "converged" if trace.converged else "budget exhausted"
    last = trace.records[-1].gaps.g_fw if trace.records else float("nan")
    print(f"{status} after {len(trace)} rows, last gap {last:.3e}", file=sys.stderr)
    return 0 if trace.converged else 2


# --------------------------------------------------------------------------
# verify

def parse_suite(path: str):
    """Return ``(checks, run_files, mutation)`` from a suite file.

    Lines are ``check = <name>``, ``run = <config file>`` (relative to the
    suite file) or ``mutation = <name>``; ``default`` names the built-in suite.
    """
    if path == "default":
        return list(acceptance.CHECKS), [], None
    checks, runs, mutation = [], [], None
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key == "check":
                if value == "all":
                    checks.extend(acceptance.CHECKS)
                elif value in acceptance.CHECKS:
                    checks.append(value)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown check {value!r}")
            elif key == "run":
                runs.append(os.path.join(base, value))
            elif key == "mutation":
                if value not in acceptance.MUTATIONS:
                    raise ConfigError(f"{path}:{lineno}: unknown mutation {value!r}")
                mutation = value
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if not checks and not runs:
        raise ConfigError(f"suite {path} lists no checks and no runs")
    return checks, runs, mutation


def run_suite(path: str, stream=None) -> list:
    stream = sys.stdout if stream is None else stream
    checks, runs, mutation = parse_suite(path)
    ctx = acceptance.MUTATIONS[mutation]() if mutation else nullcontext()
    results = []
    with ctx:
        for name in checks:
            for res in acceptance.CHECKS[name]():
                results.append(res)
                print(res.line(), file=stream, flush=True)
        for cfg_path in runs:
            with open(cfg_path) as fh:
                cfg = parse_config(fh.read())
            cfg.out = None
            trace, header = execute(cfg)
            label = os.path.basename(cfg_path)
            for res in acceptance.trace_checks(trace, label, p_l=header.get("P_L_bound")):
                results.append(res)
                print(res.line(), file=stream, flush=True)
    return results


def cmd_verify(args) -> int:
    results = run_suite(args.suite)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


# --------------------------------------------------------------------------
# ratefit

def read_trace(path: str):
    """Return ``(header, columns)`` of a trace CSV; missing values become ``nan``."""
    header, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            elif line.strip():
                lines.append(line.rstrip("\n").split(","))
    if not lines:
        raise InvalidArgumentError(f"{path} has no column row")
    names, rows = lines[0], lines[1:]
    cols = {}
    for j, name in enumerate(names):
        if name == "step_kind":
            cols[name] = [r[j] for r in rows]
        else:
            try:
                cols[name] = np.array([float(r[j]) if r[j] else np.nan for r in rows])
            except (ValueError, IndexError):
                raise InvalidArgumentError(f"{path}: column {name!r} is not numeric") from None
    return header, cols


def _fit(x, y):
    ok = np.isfinite(x) & np.isfinite(y) & (y > 0)
    if ok.sum() < 2 or np.ptp(x[ok]) == 0:
        return None
    return float(np.polyfit(x[ok], np.log(y[ok]), 1)[0])


def ratefit(path: str) -> dict:
    """Least-squares rates over the tail half of a trace.

    ``slope_w`` fits ``log w`` against ``k_t``; ``exponent_h`` fits ``log h``
    against ``log t``.  ``theory_log_rate`` is ``log(1 - rho)`` from the header.
    """
    header, cols = read_trace(path)
    n = len(cols.get("t", []))
    if n < 10:
        raise InvalidArgumentError(f"ratefit needs at least 10 rows, trace has {n}")
    tail = slice(n // 2, n)
    t = cols["t"][tail]
    k = cols.get("k_t", cols["t"])[tail]
    slope = _fit(k, cols["w"][tail]) if "w" in cols else None
    pos = t > 0
    exponent = _fit(np.log(t[pos]), cols["h"][tail][pos]) if "h" in cols else None
    rho = header.get("rho")
    theory = math.log1p(-float(rho)) if rho else None
    report = {"rows": n, "slope_w": slope, "theory_log_rate": theory, "exponent_h": exponent}
    report["at_least_theory"] = (None if slope is None or theory is None
                                 else slope <= theory)
    return report


def cmd_ratefit(args) -> int:
    report = ratefit(args.trace)
    for key, value in report.items():
        print(f"{key}={'' if value is None else value}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spfw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one configuration and write its trace")
    p.add_argument("config", help="key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--iters", type=int, help="override max_iters")
    p.add_argument("--eps", type=float, help="override the FW-gap tolerance")
    p.add_argument("--out", help="trace CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify", help="run an acceptance suite ('default' for the built-in one)")
    p.add_argument("suite", help="suite file, or 'default'")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("ratefit", help="fit convergence rates to a trace")
    p.add_argument("trace", help="trace CSV written by run")
    p.set_defaults(func=cmd_ratefit)
    return parser


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for an
        # exhausted iteration budget, so report usage errors as 1
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (SpfwError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
