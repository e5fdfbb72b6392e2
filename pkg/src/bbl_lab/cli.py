"""Command-line front end: set/density literals, experiment dispatch, and
deterministic JSON/CSV/SVG artifacts.

Exit codes: 0 success, 1 usage or domain error, 2 an inequality check failed
beyond its tolerance (regression signal).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bbl, finsler, gap as gapmod, ot, sets
from .modelspace import ModelSpace
from .pmeans import DomainError, Exponent

__all__ = ["RunConfig", "run", "main", "dumps17"]

_SCHEMA = "bbl-lab/1"


# -- deterministic serialization ---------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps17(obj) -> str:
    """JSON text with floats at 17 significant digits and sorted keys, so
    identical configurations produce byte-identical artifacts."""
    if isinstance(obj, dict):
        items = [f'"{k}": {dumps17(obj[k])}' for k in sorted(obj)]
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        return "[" + ", ".join(dumps17(v) for v in seq) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(obj)


def write_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(dumps17(obj) + "\n")


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def parse_exponent(text: str) -> Exponent:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return Exponent.plus_inf()
    if t in ("-inf", "-infinity"):
        return Exponent.minus_inf()
    if "/" in t:
        return Exponent.of(Fraction(t))
    try:
        return Exponent.of(Fraction(t))  # integers stay exact
    except ValueError:
        return Exponent.of(float(t))


def parse_angle(text: str) -> float:
    t = text.strip().lower()
    if t.endswith("deg"):
        return math.radians(float(t[:-3]))
    if t.endswith("rad"):
        return float(t[:-3])
    return float(t)


def _space_from_args(kind: str, k: float, n: int) -> ModelSpace:
    if kind == "euclidean":
        return ModelSpace.euclidean(n)
    if kind == "sphere":
        return ModelSpace.sphere(n, k if k > 0 else 1.0)
    if kind == "hyperbolic":
        return ModelSpace.hyperbolic(n, k if k < 0 else -1.0)
    raise DomainError(f"unknown space kind {kind!r}")


def parse_set_literal(text: str, space: ModelSpace, grid: sets.GridGeometry | None):
    """box:x0,y0,x1,y1 / disk:cx,cy,r / ball:c1,c2,r / file:path."""
    kind, _, rest = text.partition(":")
    vals = [float(v) for v in rest.split(",")] if kind != "file" else []
    if kind == "file":
        return sets.load_grid_set(rest)
    if grid is None:
        raise DomainError("set literals need a grid (--grid-h and extents)")
    if kind == "box":
        m = len(vals) // 2
        return sets.DiscreteSet.euclidean_box(grid, vals[:m], vals[m:])
    if kind == "disk":
        cx, cy, r = vals
        return sets.DiscreteSet.from_predicate(
            grid, lambda p: (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2 <= r * r
        )
    if kind == "ball":
        c1, c2, r = vals
        if space.kind == "sphere":
            center = space.sphere_point(c1, c2)
        elif space.kind == "hyperbolic":
            center = space.hyperbolic_point(c1, c2)
        else:
            center = np.array([c1, c2])
        return sets.DiscreteSet.geodesic_ball(grid, center, r)
    raise DomainError(f"unknown set literal {text!r}")


def _euclidean_grid_for(literals: list[str], h: float, n: int) -> sets.GridGeometry:
    """Common grid covering all euclidean literals with a margin."""
    los, his = [], []
    for text in literals:
        kind, _, rest = text.partition(":")
        vals = [float(v) for v in rest.split(",")]
        if kind == "box":
            m = len(vals) // 2
            los.append(np.asarray(vals[:m]))
            his.append(np.asarray(vals[m:]))
        elif kind == "disk":
            cx, cy, r = vals
            los.append(np.array([cx - r, cy - r]))
            his.append(np.array([cx + r, cy + r]))
        else:
            raise DomainError(f"cannot infer a grid from literal {text!r}")
    lo = np.min(los, axis=0)
    hi = np.max(his, axis=0)
    span = hi - lo
    return sets.GridGeometry.euclidean_box(n, lo - 0.1 * span - 2 * h, hi + 0.1 * span + 2 * h, h)


@dataclass
class RunConfig:
    """Parsed invocation: command path, parameters, outputs and the seed."""

    command: str
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        for key, value in self.params.items():
            if key.endswith("_file") and value and not Path(value).exists():
                raise DomainError(f"input file does not exist: {value}")


# -- command implementations -----------------------------------------------


def _cmd_gap_sweep(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    samples = cfg.params["samples"]
    rows = []
    violations = 0
    n_choices = (1, 2, 3, 5)
    s_choices = np.arange(0.1, 0.95, 0.1)
    for _ in range(samples):
        n = int(rng.choice(n_choices))
        p_pool = [-1.0 / n, -1.0 / (2 * n), -1e-3, 0.0, 1e-3, 0.5, 1.0, 3.0, math.inf]
        p_raw = p_pool[int(rng.integers(len(p_pool)))]
        p = Exponent.lower(n) if p_raw == -1.0 / n else Exponent.of(p_raw)
        s = float(rng.choice(s_choices))
        a, b, c, d = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), 4))
        gi = gapmod.GapInput(s, p, n, a, b, c, d)
        val = gapmod.gap(gi)
        okay, slack = gapmod.quantitative_holder_check(gi)
        violations += not okay
        rows.append([s, float(p), n, a, b, c, d, val, slack, int(okay)])
    if "csv" in cfg.outputs:
        write_csv(
            cfg.outputs["csv"],
            ["s", "p", "n", "a", "b", "c", "d", "gap", "slack", "pass"],
            rows,
        )
    print(f"gap sweep: {samples} samples, {violations} violations")
    return 2 if violations else 0


def _load_cloud(path: str) -> ot.WeightedCloud:
    data = json.loads(Path(path).read_text())
    sp = data["space"]
    space = ModelSpace(sp["kind"], int(sp["n"]), float(sp["k"]))
    return ot.WeightedCloud(space, np.asarray(data["points"]), np.asarray(data["masses"]))


def _cmd_ot_solve(cfg: RunConfig) -> int:
    mu = _load_cloud(cfg.params["mu_file"])
    nu = _load_cloud(cfg.params["nu_file"])
    if cfg.params["exact"]:
        plan = ot.solve_exact(mu, nu)
        report = {"solver": "exact"}
    else:
        plan, rep = ot.solve_entropic(mu, nu, cfg.params["epsilon"])
        report = {
            "solver": "entropic",
            "epsilon": rep.epsilon,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "marginal_violation": rep.marginal_violation,
        }
    payload = plan.to_json()
    payload.update(report)
    out = cfg.outputs.get("json")
    if out:
        write_json(out, payload)
    print(f"ot solve: cost {plan.cost:.17g}, {len(plan.mass)} couplings")
    return 0


def _bbl_inputs(cfg: RunConfig):
    p = cfg.params
    space = _space_from_args(p["space"], p["k"], p["n"])
    if p["A"].startswith("file:") and p["B"].startswith("file:"):
        A = sets.load_grid_set(p["A"].partition(":")[2])
        B = sets.load_grid_set(p["B"].partition(":")[2])
        return A.space, A.grid, A, B
    if space.kind == "euclidean":
        grid = _euclidean_grid_for([p["A"], p["B"]], p["grid_h"], p["n"])
    elif space.kind == "sphere":
        grid = sets.GridGeometry.sphere_latlon(space.k, p["grid_h"])
    else:
        grid = sets.GridGeometry.hyperbolic_polar(space.k, p["r_max"], p["grid_h"])
    A = parse_set_literal(p["A"], space, grid)
    B = parse_set_literal(p["B"], space, grid)
    return space, grid, A, B


def _cmd_bbl_bm(cfg: RunConfig) -> int:
    p = cfg.params
    A = _body_literal(p["A"])
    B = _body_literal(p["B"])
    rep = bbl.quantitative_bm(A, B, p["s"], p["p"])
    payload = {
        "schema": _SCHEMA,
        "command": "bbl bm",
        "deficit": rep.deficit,
        "bound": rep.bound,
        "closed_form_bound": rep.closed_form_bound,
        "discretization_error": rep.discretization_error,
        "ok": rep.ok,
    }
    if "json" in cfg.outputs:
        write_json(cfg.outputs["json"], payload)
    print(f"bm: deficit {rep.deficit:.17g} bound {rep.bound:.17g} ok {rep.ok}")
    return 0 if rep.ok else 2


def _body_literal(text: str):
    kind, _, rest = text.partition(":")
    vals = [float(v) for v in rest.split(",")]
    if kind == "box":
        m = len(vals) // 2
        return bbl.Box(vals[:m], vals[m:])
    if kind == "disk":
        cx, cy, r = vals
        th = 2 * math.pi * np.arange(256) / 256
        return finsler.Polygon(np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=-1))
    raise DomainError(f"bm expects box:... or disk:... literals, got {text!r}")


def _cmd_bbl_distorted(cfg: RunConfig) -> int:
    space, grid, A, B = _bbl_inputs(cfg)
    rep = bbl.distorted_bm(A, B, cfg.params["s"])
    payload = {
        "schema": _SCHEMA,
        "command": "bbl distorted-bm",
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "deficit": rep.deficit,
        "tol": rep.tol,
        "theta": rep.theta,
        "void": rep.void,
        "ok": rep.ok,
    }
    if "json" in cfg.outputs:
        write_json(cfg.outputs["json"], payload)
    if rep.void:
        print("distorted-bm: inequality void (infinite distortion coefficient)")
        return 0
    print(f"distorted-bm: deficit {rep.deficit:.17g} tol {rep.tol:.17g} ok {rep.ok}")
    return 0 if rep.ok else 2


def _densities_from_sets(A, B):
    f = bbl.GridDensity(A.grid, A.mask.astype(float))
    g = bbl.GridDensity(B.grid, B.mask.astype(float))
    return f, g


def _plan_for(f, g, exact: bool, epsilon: float):
    if exact:
        return ot.solve_exact(f.cloud(), g.cloud())
    plan, _ = ot.solve_entropic(f.cloud(), g.cloud(), epsilon)
    return plan


def _cmd_bbl_deficit(cfg: RunConfig, diagnose: bool = False, bound_only: bool = False) -> int:
    p = cfg.params
    space, grid, A, B = _bbl_inputs(cfg)
    f, g = _densities_from_sets(A, B)
    s, pexp = p["s"], p["p"]
    h = bbl.admissible_h(f, g, s, pexp)
    plan = None
    if bound_only or diagnose:
        plan = _plan_for(f, g, p["exact"], p["epsilon"])
    rep = bbl.deficit_report(f, g, h, s, pexp, plan, diagnostics=diagnose)
    payload = rep.to_json()
    payload["command"] = "bbl " + cfg.command.split(".")[-1]
    if "json" in cfg.outputs:
        write_json(cfg.outputs["json"], payload)
    print(
        f"deficit {rep.deficit:.17g} lower_bound {rep.lower_bound:.17g} "
        f"margin {rep.margin:.17g} err {rep.discretization_error:.17g}"
    )
    return 0 if rep.margin >= -rep.discretization_error else 2


def _cmd_bbl_dubuc_fit(cfg: RunConfig) -> int:
    p = cfg.params
    space, grid, A, B = _bbl_inputs(cfg)
    if "H" not in p or p["H"] is None:
        raise DomainError("dubuc-fit needs --H (the candidate equality h-support)")
    H = parse_set_literal(p["H"], space, grid)
    f, g = _densities_from_sets(A, B)
    h = bbl.GridDensity(H.grid, H.mask.astype(float))
    fit = bbl.dubuc_fit(f, g, h, p["s"], p["p"])
    payload = {
        "schema": _SCHEMA,
        "command": "bbl dubuc-fit",
        "ok": fit.ok,
        "c0": fit.c0,
        "x0": fit.x0,
        "t": fit.t,
        "residuals": fit.residuals(),
    }
    if "json" in cfg.outputs:
        write_json(cfg.outputs["json"], payload)
    print(f"dubuc-fit: ok {fit.ok} c0 {fit.c0:.17g} t {fit.t:.17g}")
    return 0


def _norm_from_args(p: dict) -> finsler.MinkowskiNorm:
    if p["norm"] == "randers":
        q = [float(v) for v in p["Q"].split(",")]
        b = [float(v) for v in p["b"].split(",")]
        return finsler.RandersNorm(np.array(q).reshape(2, 2), np.array(b))
    if p["norm"] == "matsumoto":
        return finsler.MatsumotoNorm(parse_angle(p["alpha"]), p["v"], p["gravity"])
    return finsler.EuclideanNorm(p["v"])


def _cmd_finsler_balls(cfg: RunConfig) -> int:
    p = cfg.params
    F = _norm_from_args(p)
    m = p["m"]
    r, R, s = p["r"], p["R"], p["s"]
    fwd = finsler.forward_ball(F, (0.0, 0.0), r, m)
    bwd = finsler.backward_ball(F, (0.0, 0.0), R, m)
    hom = finsler.homothety_test(F, (0.0, 0.0), r, (0.0, 0.0), R, m)
    bm = finsler.minkowski_bm_deficit(F, (0.0, 0.0), r, (0.0, 0.0), R, s, m)
    if "svg" in cfg.outputs:
        finsler.write_svg(
            cfg.outputs["svg"],
            [(fwd, "#1f6fb4"), (bwd, "#c23b22")],
            title=f"forward/backward balls ({p['norm']})",
        )
    payload = {
        "schema": _SCHEMA,
        "command": "finsler balls",
        "norm": p["norm"],
        "homothety": {"ok": hom.ok, "residual": hom.residual, "translation": hom.translation},
        "bm": {"lhs": bm.lhs, "rhs": bm.rhs, "deficit": bm.deficit, "tol": bm.tol},
    }
    if "json" in cfg.outputs:
        write_json(cfg.outputs["json"], payload)
    print(
        f"finsler balls [{p['norm']}]: homothety {hom.ok} (residual {hom.residual:.3e}), "
        f"bm deficit {bm.deficit:.3e} tol {bm.tol:.3e}"
    )
    return 0 if bm.deficit >= -bm.tol else 2


_DISPATCH = {
    "gap.sweep": _cmd_gap_sweep,
    "ot.solve": _cmd_ot_solve,
    "bbl.bm": _cmd_bbl_bm,
    "bbl.distorted-bm": _cmd_bbl_distorted,
    "bbl.deficit": lambda cfg: _cmd_bbl_deficit(cfg),
    "bbl.bound": lambda cfg: _cmd_bbl_deficit(cfg, bound_only=True),
    "bbl.diagnose": lambda cfg: _cmd_bbl_deficit(cfg, diagnose=True),
    "bbl.dubuc-fit": _cmd_bbl_dubuc_fit,
    "finsler.balls": _cmd_finsler_balls,
}


def run(config: RunConfig) -> int:
    """Dispatch a parsed configuration; returns the process exit code."""
    try:
        return _DISPATCH[config.command](config)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> _Parser:
    ap = _Parser(prog="bbl-lab", description=__doc__)
    sub = ap.add_subparsers(dest="group", required=True)

    g = sub.add_parser("gap", parents=[], help="gap-function checks")
    gs = g.add_subparsers(dest="cmd", required=True)
    sweep = gs.add_parser("sweep", help="randomized quantitative-Hoelder sweep")
    sweep.add_argument("--samples", type=int, default=100_000)
    sweep.add_argument("--seed", type=int, default=7)
    sweep.add_argument("--out", type=str, default=None, help="CSV output path")

    o = sub.add_parser("ot", help="optimal transport")
    os_ = o.add_subparsers(dest="cmd", required=True)
    solve = os_.add_parser("solve", help="solve a transport instance")
    mode = solve.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--entropic", action="store_true")
    solve.add_argument("--epsilon", type=float, default=1e-3)
    solve.add_argument("--mu", type=str, required=True, help="source cloud JSON")
    solve.add_argument("--nu", type=str, required=True, help="target cloud JSON")
    solve.add_argument("--out", type=str, default=None, help="plan JSON path")

    b = sub.add_parser("bbl", help="deficits and Brunn-Minkowski checks")
    bs = b.add_subparsers(dest="cmd", required=True)

    def add_common(sp, curved=True):
        sp.add_argument("--A", type=str, required=True)
        sp.add_argument("--B", type=str, required=True)
        sp.add_argument("--s", type=float, required=True)
        sp.add_argument("--space", type=str, default="euclidean",
                        choices=["euclidean", "sphere", "hyperbolic"])
        sp.add_argument("--k", type=float, default=0.0)
        sp.add_argument("--n", type=int, default=2)
        sp.add_argument("--grid-h", type=float, default=1.0 / 64)
        sp.add_argument("--r-max", type=float, default=3.0)
        sp.add_argument("--out", type=str, default=None)

    bm = bs.add_parser("bm", help="quantitative Brunn-Minkowski (exact bodies)")
    bm.add_argument("--A", type=str, required=True)
    bm.add_argument("--B", type=str, required=True)
    bm.add_argument("--s", type=float, required=True)
    bm.add_argument("--p", type=parse_exponent, required=True)
    bm.add_argument("--out", type=str, default=None)

    for name in ("deficit", "bound", "diagnose"):
        sp = bs.add_parser(name)
        add_common(sp)
        sp.add_argument("--p", type=parse_exponent, required=True)
        sp.add_argument("--exact", action="store_true", help="exact OT solver")
        sp.add_argument("--epsilon", type=float, default=1e-3)

    df = bs.add_parser("dubuc-fit", help="fit the equality normal form")
    add_common(df)
    df.add_argument("--p", type=parse_exponent, required=True)
    df.add_argument("--H", type=str, required=True, help="candidate h support literal")

    dist = bs.add_parser("distorted-bm", help="distorted BM on a model space")
    add_common(dist)

    f = sub.add_parser("finsler", help="Minkowski-plane geometry")
    fs = f.add_subparsers(dest="cmd", required=True)
    balls = fs.add_parser("balls", help="forward/backward balls, homothety and deficit")
    balls.add_argument("--norm", type=str, required=True,
                       choices=["randers", "matsumoto", "euclidean"])
    balls.add_argument("--Q", type=str, default="5,-1,-1,1")
    balls.add_argument("--b", type=str, default="0.2,0.5")
    balls.add_argument("--alpha", type=str, default="35deg")
    balls.add_argument("--v", type=float, default=6.0)
    balls.add_argument("--gravity", type=float, default=9.81)
    balls.add_argument("--r", type=float, default=1.0)
    balls.add_argument("--R", type=float, default=1.0)
    balls.add_argument("--s", type=float, default=0.5)
    balls.add_argument("--m", type=int, default=finsler.DEFAULT_DIRECTIONS)
    balls.add_argument("--svg", type=str, default=None)
    balls.add_argument("--out", type=str, default=None)
    return ap


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    command = f"{args.group}.{args.cmd}"
    params = {}
    outputs = {}
    seed = getattr(args, "seed", None)
    for key, val in vars(args).items():
        if key in ("group", "cmd", "seed"):
            continue
        if key == "out" and val:
            outputs["json" if command != "gap.sweep" else "csv"] = val
        elif key == "svg" and val:
            outputs["svg"] = val
        elif key == "mu":
            params["mu_file"] = val
        elif key == "nu":
            params["nu_file"] = val
        else:
            params[key] = val
    return RunConfig(command, params, outputs, seed)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    code = run(config)
    return code


if __name__ == "__main__":
    sys.exit(main())
