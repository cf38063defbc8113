"""Command-line front end.

    renormvol check       [--suites forms,epstein,...]
    renormvol forms | epstein | schwarzian
    renormvol epstein     --table phi.txt [--rho R]
    renormvol uniformize  MESH | --fixture genus2 [--level N]
    renormvol tube        --genus G --r R [--rho-max X] [--steps N]

Common flags: ``--config PATH`` (JSON), ``--seed``, ``--out DIR``, ``--tol``,
``--grid-step``.  Exit codes: 0 pass, 1 numeric or convergence failure,
2 usage, parse or topology error.  Files written under ``--out`` contain no
timestamps or timings, so equal inputs give equal bytes.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__, epstein, fixtures, liouville, suites, wvolume
from .errors import (GridTooCoarse, NonConvergence, OutOfDomain, ParseError,
                     RenormVolError, WrongTopology)
from .fields import GridField
from .mesh import read_mesh

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config


@dataclasses.dataclass
class RunConfig:
    command: str = "check"
    seed: int = 0
    tol: Optional[float] = None
    grid_step: float = 1e-4
    out: Optional[str] = None
    suites: List[str] = dataclasses.field(default_factory=lambda: list(suites.SUITES))
    # uniformize
    mesh: Optional[str] = None
    fixture: Optional[str] = None
    level: Optional[int] = None      # per-fixture default when unset
    lam: float = 1.0
    area: Optional[float] = None
    max_iterations: int = 30
    residual_tolerance: float = 1e-10
    # tube
    genus: int = 2
    r: float = 1.0
    rho_max: float = 10.0
    steps: int = 201
    # epstein table
    table: Optional[str] = None
    rho: float = 0.0


CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, path) from None
    if not isinstance(data, dict):
        raise ParseError("config must be a JSON object", 1, 1, path)
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"{path}: unknown config key(s): {', '.join(unknown)}")
    return data


def _coerce(cfg: RunConfig) -> RunConfig:
    """Type-check values that may have come from JSON."""
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    need(isinstance(cfg.seed, int) and not isinstance(cfg.seed, bool), "seed must be an integer")
    for name in ("grid_step", "lam", "r", "rho_max", "residual_tolerance", "rho"):
        val = getattr(cfg, name)
        need(isinstance(val, (int, float)) and not isinstance(val, bool) and math.isfinite(val),
             f"{name} must be a finite number")
        setattr(cfg, name, float(val))
    if cfg.tol is not None:
        need(isinstance(cfg.tol, (int, float)) and cfg.tol >= 0, "tol must be a non-negative number")
        cfg.tol = float(cfg.tol)
    need(cfg.grid_step > 0, "grid step must be positive")
    need(isinstance(cfg.suites, list) and all(s in suites.SUITES for s in cfg.suites),
         f"suites must be a list drawn from {', '.join(suites.SUITES)}")
    for name in ("genus", "steps", "max_iterations"):
        need(isinstance(getattr(cfg, name), int), f"{name} must be an integer")
    need(cfg.fixture is None or cfg.fixture in FIXTURES,
         f"fixture must be one of {', '.join(sorted(FIXTURES))}")
    need(cfg.level is None or (isinstance(cfg.level, int) and cfg.level >= 0),
         "level must be a non-negative integer")
    return cfg


# ------------------------------------------------------------------ output


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _write(cfg: RunConfig, name: str, text: str):
    if cfg.out is None:
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


# ------------------------------------------------------------------ commands


def _suite_config(cfg: RunConfig) -> suites.SuiteConfig:
    return suites.SuiteConfig(seed=cfg.seed, grid_step=cfg.grid_step, tol=cfg.tol,
                              genus=cfg.genus, r=cfg.r, rho_max=cfg.rho_max, steps=cfg.steps)


def cmd_check(cfg: RunConfig, names=None, stream=None) -> int:
    stream = stream or sys.stdout
    names = names or cfg.suites
    checks = suites.run_suites(names, _suite_config(cfg))
    failed = [c for c in checks if not c.passed]
    report = {
        "command": cfg.command,
        "version": __version__,
        "seed": cfg.seed,
        "tolerance_override": cfg.tol,
        "grid_step": cfg.grid_step,
        "suites": names,
        "checks": [c.to_dict() for c in checks],
        "n_checks": len(checks),
        "n_failed": len(failed),
        "failed": [f"{c.suite}: {c.name}" for c in failed],
        "passed": not failed,
        "conventions": liouville.CONVENTIONS,
    }
    for c in checks:
        rel = c.relation if c.relation != "within" else f"within {c.target:g} +-"
        stream.write(f"{'PASS' if c.passed else 'FAIL'}  [{c.suite}] {c.name}: "
                     f"{_fmt(c.measured)} {rel} {c.tolerance:g}\n")
    stream.write(f"{len(checks) - len(failed)}/{len(checks)} checks passed\n")
    _write(cfg, f"{cfg.command}_report.json", dumps(report))
    return EXIT_OK if not failed else EXIT_FAIL


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, (int, float)) else str(v)


def cmd_epstein_table(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    f = GridField.load(cfg.table)
    h = f.step
    Kstar, dbar, expansion, convex, skipped = [], [], [], 0, 0
    for z in f.nodes():
        try:
            k = epstein.curvature_of_metric_at_infinity(f, z)
            c = epstein.horospherically_convex_at(f, z)
            d = epstein.dbar_theta(f, z, h)
            x = epstein.expansion_check(f, z, cfg.rho, h)
        except (GridTooCoarse, OutOfDomain):
            skipped += 1
            continue
        Kstar.append(k)
        dbar.append(d)
        expansion.append(x)
        convex += c
    if not expansion:
        raise UsageError(f"{cfg.table}: grid too small for a centred stencil at any node")
    report = {
        "command": "epstein",
        "table": Path(cfg.table).name,
        "step": h,
        "rho": cfg.rho,
        "nodes_evaluated": len(expansion),
        "nodes_skipped": skipped,
        "K_star": {"min": min(Kstar), "max": max(Kstar)},
        "dbar_theta_max": max(dbar),
        "expansion_defect_max": max(expansion),
        "horospherically_convex_nodes": int(convex),
        "conventions": liouville.CONVENTIONS,
    }
    stream.write(f"{len(expansion)} nodes: K* in [{min(Kstar):.6g}, {max(Kstar):.6g}], "
                 f"max |dbar theta| = {max(dbar):.3g}, max expansion defect = {max(expansion):.3g}\n")
    _write(cfg, "epstein_report.json", dumps(report))
    return EXIT_OK


#: name -> (constructor, default refinement level)
FIXTURES = {
    "genus2": (fixtures.genus2_octagon, 16),
    "icosphere": (fixtures.icosphere, 2),
    "torus": (fixtures.flat_torus, 8),
}


def cmd_uniformize(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    if (cfg.mesh is None) == (cfg.fixture is None):
        raise UsageError("give exactly one of a mesh path or --fixture")
    if cfg.mesh is not None:
        m = read_mesh(cfg.mesh)
        source = Path(cfg.mesh).name
    else:
        make, default = FIXTURES[cfg.fixture]
        level = default if cfg.level is None else cfg.level
        try:
            m = make(level)
        except ValueError as exc:
            raise UsageError(f"fixture {cfg.fixture}: {exc}") from None
        source = f"{cfg.fixture}:{level}"
    try:
        solver = liouville.SolverConfig(max_iterations=cfg.max_iterations,
                                        residual_tolerance=cfg.residual_tolerance,
                                        target_curvature=cfg.lam, area_constraint=cfg.area)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    code = EXIT_OK
    try:
        res = liouville.solve_uniformization(m, solver)
    except NonConvergence as exc:
        res, code = exc.result, EXIT_FAIL
        stream.write(f"not converged: {exc}\n")
    report = liouville.solver_report(res, m, solver)
    report["source"] = source
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex", "phi"])
    for vid, p in zip(m.vertex_ids, res.phi):
        w.writerow([vid, repr(float(p))])
    _write(cfg, "phi.csv", buf.getvalue())
    _write(cfg, "uniformize_report.json", dumps(report))
    stream.write(f"{source}: {res.iterations} Newton steps, residual {res.residual:.3e}, "
                 f"area {res.area_scaled:.6g}, lambda {res.lam:.6g}\n")
    return code


def cmd_tube(cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        t = wvolume.FuchsianTube(cfg.genus, cfg.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not cfg.rho_max > 0 or cfg.steps < 6:
        raise UsageError("rho_max must be positive and steps >= 6")
    rep = wvolume.volume_report(t, cfg.rho_max, cfg.steps)
    data = rep.to_dict()
    tol = 1e-6 if cfg.tol is None else cfg.tol
    data["passed"] = all(v < tol for v in rep.invariants().values())
    data["tolerance"] = tol
    _write(cfg, "volume_report.json", dumps(data))
    _write(cfg, "limit_curve.csv", rep.curve_csv())
    stream.write(f"genus {t.genus}, r {t.r:g}: V {rep.V:.12g}  intH {rep.int_H_da:.12g}  "
                 f"W {rep.W:.12g}  V* {rep.V_dual:.12g}  V_R {rep.V_R:.12g}\n")
    return EXIT_OK if data["passed"] else EXIT_FAIL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of RunConfig values")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="directory for reports and CSV files")
    common.add_argument("--tol", type=float, help="override every upper-bound tolerance")
    common.add_argument("--grid-step", type=float, dest="grid_step")

    p = argparse.ArgumentParser(prog="renormvol", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="run all invariant suites")
    c.add_argument("--suites", help="comma-separated subset of suites")
    sub.add_parser("forms", parents=[common], help="fundamental-form identities")
    e = sub.add_parser("epstein", parents=[common], help="Epstein surface and theta checks")
    e.add_argument("--table", help="tabulated phi ('step h' header, 'x y phi' rows)")
    e.add_argument("--rho", type=float)
    sub.add_parser("schwarzian", parents=[common], help="Schwarzian identities")

    u = sub.add_parser("uniformize", parents=[common], help="solve the discrete Liouville equation")
    u.add_argument("mesh", nargs="?")
    u.add_argument("--fixture", choices=sorted(FIXTURES))
    u.add_argument("--level", type=int)
    u.add_argument("--lam", type=float)
    u.add_argument("--area", type=float)
    u.add_argument("--max-iterations", type=int, dest="max_iterations")
    u.add_argument("--residual-tolerance", type=float, dest="residual_tolerance")

    t = sub.add_parser("tube", parents=[common], help="Fuchsian tube volume report")
    t.add_argument("--genus", type=int)
    t.add_argument("--r", type=float)
    t.add_argument("--rho-max", type=float, dest="rho_max")
    t.add_argument("--steps", type=int)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in CONFIG_KEYS and val is not None:
            values[key] = val
    if getattr(args, "suites", None):
        values["suites"] = [s.strip() for s in args.suites.split(",") if s.strip()]
    return _coerce(RunConfig(command=args.command, **values))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.command == "check":
            return cmd_check(cfg)
        if cfg.command in ("forms", "schwarzian"):
            return cmd_check(cfg, [cfg.command])
        if cfg.command == "epstein":
            return cmd_epstein_table(cfg) if cfg.table else cmd_check(cfg, ["epstein"])
        if cfg.command == "uniformize":
            return cmd_uniformize(cfg)
        if cfg.command == "tube":
            return cmd_tube(cfg)
    except (ParseError, UsageError, WrongTopology) as exc:
        sys.stderr.write(f"renormvol: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"renormvol: error: {exc.filename}: {exc.strerror}\n")
        return EXIT_USAGE
    except RenormVolError as exc:
        sys.stderr.write(f"renormvol: numeric failure: {exc}\n")
        return EXIT_FAIL
    parser.error(f"unknown command {args.command}")  # pragma: no cover
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
