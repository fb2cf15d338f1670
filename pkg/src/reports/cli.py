# cli.py
"""
hrf-report: the command-line surface.

    catalog         list the embedded (or HRF_CATALOG_PATH) spaces
    export-catalog  write the versioned JSON catalog document
    table1          recompute N and the stable/unstable dimensions for every space
    fixed-points    fixed points at infinity of one space
    einstein        normalized Einstein metrics of one space
    flow            integrate the Ricci flow from a metric, CSV out
    ancient         closed-form ancient solution through a fixed point, CSV out

Exit codes: 0 success, 1 table1 mismatch, 2 any error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from dotenv import find_dotenv, load_dotenv

from dynamics.ancient import (
    AncientSolutionError,
    ExtinctionDomainError,
    ancient_curve,
    ancient_solution,
)
from dynamics.flow import Trajectory, WrongRankError, integrate_flow, write_trajectory_csv
from dynamics.integrator import IntegratorOptions, StepSizeError
from dynamics.poincare import (
    NonHyperbolicError,
    find_fixed_points_at_infinity,
    fixed_point_report,
    table1_rows,
)
from geometry.catalog import (
    FlagSpace,
    InvalidSpaceError,
    UnknownSpaceError,
    catalog_spaces,
    dump_catalog,
    get_space,
    space_from_dims,
)
from geometry.newton import EINSTEIN_OPTIONS, SolverError, SolverOptions
from geometry.ricci import MetricError, find_einstein_metrics
from reports.tables import (
    CSV,
    CSV_FLOAT,
    FORMATS,
    JSON,
    TEXT,
    catalog_frame,
    catalog_lines,
    dumps,
    einstein_frame,
    fixed_points_frame,
    render,
    render_table1,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_ERROR = 2

REPORT_ERRORS = (
    UnknownSpaceError,
    InvalidSpaceError,
    MetricError,
    SolverError,
    StepSizeError,
    WrongRankError,
    NonHyperbolicError,
    AncientSolutionError,
    ExtinctionDomainError,
    ValueError,
    OSError,
)


@dataclass(frozen=True)
class ReportConfig:
    space: Optional[str] = None
    dims: Optional[Tuple[int, ...]] = None
    fmt: str = TEXT
    out: Optional[Path] = None
    solver_overrides: Dict[str, Any] = field(default_factory=dict)
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)

    def __post_init__(self) -> None:
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown format {self.fmt!r}; use one of {FORMATS}")
        if self.space is not None and self.dims is not None:
            raise ValueError("give either --space or --dims, not both")

    def resolve_space(self) -> FlagSpace:
        if self.dims is not None:
            return space_from_dims(self.dims)
        if self.space is None:
            raise ValueError("this command needs --space or --dims")
        return get_space(self.space)

    def solver(self, base: Optional[SolverOptions] = None) -> SolverOptions:
        return (base or SolverOptions()).with_overrides(**self.solver_overrides)


def emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", out)


def parse_vector(text: str, kind=float) -> Tuple:
    try:
        return tuple(kind(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError as exc:
        raise ValueError(f"cannot parse {text!r} as a comma separated list") from exc


# ---------- Commands ----------

def cmd_catalog(cfg: ReportConfig, args: argparse.Namespace) -> int:
    spaces = catalog_spaces()
    if cfg.fmt == JSON:
        emit(dumps([s.to_record() for s in spaces]), cfg.out)
    elif cfg.fmt == CSV:
        emit(render(catalog_frame(spaces), CSV), cfg.out)
    else:
        emit(catalog_lines(spaces), cfg.out)
    return EXIT_OK


def cmd_export_catalog(cfg: ReportConfig, args: argparse.Namespace) -> int:
    emit(dumps(dump_catalog()), cfg.out)
    return EXIT_OK


def cmd_table1(cfg: ReportConfig, args: argparse.Namespace) -> int:
    rows = table1_rows(catalog_spaces(), cfg.solver())
    if cfg.fmt == JSON:
        emit(
            dumps(
                [
                    {
                        "space": row.space.name,
                        "r": row.space.r,
                        "N": len(row.found),
                        "found": [list(p) for p in row.found],
                        "expected": None if row.expected is None else [list(p) for p in row.expected],
                        "match": row.matches,
                    }
                    for row in rows
                ]
            ),
            cfg.out,
        )
    else:
        emit(render_table1(rows), cfg.out)
    failed = [row for row in rows if not row.matches]
    for row in failed:
        for line in row.diff():
            print(line, file=sys.stderr)
    return EXIT_MISMATCH if failed else EXIT_OK


def cmd_fixed_points(cfg: ReportConfig, args: argparse.Namespace) -> int:
    space = cfg.resolve_space()
    points = find_fixed_points_at_infinity(space, cfg.solver())
    if cfg.fmt == JSON:
        emit(dumps(fixed_point_report(space, points)), cfg.out)
    else:
        emit(render(fixed_points_frame(points), cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_einstein(cfg: ReportConfig, args: argparse.Namespace) -> int:
    space = cfg.resolve_space()
    metrics = find_einstein_metrics(space, cfg.solver(EINSTEIN_OPTIONS))
    emit(render(einstein_frame(metrics), cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_flow(cfg: ReportConfig, args: argparse.Namespace) -> int:
    space = cfg.resolve_space()
    x0 = parse_vector(args.x0)
    try:
        traj = integrate_flow(space, x0, args.t1, cfg.integrator, t0=args.t0)
    except StepSizeError as exc:
        if exc.partial is not None and cfg.out is not None:
            partial = Trajectory.from_integration(space, exc.partial)
            write_trajectory_csv(partial, cfg.out, args.with_ricci)
        raise
    write_trajectory_csv(traj, cfg.out if cfg.out is not None else sys.stdout, args.with_ricci)
    return EXIT_OK


def cmd_ancient(cfg: ReportConfig, args: argparse.Namespace) -> int:
    space = cfg.resolve_space()
    points = find_fixed_points_at_infinity(space, cfg.solver())
    if not 1 <= args.index <= len(points):
        raise ValueError(f"{space.name} has {len(points)} fixed points; --index must lie in 1..{len(points)}")
    sol = ancient_solution(space, points[args.index - 1])
    df = ancient_curve(sol, args.t0, args.t1, args.steps, scal_only=args.scal_only)
    emit(df.to_csv(index=False, float_format=CSV_FLOAT), cfg.out)
    return EXIT_OK


# ---------- Parser ----------

def _selector_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--space", help="catalog name or alias, e.g. 'G2/U(2)#r2' or 'M*'")
    p.add_argument("--dims", help="parametric space from summand dimensions, e.g. 8,2 or 10,6,4")
    return p


def _output_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, default=None, help="write to this file instead of stdout")
    return p


def _format_parent(default: str = TEXT) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", dest="fmt", choices=FORMATS, default=default)
    return p


def _solver_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("solver")
    g.add_argument("--grid-lower", dest="lower", type=float, default=None)
    g.add_argument("--grid-upper", dest="upper", type=float, default=None)
    g.add_argument("--points-per-axis", type=int, default=None)
    g.add_argument("--max-starts", type=int, default=None)
    g.add_argument("--newton-tol", dest="newton_tol", type=float, default=None)
    g.add_argument("--seed", type=int, default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrf-report",
        description="Homogeneous Ricci flow on flag manifolds with b2 = 1.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sel, out, solver = _selector_parent(), _output_parent(), _solver_parent()

    p = sub.add_parser("catalog", parents=[out, _format_parent()], help="list catalog spaces")
    p.set_defaults(handler=cmd_catalog)

    p = sub.add_parser("export-catalog", parents=[out], help="versioned JSON catalog")
    p.set_defaults(handler=cmd_export_catalog, fmt=JSON)

    p = sub.add_parser("table1", parents=[out, solver], help="recompute the classification table")
    p.add_argument("--format", dest="fmt", choices=(TEXT, JSON), default=TEXT)
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("fixed-points", parents=[sel, out, solver, _format_parent(JSON)],
                       help="fixed points at infinity")
    p.set_defaults(handler=cmd_fixed_points)

    p = sub.add_parser("einstein", parents=[sel, out, solver, _format_parent()],
                       help="normalized Einstein metrics")
    p.set_defaults(handler=cmd_einstein)

    p = sub.add_parser("flow", parents=[sel, out], help="integrate the flow (CSV)")
    p.add_argument("--x0", required=True, help="initial metric, e.g. 1,2")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--tol", type=float, default=None, help="relative local error per step")
    p.add_argument("--floor", type=float, default=None, help="extinction threshold on min(x)")
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--with-ricci", action="store_true", help="add ric1..ricr columns")
    p.set_defaults(handler=cmd_flow, fmt=CSV)

    p = sub.add_parser("ancient", parents=[sel, out, solver], help="ancient solution curve (CSV)")
    p.add_argument("--index", type=int, default=1, help="fixed point j, 1 = Kahler-Einstein")
    p.add_argument("--t0", type=float, default=-4.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--scal-only", action="store_true", help="only the t,scal columns")
    p.set_defaults(handler=cmd_ancient, fmt=CSV)
    return parser


def config_from_args(args: argparse.Namespace) -> ReportConfig:
    dims = parse_vector(args.dims, int) if getattr(args, "dims", None) else None
    solver_overrides = {
        "lower": getattr(args, "lower", None),
        "upper": getattr(args, "upper", None),
        "points_per_axis": getattr(args, "points_per_axis", None),
        "max_starts": getattr(args, "max_starts", None),
        "tol": getattr(args, "newton_tol", None),
        "seed": getattr(args, "seed", None),
    }
    integrator_overrides = {
        "tol": getattr(args, "tol", None),
        "floor": getattr(args, "floor", None),
        "max_steps": getattr(args, "max_steps", None),
    }
    return ReportConfig(
        space=getattr(args, "space", None),
        dims=dims,
        fmt=args.fmt,
        out=args.out,
        solver_overrides={k: v for k, v in solver_overrides.items() if v is not None},
        integrator=IntegratorOptions(**{k: v for k, v in integrator_overrides.items() if v is not None}),
    )


def configure_logging() -> None:
    name = os.getenv("HRF_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, name, None)
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv(find_dotenv())
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(config_from_args(args), args)
    except REPORT_ERRORS as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
