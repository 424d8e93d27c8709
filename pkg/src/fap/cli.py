"""Command-line driver.

    fap run FILE [--all | --first N] [--set NAME=V ...] [--neg ...] [--impl ...]
    fap gen [--seed N] [--depth D] [--out FILE]
    fap squares NX NY SIZE [SIZE ...] [--set posX[1]=1 ...]

Exit codes: 0 the query succeeded, 1 it failed, 2 it was undetermined
(error leaves or step budget), 3 a static error (syntax/sort/cycle/name or
bad bindings).
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass

from .engine import (
    EngineConfig,
    ImplicationMode,
    NegationMode,
    SolveResult,
    TreeStatus,
    solve,
    trace,
)
from .formulas import ProgramUnit, Scalar, format_program
from .normalize import normalize_program
from .oracle import GeneratorConfig, generate
from .parser import Diagnostic, parse
from .render import RenderFormat, RenderOptions, render
from .squares import run_squares
from .values import Valuation, Value, format_value

EXIT_BY_STATUS = {
    TreeStatus.SUCCESSFUL: 0,
    TreeStatus.FAILED: 1,
    TreeStatus.UNDETERMINED: 2,
}
EXIT_STATIC = 3


@dataclass(frozen=True)
class RunReport:
    status: TreeStatus
    solutions: tuple[Valuation, ...]
    leaf_counts: tuple[int, int, int]
    steps: int
    error_causes: tuple[str, ...]

    @classmethod
    def from_result(cls, result: SolveResult) -> "RunReport":
        return cls(
            status=result.status,
            solutions=result.solutions,
            leaf_counts=result.leaf_counts,
            steps=result.steps,
            error_causes=result.error_causes,
        )


def format_solution(v: Valuation) -> str:
    parts = [f"{n}={format_value(x)}" for n, x in sorted(v.scalars.items())]
    parts += [
        f"{name}[{','.join(str(i) for i in idx)}]={format_value(x)}"
        for (name, idx), x in sorted(v.cells.items())
    ]
    return " ".join(parts) if parts else "(empty)"


def format_report(report: RunReport) -> str:
    lines = [format_solution(s) for s in report.solutions]
    lines.append(f"status: {report.status.value}")
    s, f, e = report.leaf_counts
    lines.append(f"leaves: success={s} fail={f} error={e}")
    if report.error_causes:
        lines.append(f"errors: {', '.join(report.error_causes)}")
    lines.append(f"steps: {report.steps}")
    return "\n".join(lines) + "\n"


_SET_RE = re.compile(
    r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"(?:\[(?P<idx>-?\d+(?:\s*,\s*-?\d+)*)\])?"
    r"=(?P<value>-?\d+|TRUE|FALSE)$"
)


def parse_bindings(program: ProgramUnit, settings: list[str]) -> Valuation:
    """Build the initial valuation from --set flags, validating names, sorts
    and array ranges against the program."""
    scalars: dict[str, Value] = {}
    cells: dict[tuple[str, tuple[int, ...]], Value] = {}
    free = dict(program.free_vars)
    for raw in settings:
        m = _SET_RE.match(raw.strip())
        if m is None:
            raise Diagnostic("name", f"cannot parse binding {raw!r}", 0, 0)
        name = m.group("name")
        value: Value
        if m.group("value") in ("TRUE", "FALSE"):
            value = m.group("value") == "TRUE"
        else:
            value = int(m.group("value"))
        if m.group("idx") is not None:
            idx = tuple(int(p) for p in m.group("idx").split(","))
            decl = program.array(name)
            if decl is None:
                raise Diagnostic("name", f"unknown array {name!r}", 0, 0)
            if len(idx) != len(decl.ranges) or not decl.in_range(idx):
                raise Diagnostic(
                    "sort", f"index {list(idx)} out of range for {name!r}", 0, 0
                )
            if (type(value) is bool) != (decl.element is Scalar.BOOL):
                raise Diagnostic("sort", f"cells of {name!r} hold {decl.element}", 0, 0)
            if (name, idx) in cells:
                raise Diagnostic("name", f"duplicate binding for {raw!r}", 0, 0)
            cells[(name, idx)] = value
        else:
            if name not in free:
                raise Diagnostic(
                    "name", f"{name!r} is not a free variable of the query", 0, 0
                )
            if (type(value) is bool) != (free[name] is Scalar.BOOL):
                raise Diagnostic("sort", f"{name!r} has sort {free[name]}", 0, 0)
            if name in scalars:
                raise Diagnostic("name", f"duplicate binding for {name!r}", 0, 0)
            scalars[name] = value
    return Valuation(scalars, cells)


def engine_config(args: argparse.Namespace) -> EngineConfig:
    return EngineConfig(
        negation=NegationMode(args.neg),
        implication=ImplicationMode(args.impl),
        pedantic=args.pedantic,
        max_steps=args.max_steps,
        solution_limit=None if args.all else args.first,
    )


def _add_engine_flags(sub: argparse.ArgumentParser, neg_default: str) -> None:
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true", help="enumerate every solution")
    group.add_argument(
        "--first", type=int, default=1, metavar="N", help="stop after N solutions"
    )
    sub.add_argument("--neg", choices=["strict", "liberal"], default=neg_default)
    sub.add_argument(
        "--impl",
        choices=["strict", "negor", "guarded", "combined"],
        default="strict",
    )
    sub.add_argument(
        "--pedantic",
        action="store_true",
        help="verbatim strict implication (no liberal relaxations)",
    )
    sub.add_argument("--max-steps", type=int, default=100_000_000, metavar="N")
    sub.add_argument("--trace", choices=["text", "dot"], default=None)
    sub.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="NAME=V",
        help="bind a free variable (x=3) or array cell (a[1,2]=5) up front",
    )


def _emit_trace(
    program: ProgramUnit,
    initial: Valuation,
    config: EngineConfig,
    fmt: str,
    out,
) -> None:
    node = trace(program, initial, config)
    opts = RenderOptions(
        format=RenderFormat.DOT if fmt == "dot" else RenderFormat.TEXT
    )
    out.write(render(node, opts))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.file, encoding="utf-8") as handle:
            source = handle.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATIC
    try:
        program = normalize_program(parse(source))
        initial = parse_bindings(program, args.set)
        config = engine_config(args)
    except Diagnostic as diag:
        print(f"{args.file}:{diag}", file=sys.stderr)
        return EXIT_STATIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATIC
    result = solve(program, initial, config)
    report = RunReport.from_result(result)
    if args.trace == "dot":
        _emit_trace(program, initial, config, "dot", sys.stdout)
        sys.stderr.write(format_report(report))
    elif args.trace == "text":
        _emit_trace(program, initial, config, "text", sys.stdout)
        sys.stdout.write("\n" + format_report(report))
    else:
        sys.stdout.write(format_report(report))
    return EXIT_BY_STATUS[report.status]


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = GeneratorConfig(seed=args.seed, max_depth=args.depth)
    text = format_program(generate(cfg))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_squares(args: argparse.Namespace) -> int:
    partial_x: dict[int, int] = {}
    partial_y: dict[int, int] = {}
    for raw in args.set:
        m = _SET_RE.match(raw.strip())
        if m is None or m.group("idx") is None or m.group("name") not in ("posX", "posY"):
            print(f"error: squares accepts only posX[k]=v / posY[k]=v, got {raw!r}",
                  file=sys.stderr)
            return EXIT_STATIC
        k = int(m.group("idx"))
        target = partial_x if m.group("name") == "posX" else partial_y
        target[k] = int(m.group("value"))
    try:
        config = EngineConfig(
            negation=NegationMode.LIBERAL,
            implication=ImplicationMode(args.impl),
            pedantic=args.pedantic,
            max_steps=args.max_steps,
            solution_limit=None if args.all else args.first,
        )
        report = run_squares(
            args.nx, args.ny, args.sizes, partial_x, partial_y, config
        )
    except (ValueError, Diagnostic) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATIC
    run_report = RunReport.from_result(report.result)
    lines = []
    if report.placement:
        placed = " ".join(
            f"{k}:({x},{y})" for k, (x, y) in sorted(report.placement.items())
        )
        lines.append(f"placement: {placed}")
        lines.append("verified: coverage and disjointness hold")
    sys.stdout.write(("\n".join(lines) + "\n") if lines else "")
    sys.stdout.write(format_report(run_report))
    return EXIT_BY_STATUS[run_report.status]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fap", description="execute first-order formulas as programs"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run a .fap program")
    run.add_argument("file")
    _add_engine_flags(run, neg_default="strict")
    run.set_defaults(func=cmd_run)

    gen = subs.add_parser("gen", help="emit a random .fap program")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--depth", type=int, default=4)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=cmd_gen)

    squares = subs.add_parser(
        "squares", help="tile an NX x NY rectangle with the given squares"
    )
    squares.add_argument("nx", type=int)
    squares.add_argument("ny", type=int)
    squares.add_argument("sizes", type=int, nargs="+")
    group = squares.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true")
    group.add_argument("--first", type=int, default=1, metavar="N")
    squares.add_argument(
        "--impl", choices=["strict", "negor", "guarded", "combined"], default="strict"
    )
    squares.add_argument("--pedantic", action="store_true")
    squares.add_argument("--max-steps", type=int, default=100_000_000, metavar="N")
    squares.add_argument("--set", action="append", default=[], metavar="posX[k]=v")
    squares.set_defaults(func=cmd_squares)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
