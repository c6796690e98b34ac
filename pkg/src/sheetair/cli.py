"""Command-line front end: analyze, show, edit.

Data goes to stdout (or --out), diagnostics to stderr. Exit codes: 0 success
(including success with warnings), 1 I/O or fatal parse failure, 2 query or
edit errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .errors import (
    AddressError,
    EditError,
    EvalError,
    FormulaError,
    SheetAirError,
    UnknownGroupError,
    UnknownSheetError,
    WorkbookError,
)
from .graphbuild import build_graph, find_group, lookup
from .model import DataFlowGraph, FormulaGroup, Group, RawGroup, to_dot, to_json, to_listing
from .rewrite import add_group, rewrite_cells, set_group_formula
from .workbook import load_workbook, save_workbook
from .formulas import format_number


def _default_threshold() -> int:
    env = os.environ.get("AIR_THRESHOLD")
    if env is None:
        return 0
    try:
        value = int(env)
    except ValueError:
        raise SystemExit(f"AIR_THRESHOLD must be an integer, got {env!r}")
    return value


def _build(path: str, threshold: int) -> DataFlowGraph:
    model = load_workbook(path)
    graph = build_graph(model, threshold)
    for diag in graph.diagnostics:
        print(str(diag), file=sys.stderr)
    return graph


def _emit(text_or_bytes, out: Optional[str]) -> None:
    if out is None:
        if isinstance(text_or_bytes, bytes):
            sys.stdout.write(text_or_bytes.decode("utf-8"))
        else:
            sys.stdout.write(text_or_bytes)
        return
    mode = "wb" if isinstance(text_or_bytes, bytes) else "w"
    with open(out, mode) as handle:
        handle.write(text_or_bytes)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, (int, float)):
        return format_number(float(value))
    return str(value)


def _show_group(group: Group) -> str:
    lines = [group.listing_line(), f"\ttype: {group.value_type}"]
    if isinstance(group, FormulaGroup):
        lines.append(f"\tformula: {group.formula}")
        lines.append(f"\tdependencies: {', '.join(group.dependencies) or '(none)'}")
    else:
        lines.append(f"\tvalues: {', '.join(_format_value(v) for v in group.values)}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    graph = _build(args.input, args.threshold)
    if args.format == "listing":
        _emit(to_listing(graph), args.out)
    elif args.format == "json":
        _emit(to_json(graph), args.out)
    else:
        _emit(to_dot(graph), args.out)
    return 0


def cmd_show(args) -> int:
    graph = _build(args.input, args.threshold)
    if args.group:
        group = lookup(graph, args.group)
    else:
        if "!" not in args.cell:
            raise AddressError(f"--cell wants SHEET!A1, got {args.cell!r}")
        sheet, coord = args.cell.split("!", 1)
        group = find_group(graph, sheet, coord)
        if group is None:
            print(f"no group at {args.cell}", file=sys.stderr)
            return 2
    sys.stdout.write(_show_group(group))
    return 0


def _apply_script(graph: DataFlowGraph, script_path: str) -> None:
    with open(script_path) as handle:
        lines = handle.readlines()
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("set "):
                parts = line.split(None, 2)
                if len(parts) != 3:
                    raise EditError("set wants: set <group> <formula>")
                set_group_formula(graph, parts[1], parts[2])
            elif line.startswith("add "):
                parts = line.split(None, 4)
                if len(parts) != 5:
                    raise EditError("add wants: add <sheet> <header> <range> <formula>")
                add_group(graph, parts[1], parts[2], parts[3], parts[4])
            else:
                raise EditError(f"unknown command {line.split()[0]!r}")
        except SheetAirError as exc:
            raise EditError(f"line {number}: {exc}") from exc


def cmd_edit(args) -> int:
    graph = _build(args.input, args.threshold)
    _apply_script(graph, args.script)
    rewrite_cells(graph)
    for diag in graph.diagnostics:
        print(str(diag), file=sys.stderr)
    save_workbook(graph.source, args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheetair",
        description="Convert spreadsheet workbooks into a grouped dataflow graph, "
        "inspect it, edit group formulas, and write the result back.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="path to an .xlsx workbook")
        p.add_argument(
            "--threshold", type=int, default=_default_threshold(),
            help="max run of empty cells bridged inside a group "
            "(default 0, or AIR_THRESHOLD)",
        )

    p_analyze = sub.add_parser("analyze", help="build the graph and export it")
    common(p_analyze)
    p_analyze.add_argument("--format", choices=("listing", "json", "dot"), default="listing")
    p_analyze.add_argument("--out", help="write to a file instead of stdout")
    p_analyze.set_defaults(func=cmd_analyze)

    p_show = sub.add_parser("show", help="print one group's details")
    common(p_show)
    target = p_show.add_mutually_exclusive_group(required=True)
    target.add_argument("--group", help="group name, e.g. Clipper.Ptotal")
    target.add_argument("--cell", help="cell coordinate, e.g. Flash!B30")
    p_show.set_defaults(func=cmd_show)

    p_edit = sub.add_parser("edit", help="apply an edit script and save the workbook")
    common(p_edit)
    p_edit.add_argument("--script", required=True, help="edit script path")
    p_edit.add_argument("--out", required=True, help="output .xlsx path")
    p_edit.set_defaults(func=cmd_edit)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.threshold < 0:
        print("threshold must be >= 0", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (WorkbookError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        AddressError,
        EditError,
        EvalError,
        FormulaError,
        UnknownGroupError,
        UnknownSheetError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
