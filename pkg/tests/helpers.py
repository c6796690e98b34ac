"""Test-side oracles, written independently of the code paths they check.

cell_evaluate walks per-cell A1 formulas straight off the workbook model
(recursive, memoized); brute_force_groups re-derives the grouping policy by
exhaustive rectangle search.
"""

from __future__ import annotations

import math

from sheetair.addressing import CellAddress
from sheetair.formulas import (
    BinaryOp,
    Boolean,
    CellRef,
    FunctionCall,
    Number,
    RangeRef,
    Text,
    UnaryOp,
    parse_formula,
)
from sheetair.workbook import WorkbookModel

AGGREGATES = {"SUM", "AVERAGE", "MIN", "MAX", "COUNT"}


class CellEvaluator:
    """Recursive per-cell evaluator over a workbook model."""

    def __init__(self, model: WorkbookModel):
        self.model = model
        self.memo: dict[tuple[str, int, int], object] = {}
        self.visiting: set[tuple[str, int, int]] = set()

    def value(self, sheet: str, col: int, row: int):
        key = (sheet, col, row)
        if key in self.memo:
            return self.memo[key]
        if key in self.visiting:
            raise RecursionError(f"cycle at {sheet}!{col},{row}")
        record = self.model.get(sheet, col, row) if self.model.has_sheet(sheet) else None
        if record is None:
            result = None
        elif not record.is_formula:
            result = record.value
        else:
            self.visiting.add(key)
            try:
                ast = parse_formula(record.formula)
                result = self.eval(ast, sheet)
            finally:
                self.visiting.discard(key)
        self.memo[key] = result
        return result

    def ref_value(self, node: CellRef, sheet: str):
        return self.value(node.sheet or sheet, node.col, node.row)

    def range_values(self, node: RangeRef, sheet: str) -> list:
        start, end = node.start, node.end
        target_sheet = start.sheet or sheet
        out = []
        for row in range(min(start.row, end.row), max(start.row, end.row) + 1):
            for col in range(min(start.col, end.col), max(start.col, end.col) + 1):
                out.append(self.value(target_sheet, col, row))
        return out

    def numeric(self, value):
        if value is None:
            return 0.0
        if isinstance(value, bool):
            return 1.0 if value else 0.0
        if isinstance(value, (int, float)):
            return float(value)
        raise TypeError(f"text in arithmetic: {value!r}")

    def eval(self, node, sheet: str):
        if isinstance(node, Number):
            return node.value
        if isinstance(node, Text):
            return node.value
        if isinstance(node, Boolean):
            return node.value
        if isinstance(node, CellRef):
            return self.ref_value(node, sheet)
        if isinstance(node, FunctionCall):
            name = node.name.upper()
            if name in AGGREGATES:
                numbers = []
                for arg in node.args:
                    if isinstance(arg, RangeRef):
                        numbers.extend(
                            float(v) for v in self.range_values(arg, sheet)
                            if isinstance(v, (int, float)) and not isinstance(v, bool)
                        )
                    else:
                        v = self.eval(arg, sheet)
                        if v is None:
                            continue
                        numbers.append(self.numeric(v))
                if name == "SUM":
                    return float(sum(numbers))
                if name == "COUNT":
                    return float(len(numbers))
                if not numbers:
                    raise ZeroDivisionError(f"{name} over nothing")
                if name == "AVERAGE":
                    return sum(numbers) / len(numbers)
                return min(numbers) if name == "MIN" else max(numbers)
            arg = self.numeric(self.eval(node.args[0], sheet))
            table = {
                "ABS": abs, "SQRT": math.sqrt, "COS": math.cos,
                "SIN": math.sin, "EXP": math.exp, "LN": math.log,
            }
            return table[name](arg)
        if isinstance(node, BinaryOp):
            if node.op == "&":
                return str(self.eval(node.lhs, sheet)) + str(self.eval(node.rhs, sheet))
            a = self.numeric(self.eval(node.lhs, sheet))
            b = self.numeric(self.eval(node.rhs, sheet))
            return {
                "+": lambda: a + b,
                "-": lambda: a - b,
                "*": lambda: a * b,
                "/": lambda: a / b,
                "^": lambda: float(a ** b),
                "=": lambda: a == b,
                "<>": lambda: a != b,
                "<": lambda: a < b,
                ">": lambda: a > b,
                "<=": lambda: a <= b,
                ">=": lambda: a >= b,
            }[node.op]()
        if isinstance(node, UnaryOp):
            v = self.numeric(self.eval(node.operand, sheet))
            if node.op == "%":
                return v / 100.0
            return -v if node.op == "-" else v
        raise TypeError(f"cannot evaluate {node!r}")


def rel_equal(a, b, tol=1e-12) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool) or isinstance(a, str) or isinstance(b, str):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# Brute-force grouping oracle


def _runs_within(flags, threshold):
    run = 0
    for empty in flags:
        run = run + 1 if empty else 0
        if run > threshold:
            return False
    return True


def rect_valid(seed, width, height, sig, grid, covered, assigned, threshold):
    """Independent re-statement of the rectangle validity rules."""
    c0, r0 = seed
    members = []
    for r in range(r0, r0 + height):
        for c in range(c0, c0 + width):
            cell = grid.get((c, r))
            if cell == sig and (c, r) not in assigned:
                members.append((c, r))
            elif cell is None and (c, r) not in covered:
                continue
            else:
                return None
    member_set = set(members)
    for c in range(c0, c0 + width):
        flags = [(c, r) not in member_set for r in range(r0, r0 + height)]
        if not _runs_within(flags, threshold):
            return None
    for r in range(r0, r0 + height):
        flags = [(c, r) not in member_set for c in range(c0, c0 + width)]
        if not _runs_within(flags, threshold):
            return None
    if not any(r == r0 + height - 1 for _, r in members):
        return None
    if not any(c == c0 + width - 1 for c, _ in members):
        return None
    missing = width * height - len(members)
    return members, missing


def directional_extent(seed, sig, grid, covered, assigned, threshold, dc, dr):
    """Walk right or down from the seed, bridging empty runs up to threshold,
    until a foreign cell or an over-long gap; length to the last member."""
    c0, r0 = seed
    extent = 1
    run = 0
    step = 1
    while True:
        coord = (c0 + dc * step, r0 + dr * step)
        cell = grid.get(coord)
        if cell == sig and coord not in assigned:
            extent = step + 1
            run = 0
        elif cell is None and coord not in covered:
            run += 1
            if run > threshold:
                break
        else:
            break
        step += 1
    return extent


def brute_force_groups(grid, blocked, threshold, max_col=8, max_row=8):
    """Exhaustive best-rectangle search with the same scan order and growth
    policy (directional extents; area, then height, then fewer missing)."""
    assigned = set()
    covered = set(blocked)
    result = {}
    group_id = 0
    for seed in sorted(grid, key=lambda cr: (cr[1], cr[0])):
        if seed in assigned:
            continue
        sig = grid[seed]
        c0, r0 = seed
        best_key = None
        best_members = None
        best_rect = None
        ext_h = directional_extent(seed, sig, grid, covered, assigned, threshold, 0, 1)
        ext_w = directional_extent(seed, sig, grid, covered, assigned, threshold, 1, 0)
        for height in range(1, ext_h + 1):
            for width in range(1, ext_w + 1):
                check = rect_valid(seed, width, height, sig, grid, covered, assigned, threshold)
                if check is None:
                    continue
                members, missing = check
                key = (len(members), -missing, height)
                if best_key is None or key > best_key:
                    best_key = key
                    best_members = members
                    best_rect = (c0, r0, c0 + width - 1, r0 + height - 1)
        for member in best_members:
            assigned.add(member)
            result[member] = group_id
        left, top, right, bottom = best_rect
        for c in range(left, right + 1):
            for r in range(top, bottom + 1):
                covered.add((c, r))
        group_id += 1
    return result
