"""Group-level formula rendering, editing, lowering, and evaluation.

Rendering maps canonical variables back onto groups: a binding that walks a
group element-for-element renders as the bare group name, a constant target
renders as Name[i], a constant range renders as Name[a:b] (or the bare name
when it spans the whole group). Bindings with no group-level shape fall back
to the first member's concrete A1 text.

Element alignment is by range position (row-major index inside the range,
counting gaps), so groups with the same rectangle shape stay row-aligned
even when their missing cells differ.

Edits are buffered on the group (dirty flag) and materialized by
rewrite_cells, which lowers each dirty group to one per-cell formula per
non-missing member, writes scheduled headers, rebuilds the graph from the
updated workbook, and refreshes cached values through the evaluator where
its function subset allows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Optional, Union

from .addressing import CellAddress, CellRange
from .errors import (
    EditError,
    EvalCycleError,
    EvalError,
    EvalTypeError,
    LoweringError,
    OutOfBoundsError,
    OverlapError,
    ShapeMismatchError,
    UnknownGroupError,
    UnknownSheetError,
    UnsupportedFunctionError,
)
from .formulas import (
    BinaryOp,
    Boolean,
    CellRef,
    FunctionCall,
    GroupElem,
    GroupRef,
    GroupSlice,
    Node,
    Number,
    RangeRef,
    Text,
    UnaryOp,
    VarRef,
    format_number,
    parse_canonical,
    parse_group_formula,
    render_formula,
)
from .graphbuild import lookup, sanitize_base
from .model import DataFlowGraph, FormulaGroup, Group, RawGroup
from .workbook import CellValue

_AGGREGATES = {"SUM", "AVERAGE", "MIN", "MAX", "COUNT"}
_SCALAR_FUNCTIONS = {"ABS", "SQRT", "COS", "SIN", "EXP", "LN"}


@dataclass
class GroupEdit:
    """A recorded (but not yet lowered) group formula change."""

    name: str
    text: str
    ast: Node
    header_text: Optional[str] = None  # add_group: header to write on rewrite


# ---------------------------------------------------------------------------
# Element helpers


def member_cells(group: Group) -> list[CellAddress]:
    return [group.range.cell_at(p) for p in group.member_positions()]


def element_index(group: Group, addr: CellAddress) -> Optional[int]:
    """1-based index of addr among the group's members, None if missing/outside."""
    if not group.range.contains(addr):
        return None
    position = group.range.position_of(addr)
    positions = group.member_positions()
    if position not in positions:
        return None
    return positions.index(position) + 1


def element_cell(group: Group, index: int) -> CellAddress:
    positions = group.member_positions()
    if not 1 <= index <= len(positions):
        raise EditError(f"{group.name} has {len(positions)} elements, no element {index}")
    return group.range.cell_at(positions[index - 1])


# ---------------------------------------------------------------------------
# Rendering


def _map_single(graph: DataFlowGraph, group: Group, binding) -> Optional[tuple]:
    members = member_cells(group)
    targets = []
    for member in members:
        try:
            targets.append(binding.apply(member))
        except OutOfBoundsError:
            return None

    first = targets[0]
    u = graph.group_at(first.sheet, first.column, first.row)
    if u is not None and u.range.width == group.range.width and u.range.height == group.range.height:
        # Position alignment onto u's range; a target landing on one of u's
        # missing cells still reads as "same relative index" (it shows up as
        # a lowering error only if this group is edited and rewritten).
        elementwise = True
        for member, target in zip(members, targets):
            expected = u.range.cell_at(group.range.position_of(member))
            if (target.sheet, target.column, target.row) != (
                expected.sheet, expected.column, expected.row,
            ):
                elementwise = False
                break
        if elementwise:
            return ("elementwise", u)

    if all(t == first for t in targets):
        if u is not None and (first.column, first.row) not in u.missing:
            idx = element_index(u, first)
            if idx is not None:
                return ("element", u, idx)
    return None


def _map_pair(graph: DataFlowGraph, group: Group, b1, b2) -> Optional[tuple]:
    rects = []
    for member in member_cells(group):
        try:
            p1 = b1.apply(member)
            p2 = b2.apply(member)
        except OutOfBoundsError:
            return None
        if p1.sheet != p2.sheet:
            return None
        rects.append(
            CellRange(
                p1.sheet,
                min(p1.column, p2.column), min(p1.row, p2.row),
                max(p1.column, p2.column), max(p1.row, p2.row),
            )
        )
    rect = rects[0]
    if any(r != rect for r in rects):
        return None  # per-member varying ranges have no group-level form
    u = graph.group_at(rect.sheet, rect.left, rect.top)
    if u is None:
        return None
    if u.range == rect:
        return ("whole", u)
    if not (u.range.width == 1 or u.range.height == 1):
        return None  # sub-slices of 2D groups are not contiguous element runs
    inter = u.range.intersection(rect)
    if inter != rect:
        return None
    lo = element_index(u, CellAddress(rect.sheet, rect.left, rect.top))
    hi = element_index(u, CellAddress(rect.sheet, rect.right, rect.bottom))
    if lo is None or hi is None:
        return None
    return ("slice", u, lo, hi)


def _fallback_ref(group: Group, binding) -> CellRef:
    from .normalize import binding_to_ref

    ref = binding_to_ref(member_cells(group)[0], binding)
    if ref.sheet is None:
        ref = CellRef(group.range.sheet, ref.col, ref.col_abs, ref.row, ref.row_abs)
    return ref


def render_group_formula(graph: DataFlowGraph, group: FormulaGroup) -> str:
    """Group-name syntax ('=SUM(Clipper.Pdd,Clipper.PCS)') for a formula group."""
    if group.canonical is None:
        return group.formula
    bindings = group.canonical.bindings

    def walk(node: Node) -> Node:
        if isinstance(node, RangeRef) and isinstance(node.start, VarRef):
            mapped = _map_pair(
                graph, group, bindings[node.start.index], bindings[node.end.index]
            )
            if mapped is None:
                return RangeRef(
                    _fallback_ref(group, bindings[node.start.index]),
                    _fallback_ref(group, bindings[node.end.index]),
                )
            if mapped[0] == "whole":
                return GroupRef(mapped[1].name)
            return GroupSlice(mapped[1].name, mapped[2], mapped[3])
        if isinstance(node, VarRef):
            mapped = _map_single(graph, group, bindings[node.index])
            if mapped is None:
                return _fallback_ref(group, bindings[node.index])
            if mapped[0] == "elementwise":
                return GroupRef(mapped[1].name)
            return GroupElem(mapped[1].name, mapped[2])
        if isinstance(node, RangeRef):
            return node
        if isinstance(node, FunctionCall):
            return FunctionCall(node.name, tuple(walk(a) for a in node.args))
        if isinstance(node, BinaryOp):
            return BinaryOp(node.op, walk(node.lhs), walk(node.rhs))
        if isinstance(node, UnaryOp):
            return UnaryOp(node.op, walk(node.operand))
        return node

    ast = walk(parse_canonical(group.canonical.text))
    return render_formula(ast, canonical=True)


# ---------------------------------------------------------------------------
# Edit validation


def _validate_group_formula(
    graph: DataFlowGraph, target_range: CellRange, ast: Node
) -> list[str]:
    """Check shapes and referenced names; returns dependency names in
    first-reference order."""
    deps: list[str] = []
    target_scalar = target_range.area == 1

    def note(name: str) -> Group:
        u = lookup(graph, name)
        if name not in deps:
            deps.append(name)
        return u

    def walk(node: Node, aggregate_arg: bool) -> None:
        if isinstance(node, GroupRef):
            u = note(node.name)
            if target_scalar:
                if aggregate_arg or u.range.area == 1:
                    return
                raise ShapeMismatchError(
                    f"{node.name} cannot feed a single-cell group element-wise",
                    target_range.area, u.element_count(),
                )
            if u.range.area == 1:
                return  # scalar broadcast
            if (u.range.width, u.range.height) != (target_range.width, target_range.height):
                raise ShapeMismatchError(
                    f"element-wise operand {node.name} does not match the target shape",
                    target_range.area, u.range.area,
                )
            return
        if isinstance(node, GroupSlice):
            u = note(node.name)
            if not aggregate_arg:
                raise EditError(f"slice {node.name}[{node.lo}:{node.hi}] needs an aggregate context")
            if u.range.width > 1 and u.range.height > 1:
                raise EditError(f"cannot slice 2D group {node.name}")
            count = u.element_count()
            if node.hi > count:
                raise EditError(
                    f"slice [{node.lo}:{node.hi}] exceeds {node.name}'s {count} elements"
                )
            return
        if isinstance(node, GroupElem):
            u = note(node.name)
            count = u.element_count()
            if node.index > count:
                raise EditError(f"{node.name} has {count} elements, no element {node.index}")
            return
        if isinstance(node, RangeRef):
            if not aggregate_arg:
                raise EditError("a range reference needs an aggregate context")
            return
        if isinstance(node, FunctionCall):
            is_aggregate = node.name.upper() in _AGGREGATES
            for arg in node.args:
                walk(arg, aggregate_arg=is_aggregate)
            return
        if isinstance(node, BinaryOp):
            walk(node.lhs, False)
            walk(node.rhs, False)
            return
        if isinstance(node, UnaryOp):
            walk(node.operand, False)
            return
        # literals and plain cell refs lower verbatim

    walk(ast, False)
    return deps


def _refresh_edges(graph: DataFlowGraph, name: str, deps: list[str]) -> None:
    graph.edges = {(u, v) for u, v in graph.edges if v != name}
    for dep in deps:
        graph.edges.add((dep, name))


def set_group_formula(graph: DataFlowGraph, name: str, text: str) -> None:
    """Record a new group formula; marks the group dirty and rewires edges."""
    group = lookup(graph, name)
    if not isinstance(group, FormulaGroup):
        raise EditError(f"{name} is a raw group; only formula groups take formulas")
    ast = parse_group_formula(text)
    deps = _validate_group_formula(graph, group.range, ast)
    group.pending = GroupEdit(name=name, text=text, ast=ast)
    group.formula = render_formula(ast, canonical=True)
    group.dependencies = deps
    _refresh_edges(graph, name, deps)


def add_group(
    graph: DataFlowGraph, sheet: str, header: str, range_text: str, formula: str
) -> FormulaGroup:
    """Create a new formula group over an empty rectangle. The header string is
    written above the range's top-left cell on rewrite so re-analysis
    reproduces the name."""
    if sheet not in graph.sheet_order:
        raise UnknownSheetError(sheet)
    rect = CellRange.from_a1(sheet, range_text)
    if rect.top < 2:
        raise EditError("range must start at row 2 or below to leave room for the header")
    for other in graph.groups.values():
        if other.range.intersects(rect):
            raise OverlapError(rect.ref(), other.name)
    base = sanitize_base(header)
    if not base:
        raise EditError(f"header {header!r} sanitizes to nothing usable as a name")
    name = f"{sheet}.{base}"
    if name in graph.groups:
        raise EditError(f"name collision: {name} already exists")
    header_coord = (rect.left, rect.top - 1)
    if graph.source is not None and graph.source.get(sheet, *header_coord) is not None:
        raise EditError(f"header cell {sheet}!{rect.left},{rect.top - 1} is occupied")
    for other in graph.groups.values():
        if other.range.sheet == sheet and other.range.contains_coord(*header_coord):
            raise EditError(f"header cell sits inside group {other.name}")

    ast = parse_group_formula(formula)
    deps = _validate_group_formula(graph, rect, ast)
    group = FormulaGroup(
        name=name, range=rect, value_type="unknown", missing=frozenset(),
        canonical=None, formula=render_formula(ast, canonical=True),
        raw_formula=("", ""), dependencies=deps, header=header_coord,
        pending=GroupEdit(name=name, text=formula, ast=ast, header_text=header),
    )
    graph.groups[name] = group
    _refresh_edges(graph, name, deps)
    return group


# ---------------------------------------------------------------------------
# Lowering


def _abs_ref(addr: CellAddress, on_sheet: str) -> CellRef:
    sheet = addr.sheet if addr.sheet != on_sheet else None
    return CellRef(sheet, addr.column, True, addr.row, True)


def _rel_ref(addr: CellAddress, on_sheet: str) -> CellRef:
    sheet = addr.sheet if addr.sheet != on_sheet else None
    return CellRef(sheet, addr.column, False, addr.row, False)


def _lower_ast(
    graph: DataFlowGraph, group: FormulaGroup, ast: Node, position: int
) -> Node:
    """Instantiate the pending group formula for the member at this range
    position. Element-wise refs become relative A1 refs, group-level operands
    become absolute refs so re-analysis sees one coherent formula."""
    sheet = group.range.sheet
    target_scalar = group.range.area == 1

    def walk(node: Node, aggregate_arg: bool) -> Node:
        if isinstance(node, GroupRef):
            u = lookup(graph, node.name)
            if u.range.area == 1:
                return _abs_ref(member_cells(u)[0], sheet)
            if target_scalar and aggregate_arg:
                start = u.range.cell_at(0)
                end = u.range.cell_at(u.range.area - 1)
                return RangeRef(_abs_ref(start, sheet), _abs_ref(end, sheet))
            cell = u.range.cell_at(position)
            if (cell.column, cell.row) in u.missing:
                raise LoweringError(
                    f"{group.name}: {node.name} is missing the element at "
                    f"position {position + 1} ({cell.a1()})"
                )
            return _rel_ref(cell, sheet)
        if isinstance(node, GroupSlice):
            u = lookup(graph, node.name)
            return RangeRef(
                _abs_ref(element_cell(u, node.lo), sheet),
                _abs_ref(element_cell(u, node.hi), sheet),
            )
        if isinstance(node, GroupElem):
            u = lookup(graph, node.name)
            return _abs_ref(element_cell(u, node.index), sheet)
        if isinstance(node, FunctionCall):
            is_aggregate = node.name.upper() in _AGGREGATES
            return FunctionCall(
                node.name, tuple(walk(a, aggregate_arg=is_aggregate) for a in node.args)
            )
        if isinstance(node, BinaryOp):
            return BinaryOp(node.op, walk(node.lhs, False), walk(node.rhs, False))
        if isinstance(node, UnaryOp):
            return UnaryOp(node.op, walk(node.operand, False))
        return node  # literals, plain cell refs, plain ranges lower verbatim

    return walk(ast, False)


def rewrite_cells(graph: DataFlowGraph) -> None:
    """Lower every dirty group to per-cell formulas, update the workbook,
    rebuild the graph in place, and refresh cached values where the evaluator
    supports the functions involved."""
    model = graph.source
    if model is None:
        raise EditError("graph has no workbook attached (loaded from JSON?)")
    dirty = [
        g for g in graph.groups_in_order()
        if isinstance(g, FormulaGroup) and g.pending is not None
    ]
    if not dirty:
        return

    touched: set[tuple[str, int, int]] = set()
    for group in dirty:
        edit: GroupEdit = group.pending
        sheet = group.range.sheet
        if edit.header_text is not None and group.header is not None:
            hcol, hrow = group.header
            model.set_value(sheet, hcol, hrow, edit.header_text, "text")
        for position in group.member_positions():
            addr = group.range.cell_at(position)
            lowered = _lower_ast(graph, group, edit.ast, position)
            text = render_formula(lowered, canonical=True)
            model.set_formula(sheet, addr.column, addr.row, text)
            touched.add((sheet, addr.column, addr.row))
        group.pending = None

    from .graphbuild import build_graph  # circular at module level

    rebuilt = build_graph(model, graph.threshold)
    graph.groups = rebuilt.groups
    graph.edges = rebuilt.edges
    graph.sheet_order = rebuilt.sheet_order
    graph.diagnostics = rebuilt.diagnostics

    _refresh_caches(graph, touched)


def _refresh_caches(graph: DataFlowGraph, touched: set[tuple[str, int, int]]) -> None:
    """Recompute cached values for groups containing rewritten cells and for
    everything downstream of them; unsupported formulas lose their caches so
    the spreadsheet recalculates on open."""
    model = graph.source
    stale = {
        g.name
        for g in graph.groups.values()
        if any((g.range.sheet, c, r) in touched for c, r in _covered_coords(g))
    }
    downstream: dict[str, set[str]] = {name: set() for name in graph.groups}
    for u, v in graph.edges:
        downstream[u].add(v)
    queue = list(stale)
    while queue:
        name = queue.pop()
        for nxt in downstream.get(name, ()):
            if nxt not in stale:
                stale.add(nxt)
                queue.append(nxt)

    for group in graph.groups_in_order():
        if group.name not in stale or not isinstance(group, FormulaGroup):
            continue
        try:
            values = evaluate_group(graph, group.name)
        except EvalError:
            values = None
        vtypes = set()
        for position in group.member_positions():
            addr = group.range.cell_at(position)
            record = model.get(group.range.sheet, addr.column, addr.row)
            if record is None:
                continue
            value = values[position] if values is not None else None
            record.value = value
            record.value_type = "number" if isinstance(value, (int, float)) else (
                "boolean" if isinstance(value, bool) else
                "text" if isinstance(value, str) else "unknown"
            )
            vtypes.add(record.value_type)
        group.value_type = vtypes.pop() if len(vtypes) == 1 else "unknown"


def _covered_coords(group: Group):
    for addr in group.range.cells():
        yield (addr.column, addr.row)


# ---------------------------------------------------------------------------
# Evaluation (group-level oracle)


class _RangeValues:
    __slots__ = ("values",)

    def __init__(self, values: list[CellValue]):
        self.values = values


def _numeric(value, context: str) -> float:
    if value is None:
        return 0.0  # empty cells act as 0 in arithmetic
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    raise EvalTypeError(f"text value {value!r} in {context}")


class _Evaluator:
    def __init__(self, graph: DataFlowGraph):
        self.graph = graph
        self.values: dict[str, list[CellValue]] = {}

    def closure(self, name: str) -> dict[str, set[str]]:
        deps_of: dict[str, set[str]] = {}
        for u, v in self.graph.edges:
            deps_of.setdefault(v, set()).add(u)
        needed: dict[str, set[str]] = {}
        queue = [name]
        while queue:
            current = queue.pop()
            if current in needed:
                continue
            needed[current] = set(deps_of.get(current, ()))
            queue.extend(needed[current])
        return needed

    def run(self, name: str) -> list[CellValue]:
        needed = self.closure(name)
        try:
            order = list(TopologicalSorter(needed).static_order())
        except CycleError as exc:
            raise EvalCycleError(exc.args[1] if len(exc.args) > 1 else [name])
        for group_name in order:
            self.eval_group(self.graph.groups[group_name])
        return self.values[name]

    def eval_group(self, group: Group) -> None:
        out: list[CellValue] = [None] * group.range.area
        if isinstance(group, RawGroup):
            for value, position in zip(group.values, group.member_positions()):
                out[position] = value
        else:
            if group.canonical is None:
                raise EvalError(
                    f"{group.name} has pending edits; run rewrite_cells before evaluating"
                )
            ast = parse_canonical(group.canonical.text)
            for position in group.member_positions():
                addr = group.range.cell_at(position)
                out[position] = self.eval_node(ast, group, addr, aggregate_arg=False)
        self.values[group.name] = out

    def cell_value(self, addr: CellAddress) -> CellValue:
        target = self.graph.group_at(addr.sheet, addr.column, addr.row)
        if target is None:
            # Not in any group: empty, or a consumed header cell. Headers
            # still hold values, which matters when a formula references one.
            model = self.graph.source
            if model is not None and model.has_sheet(addr.sheet):
                record = model.get(addr.sheet, addr.column, addr.row)
                if record is not None:
                    return record.value
            return None
        position = target.range.position_of(addr)
        return self.values[target.name][position]

    def eval_node(self, node: Node, group: FormulaGroup, addr: CellAddress, aggregate_arg: bool):
        if isinstance(node, Number):
            return node.value
        if isinstance(node, Text):
            return node.value
        if isinstance(node, Boolean):
            return node.value
        if isinstance(node, VarRef):
            try:
                target = group.canonical.bindings[node.index].apply(addr)
            except OutOfBoundsError:
                raise EvalError(f"{group.name}: reference outside the sheet at {addr.a1()}")
            return self.cell_value(target)
        if isinstance(node, RangeRef):
            if not aggregate_arg:
                raise EvalTypeError("range reference outside an aggregate context")
            b1 = group.canonical.bindings[node.start.index]
            b2 = group.canonical.bindings[node.end.index]
            try:
                p1, p2 = b1.apply(addr), b2.apply(addr)
            except OutOfBoundsError:
                raise EvalError(f"{group.name}: range outside the sheet at {addr.a1()}")
            rect = CellRange(
                p1.sheet,
                min(p1.column, p2.column), min(p1.row, p2.row),
                max(p1.column, p2.column), max(p1.row, p2.row),
            )
            return _RangeValues([self.cell_value(cell) for cell in rect.cells()])
        if isinstance(node, FunctionCall):
            return self.eval_call(node, group, addr)
        if isinstance(node, BinaryOp):
            return self.eval_binary(node, group, addr)
        if isinstance(node, UnaryOp):
            value = self.eval_node(node.operand, group, addr, aggregate_arg=False)
            if node.op == "%":
                return _numeric(value, "percent") / 100.0
            scalar = _numeric(value, "unary arithmetic")
            return -scalar if node.op == "-" else scalar
        raise EvalError(f"cannot evaluate node {node!r}")

    def eval_call(self, node: FunctionCall, group: FormulaGroup, addr: CellAddress):
        name = node.name.upper()
        if name in _AGGREGATES:
            numbers: list[float] = []
            for arg in node.args:
                value = self.eval_node(arg, group, addr, aggregate_arg=True)
                if isinstance(value, _RangeValues):
                    numbers.extend(
                        float(v) for v in value.values
                        if isinstance(v, (int, float)) and not isinstance(v, bool)
                    )
                elif value is None:
                    continue  # empty direct reference: contributes nothing
                else:
                    numbers.append(_numeric(value, f"{name} argument"))
            return self.eval_aggregate(name, numbers)
        if name in _SCALAR_FUNCTIONS:
            if len(node.args) != 1:
                raise EvalError(f"{name} takes one argument, got {len(node.args)}")
            x = _numeric(self.eval_node(node.args[0], group, addr, False), f"{name} argument")
            if name == "ABS":
                return abs(x)
            if name == "SQRT":
                if x < 0:
                    raise EvalError("SQRT of a negative number")
                return math.sqrt(x)
            if name == "COS":
                return math.cos(x)
            if name == "SIN":
                return math.sin(x)
            if name == "EXP":
                return math.exp(x)
            if x <= 0:
                raise EvalError("LN of a non-positive number")
            return math.log(x)
        raise UnsupportedFunctionError(node.name)

    @staticmethod
    def eval_aggregate(name: str, numbers: list[float]):
        if name == "SUM":
            return float(sum(numbers))
        if name == "COUNT":
            return float(len(numbers))
        if not numbers:
            raise EvalError(f"{name} over no values")
        if name == "AVERAGE":
            return sum(numbers) / len(numbers)
        if name == "MIN":
            return min(numbers)
        return max(numbers)

    def eval_binary(self, node: BinaryOp, group: FormulaGroup, addr: CellAddress):
        left = self.eval_node(node.lhs, group, addr, False)
        right = self.eval_node(node.rhs, group, addr, False)
        op = node.op
        if op == "&":
            return _as_text(left) + _as_text(right)
        if op in ("=", "<", ">", "<=", ">=", "<>"):
            return _compare(op, left, right)
        a = _numeric(left, f"operator {op}")
        b = _numeric(right, f"operator {op}")
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                raise EvalError("division by zero")
            return a / b
        try:
            return float(a ** b)
        except (OverflowError, ValueError) as exc:
            raise EvalError(f"power failed: {exc}")


def _as_text(value: CellValue) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, (int, float)):
        return format_number(float(value))
    return str(value)


def _compare(op: str, left: CellValue, right: CellValue):
    if isinstance(left, str) or isinstance(right, str):
        a, b = _as_text(left), _as_text(right)
    else:
        a, b = _numeric(left, "comparison"), _numeric(right, "comparison")
    return {
        "=": a == b, "<>": a != b,
        "<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b,
    }[op]


def evaluate_group(graph: DataFlowGraph, name: str) -> list[CellValue]:
    """Evaluate a group element-wise over its dependency closure in topological
    order. Returns one value per range position, None at missing positions.
    Only the documented function subset is supported."""
    lookup(graph, name)  # raise UnknownGroupError early
    return _Evaluator(graph).run(name)
