"""Two-step formula normalization.

Step one rewrites each cell reference as a location expression relative to
the referencing cell: relative components become signed offsets, $-marked
components keep their absolute coordinate, cross-sheet references keep the
absolute sheet name.

Step two replaces each distinct referenced cell with a canonical variable
(var0, var1, ...) in left-to-right first-occurrence order and renders the
remaining formula in canonical form (upper-case function names, no
whitespace). Two cells with equal canonical text and equal bindings compute
the same thing relative to their own positions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .addressing import CellAddress, LocationExpression
from .formulas import (
    BinaryOp,
    CellRef,
    FunctionCall,
    Node,
    RangeRef,
    UnaryOp,
    VarRef,
    parse_canonical,
    render_expression,
    render_formula,
)


@dataclass(frozen=True)
class NormalizedExpression:
    text: str
    bindings: tuple[LocationExpression, ...]

    def __str__(self) -> str:
        binds = ", ".join(f"var{i}={b}" for i, b in enumerate(self.bindings))
        return f"{self.text} [{binds}]"


def normalize_reference(base: CellAddress, ref: CellRef) -> LocationExpression:
    """Location expression of ref relative to base."""
    sheet = None
    if ref.sheet is not None and ref.sheet != base.sheet:
        sheet = ref.sheet
    col = ref.col if ref.col_abs else ref.col - base.column
    row = ref.row if ref.row_abs else ref.row - base.row
    return LocationExpression(sheet, col, ref.col_abs, row, ref.row_abs)


def _walk(node: Node, base: CellAddress, table: dict) -> Node:
    if isinstance(node, CellRef):
        loc = normalize_reference(base, node)
        if loc not in table:
            table[loc] = len(table)
        return VarRef(table[loc])
    if isinstance(node, RangeRef):
        start = _walk(node.start, base, table)
        end = _walk(node.end, base, table)
        return RangeRef(start, end)
    if isinstance(node, FunctionCall):
        return FunctionCall(node.name, tuple(_walk(a, base, table) for a in node.args))
    if isinstance(node, BinaryOp):
        return BinaryOp(node.op, _walk(node.lhs, base, table), _walk(node.rhs, base, table))
    if isinstance(node, UnaryOp):
        return UnaryOp(node.op, _walk(node.operand, base, table))
    return node


def normalize_expression(base: CellAddress, ast: Node) -> NormalizedExpression:
    """Canonical text plus ordered variable bindings for a parsed cell formula."""
    table: dict[LocationExpression, int] = {}
    canonical_ast = _walk(ast, base, table)
    ordered = sorted(table.items(), key=lambda kv: kv[1])
    return NormalizedExpression(
        text=render_expression(canonical_ast, canonical=True),
        bindings=tuple(loc for loc, _ in ordered),
    )


def _substitute(node: Node, refs: dict[int, CellRef]) -> Node:
    if isinstance(node, VarRef):
        return refs[node.index]
    if isinstance(node, RangeRef):
        return RangeRef(_substitute(node.start, refs), _substitute(node.end, refs))
    if isinstance(node, FunctionCall):
        return FunctionCall(node.name, tuple(_substitute(a, refs) for a in node.args))
    if isinstance(node, BinaryOp):
        return BinaryOp(node.op, _substitute(node.lhs, refs), _substitute(node.rhs, refs))
    if isinstance(node, UnaryOp):
        return UnaryOp(node.op, _substitute(node.operand, refs))
    return node


def binding_to_ref(base: CellAddress, loc: LocationExpression) -> CellRef:
    """Concrete A1 reference for one binding applied at base.

    Raises OutOfBoundsError when the binding maps below row/column 1.
    """
    target = loc.apply(base)  # validates bounds
    return CellRef(loc.sheet, target.column, loc.col_abs, target.row, loc.row_abs)


def denormalize(base: CellAddress, nexpr: NormalizedExpression) -> str:
    """Concrete '=...' formula text for nexpr instantiated at base."""
    refs = {i: binding_to_ref(base, loc) for i, loc in enumerate(nexpr.bindings)}
    ast = parse_canonical(nexpr.text)
    return render_formula(_substitute(ast, refs))
