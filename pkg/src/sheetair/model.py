"""AIR domain types and their serializations.

The dataflow graph holds named rectangular groups (raw values or one shared
formula) and directed edges (u, v) meaning v reads cells of u. Exports:
the textual listing, a versioned JSON document, and Graphviz DOT.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .addressing import CellRange, format_a1, parse_a1, LocationExpression
from .errors import SchemaError
from .grouping import Coord, Diagnostic
from .normalize import NormalizedExpression
from .workbook import CellValue, WorkbookModel

SCHEMA_VERSION = 1


@dataclass
class RawGroup:
    name: str
    range: CellRange
    value_type: str
    values: list[CellValue]  # row-major, missing positions skipped
    missing: frozenset[Coord]
    header: Optional[Coord] = None

    @property
    def kind(self) -> str:
        return "raw"

    def member_positions(self) -> list[int]:
        return _member_positions(self.range, self.missing)

    def element_count(self) -> int:
        return self.range.area - len(self.missing)

    def listing_line(self) -> str:
        return f"RAW GROUP: ({self.name} {self.range.ref()})"

    def __str__(self) -> str:
        return self.listing_line()


@dataclass
class FormulaGroup:
    name: str
    range: CellRange
    value_type: str
    missing: frozenset[Coord]
    canonical: Optional[NormalizedExpression]
    formula: str  # rendered group-name syntax, leading "="
    raw_formula: tuple[str, str]  # original text at first / last member cell
    dependencies: list[str]  # group names, first-reference order
    header: Optional[Coord] = None
    pending: Optional[object] = None  # GroupEdit while dirty

    @property
    def kind(self) -> str:
        return "formula"

    @property
    def dirty(self) -> bool:
        return self.pending is not None

    def member_positions(self) -> list[int]:
        return _member_positions(self.range, self.missing)

    def element_count(self) -> int:
        return self.range.area - len(self.missing)

    def listing_line(self) -> str:
        return f"FORMULA GROUP: ({self.name} {self.range.ref()})"

    def __str__(self) -> str:
        return self.listing_line()


Group = Union[RawGroup, FormulaGroup]


def _member_positions(rect: CellRange, missing: frozenset[Coord]) -> list[int]:
    out = []
    for pos in range(rect.area):
        addr = rect.cell_at(pos)
        if (addr.column, addr.row) not in missing:
            out.append(pos)
    return out


@dataclass
class DataFlowGraph:
    groups: dict[str, Group] = field(default_factory=dict)
    edges: set[tuple[str, str]] = field(default_factory=set)
    source: Optional[WorkbookModel] = None
    threshold: int = 0
    sheet_order: list[str] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def groups_in_order(self) -> list[Group]:
        """Workbook sheet order, then top-left address row-major."""
        sheet_rank = {name: i for i, name in enumerate(self.sheet_order)}
        return sorted(
            self.groups.values(),
            key=lambda g: (
                sheet_rank.get(g.range.sheet, len(sheet_rank)),
                g.range.top,
                g.range.left,
            ),
        )

    def group_at(self, sheet: str, col: int, row: int) -> Optional[Group]:
        for group in self.groups.values():
            if group.range.sheet == sheet and group.range.contains_coord(col, row):
                return group
        return None


# ---------------------------------------------------------------------------
# Listing


def to_listing(graph: DataFlowGraph) -> str:
    """One line per group in deterministic order; each formula group is
    followed by one tab-indented line per dependency."""
    lines = []
    for group in graph.groups_in_order():
        lines.append(group.listing_line())
        if isinstance(group, FormulaGroup):
            for dep in group.dependencies:
                target = graph.groups.get(dep)
                lines.append("\t" + (target.listing_line() if target else f"({dep} ?)"))
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# DOT


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_label(name: str, range_ref: str) -> str:
    # \n is a DOT line break, so it must survive the quoting
    esc = lambda t: t.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{esc(name)}\\n{esc(range_ref)}"'


def to_dot(graph: DataFlowGraph) -> str:
    """Graphviz digraph: box nodes for raw groups, ellipses for formula groups."""
    lines = ["digraph {"]
    for group in graph.groups_in_order():
        shape = "box" if isinstance(group, RawGroup) else "ellipse"
        label = _dot_label(group.name, group.range.ref())
        lines.append(f"\t{_dot_quote(group.name)} [label={label}, shape={shape}];")
    for u, v in sorted(graph.edges):
        lines.append(f"\t{_dot_quote(u)} -> {_dot_quote(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON


def _coord_a1(coord: Coord) -> str:
    return format_a1(coord[0], coord[1])


def _binding_payload(loc: LocationExpression) -> dict:
    return {
        "sheet": loc.sheet,
        "col": loc.col,
        "col_abs": loc.col_abs,
        "row": loc.row,
        "row_abs": loc.row_abs,
    }


def _group_payload(group: Group) -> dict:
    base = {
        "kind": group.kind,
        "name": group.name,
        "sheet": group.range.sheet,
        "range": group.range.a1(),
        "value_type": group.value_type,
        "missing": sorted(_coord_a1(c) for c in group.missing),
        "header": _coord_a1(group.header) if group.header else None,
    }
    if isinstance(group, RawGroup):
        base["values"] = group.values
    else:
        base["formula"] = group.formula
        base["raw_formula"] = list(group.raw_formula)
        base["dependencies"] = group.dependencies
        base["canonical"] = (
            None
            if group.canonical is None
            else {
                "text": group.canonical.text,
                "bindings": [_binding_payload(b) for b in group.canonical.bindings],
            }
        )
    return base


def to_json(graph: DataFlowGraph) -> bytes:
    payload = {
        "version": SCHEMA_VERSION,
        "threshold": graph.threshold,
        "sheets": list(graph.sheet_order),
        "groups": [_group_payload(g) for g in graph.groups_in_order()],
        "edges": sorted([u, v] for u, v in graph.edges),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _expect(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise SchemaError(f"missing key {key!r}", where)
    value = obj[key]
    if types is not None and not isinstance(value, types):
        raise SchemaError(f"key {key!r} has wrong type {type(value).__name__}", where)
    return value


def _binding_from_payload(obj: dict, where: str) -> LocationExpression:
    return LocationExpression(
        sheet=obj.get("sheet"),
        col=int(_expect(obj, "col", (int,), where)),
        col_abs=bool(_expect(obj, "col_abs", (bool,), where)),
        row=int(_expect(obj, "row", (int,), where)),
        row_abs=bool(_expect(obj, "row_abs", (bool,), where)),
    )


def _coord_from_a1(text: str, where: str) -> Coord:
    try:
        return parse_a1(text)
    except Exception as exc:
        raise SchemaError(f"bad coordinate {text!r}: {exc}", where)


def from_json(data: bytes) -> DataFlowGraph:
    """Rebuild a graph from to_json output. The workbook handle is not
    serialized, so the result has source=None (queries and exports work,
    rewrite operations need a live workbook)."""
    try:
        payload = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"not valid JSON: {exc}", "$")
    if not isinstance(payload, dict):
        raise SchemaError("top level must be an object", "$")
    version = _expect(payload, "version", (int,), "$.version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version}", "$.version")
    graph = DataFlowGraph(
        threshold=int(_expect(payload, "threshold", (int,), "$.threshold")),
        sheet_order=list(_expect(payload, "sheets", (list,), "$.sheets")),
    )
    groups = _expect(payload, "groups", (list,), "$.groups")
    for i, obj in enumerate(groups):
        where = f"$.groups[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError("group must be an object", where)
        kind = _expect(obj, "kind", (str,), where)
        name = _expect(obj, "name", (str,), where)
        sheet = _expect(obj, "sheet", (str,), where)
        try:
            rect = CellRange.from_a1(sheet, _expect(obj, "range", (str,), where))
        except Exception as exc:
            raise SchemaError(f"bad range: {exc}", where + ".range")
        missing = frozenset(
            _coord_from_a1(m, where + ".missing") for m in _expect(obj, "missing", (list,), where)
        )
        header = obj.get("header")
        header_coord = _coord_from_a1(header, where + ".header") if header else None
        value_type = _expect(obj, "value_type", (str,), where)
        if kind == "raw":
            group: Group = RawGroup(
                name=name, range=rect, value_type=value_type,
                values=list(_expect(obj, "values", (list,), where)),
                missing=missing, header=header_coord,
            )
        elif kind == "formula":
            canon = obj.get("canonical")
            canonical = None
            if canon is not None:
                if not isinstance(canon, dict):
                    raise SchemaError("canonical must be an object", where + ".canonical")
                canonical = NormalizedExpression(
                    text=_expect(canon, "text", (str,), where + ".canonical"),
                    bindings=tuple(
                        _binding_from_payload(b, f"{where}.canonical.bindings[{j}]")
                        for j, b in enumerate(
                            _expect(canon, "bindings", (list,), where + ".canonical")
                        )
                    ),
                )
            raw_formula = _expect(obj, "raw_formula", (list,), where)
            if len(raw_formula) != 2:
                raise SchemaError("raw_formula must have two entries", where + ".raw_formula")
            group = FormulaGroup(
                name=name, range=rect, value_type=value_type, missing=missing,
                canonical=canonical,
                formula=_expect(obj, "formula", (str,), where),
                raw_formula=(raw_formula[0], raw_formula[1]),
                dependencies=list(_expect(obj, "dependencies", (list,), where)),
                header=header_coord,
            )
        else:
            raise SchemaError(f"unknown group kind {kind!r}", where + ".kind")
        if name in graph.groups:
            raise SchemaError(f"duplicate group name {name!r}", where + ".name")
        graph.groups[name] = group
    edges = _expect(payload, "edges", (list,), "$.edges")
    for i, pair in enumerate(edges):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError("edge must be a [from, to] pair", f"$.edges[{i}]")
        u, v = pair
        if u not in graph.groups or v not in graph.groups:
            raise SchemaError(f"edge references unknown group {u!r} or {v!r}", f"$.edges[{i}]")
        graph.edges.add((u, v))
    return graph


def graphs_isomorphic(a: DataFlowGraph, b: DataFlowGraph) -> bool:
    """Structural equality: same names, each with same kind and range, and the
    same edge set."""
    if set(a.groups) != set(b.groups):
        return False
    for name, ga in a.groups.items():
        gb = b.groups[name]
        if ga.kind != gb.kind or ga.range != gb.range:
            return False
    return a.edges == b.edges


def iter_group_cells(group: Group) -> Iterable[Coord]:
    for addr in group.range.cells():
        coord = (addr.column, addr.row)
        if coord not in group.missing:
            yield coord
