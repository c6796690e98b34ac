"""Dataflow graph assembly: resolve group-to-group dependency claims, split
groups so every claim lands on whole groups, assign names, build nodes and
edges, and answer lookups.

Splitting iterates to a fixpoint because cutting a formula group refines its
own outgoing claims, which can force further cuts elsewhere.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, replace
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from .addressing import CellAddress, CellRange, column_letters, parse_a1
from .errors import AddressError, OutOfBoundsError, UnknownGroupError, UnknownSheetError
from .formulas import BinaryOp, FunctionCall, Node, RangeRef, UnaryOp, VarRef, parse_canonical
from .grouping import (
    ClassifiedSheet,
    Diagnostic,
    GroupCandidate,
    classify_cells,
    group_formula_cells,
    group_raw_cells,
)
from .model import DataFlowGraph, FormulaGroup, Group, RawGroup
from .normalize import NormalizedExpression
from .workbook import WorkbookModel

_MAX_SPLIT_ROUNDS = 64


@dataclass(frozen=True)
class DependencyClaim:
    """Cells claimed by one binding (or endpoint pair) of one formula group."""

    from_index: int  # index into the candidate list
    slot: int  # binding slot order within the formula (first-occurrence)
    target: CellRange


def binding_slots(nexpr: NormalizedExpression) -> list[tuple[int, ...]]:
    """Variable slots in first-occurrence order: (i,) for a plain reference,
    (i, j) for the endpoints of a range reference."""
    slots: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()

    def record(key: tuple[int, ...]) -> None:
        if key not in seen:
            seen.add(key)
            slots.append(key)

    def walk(node: Node) -> None:
        if isinstance(node, RangeRef) and isinstance(node.start, VarRef):
            record((node.start.index, node.end.index))
        elif isinstance(node, VarRef):
            record((node.index,))
        elif isinstance(node, RangeRef):
            walk(node.start)
            walk(node.end)
        elif isinstance(node, FunctionCall):
            for arg in node.args:
                walk(arg)
        elif isinstance(node, BinaryOp):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, UnaryOp):
            walk(node.operand)

    walk(parse_canonical(nexpr.text))
    return slots


def resolve_dependencies(
    candidates: list[GroupCandidate],
    sheet_names: list[str],
    diagnostics: Optional[list[Diagnostic]] = None,
) -> list[DependencyClaim]:
    """One claim per (formula candidate, binding slot): the bounding rectangle
    of that binding applied to every member cell."""
    claims: list[DependencyClaim] = []
    known_sheets = set(sheet_names)
    for idx, cand in enumerate(candidates):
        if cand.kind != "formula" or cand.nexpr is None:
            continue
        members = [
            CellAddress(cand.sheet, col, row) for col, row in cand.member_coords()
        ]
        for slot_no, slot in enumerate(binding_slots(cand.nexpr)):
            bindings = [cand.nexpr.bindings[i] for i in slot]
            sheet = bindings[0].sheet or cand.sheet
            if sheet not in known_sheets:
                if diagnostics is not None:
                    diagnostics.append(
                        Diagnostic("warning", cand.sheet, cand.range.a1(),
                                   f"reference to nonexistent sheet {sheet!r}")
                    )
                continue
            cols: list[int] = []
            rows: list[int] = []
            oob = False
            for member in members:
                for binding in bindings:
                    try:
                        target = binding.apply(member)
                    except OutOfBoundsError:
                        oob = True
                        continue
                    cols.append(target.column)
                    rows.append(target.row)
            if oob and diagnostics is not None:
                diagnostics.append(
                    Diagnostic("warning", cand.sheet, cand.range.a1(),
                               "reference outside sheet bounds for some cells")
                )
            if not cols:
                continue
            claims.append(
                DependencyClaim(
                    from_index=idx,
                    slot=slot_no,
                    target=CellRange(sheet, min(cols), min(rows), max(cols), max(rows)),
                )
            )
    return claims


# ---------------------------------------------------------------------------
# Conflict splitting


def _cut_and_merge(cand: GroupCandidate, hits: list[CellRange]) -> list[GroupCandidate]:
    """Cut cand at every claimed boundary, then re-merge adjacent fragments
    with identical claiming-set signatures (vertical merges first)."""
    rect = cand.range
    row_cuts = {rect.top, rect.bottom + 1}
    col_cuts = {rect.left, rect.right + 1}
    clipped = []
    for hit in hits:
        inter = rect.intersection(hit)
        if inter is None:
            continue
        clipped.append(inter)
        row_cuts.update((inter.top, inter.bottom + 1))
        col_cuts.update((inter.left, inter.right + 1))
    rows = sorted(row_cuts)
    cols = sorted(col_cuts)

    fragments: list[CellRange] = []
    for top, nxt_row in zip(rows, rows[1:]):
        for left, nxt_col in zip(cols, cols[1:]):
            fragments.append(CellRange(rect.sheet, left, top, nxt_col - 1, nxt_row - 1))

    def signature(frag: CellRange) -> frozenset[int]:
        return frozenset(
            i for i, hit in enumerate(clipped)
            if hit.contains_coord(frag.left, frag.top)
            and hit.contains_coord(frag.right, frag.bottom)
        )

    sigs = {frag: signature(frag) for frag in fragments}

    def try_merge(vertical: bool) -> bool:
        nonlocal fragments
        fragments.sort(key=lambda f: (f.left, f.top) if vertical else (f.top, f.left))
        for i, a in enumerate(fragments):
            for b in fragments[i + 1:]:
                if vertical:
                    adjacent = a.left == b.left and a.right == b.right and b.top == a.bottom + 1
                else:
                    adjacent = a.top == b.top and a.bottom == b.bottom and b.left == a.right + 1
                if adjacent and sigs[a] == sigs[b]:
                    merged = CellRange(
                        rect.sheet,
                        a.left, a.top,
                        b.right if not vertical else a.right,
                        b.bottom if vertical else a.bottom,
                    )
                    sig = sigs[a]
                    fragments = [f for f in fragments if f not in (a, b)]
                    fragments.append(merged)
                    sigs[merged] = sig
                    return True
        return False

    while try_merge(vertical=True):
        pass
    while try_merge(vertical=False) or try_merge(vertical=True):
        pass

    member_set = set(cand.member_coords())
    origin = cand.split_origin if cand.split_origin is not None else cand
    out = []
    for frag in sorted(fragments, key=lambda f: (f.top, f.left)):
        frag_members = [
            (c, r) for c, r in member_set if frag.contains_coord(c, r)
        ]
        if not frag_members:
            continue  # a fragment of only bridged empties is no group at all
        frag_missing = frozenset(
            (addr.column, addr.row)
            for addr in frag.cells()
            if (addr.column, addr.row) not in member_set
        )
        out.append(
            replace(cand, range=frag, missing=frag_missing, header=None, split_origin=origin)
        )
    if len(out) == 1:
        # No effective split: keep the original candidate (with its header).
        single = out[0]
        if single.range == cand.range:
            return [cand]
    return out


def split_conflicts(
    candidates: list[GroupCandidate],
    claims: list[DependencyClaim],
    sheet_names: list[str],
    diagnostics: Optional[list[Diagnostic]] = None,
) -> tuple[list[GroupCandidate], list[DependencyClaim]]:
    """Refine candidates until every claim's target is a union of whole groups."""
    cands = list(candidates)
    for _ in range(_MAX_SPLIT_ROUNDS):
        hits_by_target: dict[int, list[CellRange]] = {}
        needs_split = False
        for claim in claims:
            for tidx, cand in enumerate(cands):
                if cand.range.sheet != claim.target.sheet:
                    continue
                inter = cand.range.intersection(claim.target)
                if inter is None:
                    continue
                hits_by_target.setdefault(tidx, []).append(inter)
                if inter != cand.range:
                    needs_split = True
        if not needs_split:
            return cands, claims
        new_cands: list[GroupCandidate] = []
        for idx, cand in enumerate(cands):
            hits = hits_by_target.get(idx, [])
            if hits and any(h != cand.range for h in hits):
                new_cands.extend(_cut_and_merge(cand, hits))
            else:
                new_cands.append(cand)
        cands = new_cands
        # diagnostics stay quiet here: re-resolving every round would repeat them
        claims = resolve_dependencies(cands, sheet_names)
    if diagnostics is not None:
        diagnostics.append(
            Diagnostic("error", "", "", "conflict splitting did not converge")
        )
    return cands, claims


# ---------------------------------------------------------------------------
# Naming


def sanitize_base(text: str) -> Optional[str]:
    """Header string -> identifier: trim, whitespace -> _, strip other
    punctuation, prefix _ when it would start with a digit."""
    base = re.sub(r"\s+", "_", str(text).strip())
    base = re.sub(r"[^A-Za-z0-9_]", "", base)
    if not base:
        return None
    if base[0].isdigit():
        base = "_" + base
    return base


class _NameAllocator:
    def __init__(self, model: WorkbookModel):
        self.model = model
        self.counter = 0
        self.used: set[str] = set()
        self.root_bases: dict[int, str] = {}

    def base_for(self, cand: GroupCandidate) -> str:
        if cand.header is not None:
            record = self.model.get(cand.sheet, cand.header[0], cand.header[1])
            if record is not None and record.value_type == "text":
                base = sanitize_base(record.value)
                if base:
                    return base
        rect = cand.range
        if rect.width == 1:
            return f"Col_{column_letters(rect.left)}"
        if rect.height == 1:
            return f"Row_{rect.top}"
        base = f"Group_{self.counter}"
        self.counter += 1
        return base

    def unique(self, sheet: str, base: str) -> str:
        name = f"{sheet}.{base}"
        k = 1
        while name in self.used:
            name = f"{sheet}.{base}_{k}"
            k += 1
        self.used.add(name)
        return name


def assign_names(candidates: list[GroupCandidate], model: WorkbookModel) -> list[str]:
    """Names parallel to candidates (which must already be in graph order):
    Sheet.Base with §-style header/fallback bases; conflict-split fragments
    inherit the parent base with positional _1.._n suffixes."""
    allocator = _NameAllocator(model)
    siblings: dict[int, list[GroupCandidate]] = {}
    for cand in candidates:
        if cand.split_origin is not None:
            siblings.setdefault(id(cand.split_origin), []).append(cand)

    names = []
    for cand in candidates:
        if cand.split_origin is None:
            base = allocator.base_for(cand)
        else:
            key = id(cand.split_origin)
            if key not in allocator.root_bases:
                allocator.root_bases[key] = allocator.base_for(cand.split_origin)
            flock = sorted(siblings[key], key=lambda c: (c.range.top, c.range.left))
            position = flock.index(cand) + 1
            base = f"{allocator.root_bases[key]}_{position}"
        names.append(allocator.unique(cand.sheet, base))
    return names


# ---------------------------------------------------------------------------
# Build


def _order_candidates(
    candidates: list[GroupCandidate], sheet_names: list[str]
) -> list[GroupCandidate]:
    rank = {name: i for i, name in enumerate(sheet_names)}
    return sorted(candidates, key=lambda c: (rank[c.sheet], c.range.top, c.range.left))


def _formula_value_type(model: WorkbookModel, cand: GroupCandidate) -> str:
    types = set()
    for col, row in cand.member_coords():
        record = model.get(cand.sheet, col, row)
        if record is not None and record.value is not None:
            types.add(record.value_type)
    if len(types) == 1:
        return types.pop()
    return "unknown"


def _materialize(
    cand: GroupCandidate, name: str, model: WorkbookModel
) -> Group:
    members = cand.member_coords()
    if cand.kind == "raw":
        # unparseable-formula cells were classified as raw text; their "value"
        # is the formula text itself
        values = []
        for c, r in members:
            record = model.get(cand.sheet, c, r)
            values.append(record.formula if record.is_formula else record.value)
        return RawGroup(
            name=name, range=cand.range, value_type=cand.value_type,
            values=values, missing=cand.missing, header=cand.header,
        )
    first = model.get(cand.sheet, *members[0])
    last = model.get(cand.sheet, *members[-1])
    return FormulaGroup(
        name=name, range=cand.range,
        value_type=_formula_value_type(model, cand),
        missing=cand.missing, canonical=cand.nexpr,
        formula="",  # rendered after the graph is assembled
        raw_formula=(first.formula or "", last.formula or ""),
        dependencies=[], header=cand.header,
    )


def build_graph(model: WorkbookModel, threshold: int = 0) -> DataFlowGraph:
    """Full pipeline: classify, normalize, group, resolve, split, name, link."""
    diagnostics: list[Diagnostic] = []
    classified = classify_cells(model)
    candidates: list[GroupCandidate] = []
    for cs in classified:
        diagnostics.extend(cs.diagnostics)
        formula_cands = group_formula_cells(cs, threshold)
        raw_cands = group_raw_cells(cs, threshold, formula_cands)
        candidates.extend(formula_cands)
        candidates.extend(raw_cands)

    first_claims = resolve_dependencies(candidates, model.sheet_names)
    refined, _ = split_conflicts(candidates, first_claims, model.sheet_names, diagnostics)
    ordered = _order_candidates(refined, model.sheet_names)
    names = assign_names(ordered, model)
    claims = resolve_dependencies(ordered, model.sheet_names, diagnostics)

    graph = DataFlowGraph(
        source=model, threshold=threshold, sheet_order=list(model.sheet_names),
        diagnostics=diagnostics,
    )
    for cand, name in zip(ordered, names):
        graph.groups[name] = _materialize(cand, name, model)

    group_list = list(graph.groups.values())
    for claim in claims:
        claimer = group_list[claim.from_index]
        covered: list[Group] = []
        covered_area = 0
        for group in group_list:
            if group.range.sheet != claim.target.sheet:
                continue
            inter = group.range.intersection(claim.target)
            if inter is None:
                continue
            covered.append(group)
            covered_area += inter.area
            if inter != group.range:
                diagnostics.append(
                    Diagnostic("error", group.range.sheet, group.range.a1(),
                               f"claim by {claimer.name} covers {group.name} only partially")
                )
        if covered_area < claim.target.area:
            diagnostics.append(
                Diagnostic("warning", claim.target.sheet, claim.target.a1(),
                           f"dangling reference from {claimer.name}: "
                           "some referenced cells are empty")
            )
        for group in sorted(covered, key=lambda g: (g.range.top, g.range.left)):
            if group.name not in claimer.dependencies:
                claimer.dependencies.append(group.name)
            graph.edges.add((group.name, claimer.name))

    _check_cycles(graph)

    from .rewrite import render_group_formula  # circular at module level

    for group in graph.groups.values():
        if isinstance(group, FormulaGroup):
            group.formula = render_group_formula(graph, group)
    return graph


def _check_cycles(graph: DataFlowGraph) -> None:
    deps: dict[str, set[str]] = {name: set() for name in graph.groups}
    for u, v in graph.edges:
        deps[v].add(u)
    try:
        TopologicalSorter(deps).prepare()
    except CycleError as exc:
        cycle = exc.args[1] if len(exc.args) > 1 else []
        graph.diagnostics.append(
            Diagnostic("warning", "", "", f"dependency cycle: {' -> '.join(cycle)}")
        )


# ---------------------------------------------------------------------------
# Queries


def find_group(graph: DataFlowGraph, sheet: str, coord: str) -> Optional[Group]:
    """Group whose range contains sheet!coord; None when the cell is empty."""
    col, row = parse_a1(coord)  # raises AddressError on junk
    if sheet not in graph.sheet_order:
        raise UnknownSheetError(sheet)
    return graph.group_at(sheet, col, row)


def lookup(graph: DataFlowGraph, name: str) -> Group:
    """Exact-name lookup; unknown names list near-miss candidates."""
    try:
        return graph.groups[name]
    except KeyError:
        candidates = tuple(difflib.get_close_matches(name, graph.groups.keys(), n=3))
        raise UnknownGroupError(name, candidates) from None
