"""Cell classification and coherence-driven grouping.

Cells are classified into formula cells (normalized) and raw cells (typed
values). Groups are then grown greedily: scan top-left to bottom-right in
row-major order, and for each unassigned seed pick the largest rectangle of
pairwise-coherent cells reachable rightward and downward. Runs of empty
cells no longer than the tolerance threshold are bridged and recorded as
missing. Ties prefer taller rectangles (spreadsheet data is column
oriented), then fewer missing cells.

Raw cells group the same way with "same type tag" as the coherence test.
String cells that sit in the naming position of a data group (directly above
a column group, left of a row group, above-then-left of a 2D block) are
reserved as headers and never become group members.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional

from .addressing import CellRange
from .errors import FormulaError
from .formulas import parse_formula
from .normalize import NormalizedExpression, normalize_expression
from .workbook import CellValue, WorkbookModel

Coord = tuple[int, int]  # (col, row)


@dataclass
class Diagnostic:
    severity: str  # "warning" | "error"
    sheet: str
    range: str  # A1 or A1:B2, "" when not localized
    message: str

    def __str__(self) -> str:
        where = f"{self.sheet}!{self.range}" if self.range else self.sheet
        return f"{self.severity}: {where}: {self.message}"


@dataclass
class ClassifiedSheet:
    sheet: str
    formula_cells: dict[Coord, NormalizedExpression] = field(default_factory=dict)
    raw_cells: dict[Coord, tuple[CellValue, str]] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def classify_cells(model: WorkbookModel) -> list[ClassifiedSheet]:
    """Split every sheet's populated cells into normalized formula cells and
    typed raw cells. Unparseable formulas fall back to raw text cells with a
    diagnostic; they never poison their neighbors."""
    out = []
    for name in model.sheet_names:
        cs = ClassifiedSheet(sheet=name)
        for (col, row), record in model.cells(name).items():
            if record.is_formula:
                try:
                    ast = parse_formula(record.formula)
                except FormulaError as exc:
                    cs.raw_cells[(col, row)] = (record.formula, "text")
                    cs.diagnostics.append(
                        Diagnostic("warning", name, record.address.a1(),
                                   f"unparseable formula: {exc}")
                    )
                    continue
                cs.formula_cells[(col, row)] = normalize_expression(record.address, ast)
            else:
                cs.raw_cells[(col, row)] = (record.value, record.value_type)
        out.append(cs)
    return out


def are_coherent(a: NormalizedExpression, b: NormalizedExpression) -> bool:
    """True iff canonical text and all location bindings match exactly."""
    return a.text == b.text and a.bindings == b.bindings


@dataclass
class GroupCandidate:
    """A grouped rectangle before naming and conflict splitting."""

    sheet: str
    range: CellRange
    kind: str  # "formula" | "raw"
    nexpr: Optional[NormalizedExpression]  # formula candidates only
    value_type: str  # raw: member type tag; formula: cached-value type or unknown
    missing: frozenset[Coord]
    header: Optional[Coord] = None  # reserved naming cell
    split_origin: Optional["GroupCandidate"] = None  # root candidate a fragment came from

    @property
    def is_single_column(self) -> bool:
        return self.range.width == 1

    @property
    def is_single_row(self) -> bool:
        return self.range.height == 1

    def member_coords(self) -> list[Coord]:
        return [
            (addr.column, addr.row)
            for addr in self.range.cells()
            if (addr.column, addr.row) not in self.missing
        ]


# ---------------------------------------------------------------------------
# Rectangle packing


def _runs_ok(flags: list[bool], threshold: int) -> bool:
    """flags marks empty positions along one line; every run must be <= threshold."""
    run = 0
    for is_empty in flags:
        run = run + 1 if is_empty else 0
        if run > threshold:
            return False
    return True


def _best_rectangle(
    seed: Coord,
    sig: Hashable,
    grid: dict[Coord, Hashable],
    blocked: set[Coord],
    assigned: set[Coord],
    threshold: int,
    col_veto: Optional[Callable[[int, int], bool]] = None,
) -> tuple[CellRange, set[Coord]]:
    """Largest valid rectangle anchored at seed, growing right and down.

    Valid means: every covered cell is either an unassigned cell with the
    seed's signature or empty; empty runs along every row and column are at
    most threshold long; the last row and last column each contain at least
    one member. Of the valid rectangles the one with the most member cells
    wins; ties prefer fewer bridged gaps, then more rows (data is column
    oriented). Area-first preference is provably not monotone in the
    threshold, which the tolerance contract requires.

    col_veto(col, top) stops horizontal growth before a column that carries
    its own header: labelled columns are fields of their own, not extra width.
    """
    c0, r0 = seed

    def probe(dc: int, dr: int) -> int:
        """Directional extent: walk from the seed bridging empty runs of at
        most threshold; stop at a foreign/assigned cell. Returns the count of
        cells from the seed to the last coherent cell reached."""
        extent = 1
        run = 0
        step = 1
        while True:
            coord = (c0 + dc * step, r0 + dr * step)
            cell_sig = grid.get(coord)
            if cell_sig == sig and coord not in assigned:
                extent = step + 1
                run = 0
            elif cell_sig is None and coord not in blocked:
                run += 1
                if run > threshold:
                    break
            else:
                break
            step += 1
        return extent

    max_h = probe(0, 1)
    max_w = probe(1, 0)
    if col_veto is not None:
        for k in range(1, max_w):
            if col_veto(c0 + k, r0):
                max_w = k
                break

    best = None  # (members, -missing, height) maximized
    best_rect: tuple[int, int] = (1, 1)
    best_missing: set[Coord] = set()

    for width in range(1, max_w + 1):
        col_runs = [0] * width
        col_has_member = [False] * width
        missing: set[Coord] = set()
        members = 0
        dead = False
        for height in range(1, max_h + 1):
            row = r0 + height - 1
            row_flags = []
            row_has_member = False
            for k in range(width):
                coord = (c0 + k, row)
                cell_sig = grid.get(coord)
                if cell_sig == sig and coord not in assigned:
                    row_flags.append(False)
                    row_has_member = True
                    members += 1
                    col_runs[k] = 0
                    col_has_member[k] = True
                elif cell_sig is None and coord not in blocked:
                    row_flags.append(True)
                    col_runs[k] += 1
                    missing.add(coord)
                else:
                    dead = True
                    break
            if dead or not _runs_ok(row_flags, threshold):
                break
            if any(run > threshold for run in col_runs):
                break  # an over-long vertical gap can never shrink again
            if row_has_member and col_has_member[-1]:
                key = (members, -len(missing), height)
                if best is None or key > best:
                    best = key
                    best_rect = (width, height)
                    best_missing = set(missing)
    width, height = best_rect
    rect = CellRange("_", c0, r0, c0 + width - 1, r0 + height - 1)
    return rect, best_missing


def _pack_rectangles(
    sheet: str,
    grid: dict[Coord, Hashable],
    blocked: set[Coord],
    threshold: int,
    make_candidate: Callable[[CellRange, Hashable, frozenset[Coord]], GroupCandidate],
    col_veto: Optional[Callable[[int, int], bool]] = None,
) -> list[GroupCandidate]:
    out: list[GroupCandidate] = []
    assigned: set[Coord] = set()
    covered: set[Coord] = set(blocked)
    for seed in sorted(grid, key=lambda cr: (cr[1], cr[0])):  # row-major
        if seed in assigned:
            continue
        sig = grid[seed]
        rect, missing = _best_rectangle(seed, sig, grid, covered, assigned, threshold, col_veto)
        rect = CellRange(sheet, rect.left, rect.top, rect.right, rect.bottom)
        for addr in rect.cells():
            coord = (addr.column, addr.row)
            if coord in grid:
                assigned.add(coord)
            covered.add(coord)  # missing cells inside the range block other groups
        out.append(make_candidate(rect, sig, frozenset(missing)))
    return out


def group_formula_cells(cs: ClassifiedSheet, threshold: int) -> list[GroupCandidate]:
    """Maximal rectangles of pairwise-coherent formula cells with gap bridging."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    blocked = set(cs.raw_cells)

    def make(rect: CellRange, sig: Hashable, missing: frozenset[Coord]) -> GroupCandidate:
        return GroupCandidate(
            sheet=cs.sheet, range=rect, kind="formula",
            nexpr=sig, value_type="unknown", missing=missing,
        )

    return _pack_rectangles(cs.sheet, dict(cs.formula_cells), blocked, threshold, make)


def naming_position(candidate: GroupCandidate) -> list[Coord]:
    """Cells to probe for a header string, in priority order."""
    rect = candidate.range
    above = (rect.left, rect.top - 1) if rect.top > 1 else None
    left = (rect.left - 1, rect.top) if rect.left > 1 else None
    if candidate.is_single_column:  # includes 1x1: treated as a column
        order = [above]
    elif candidate.is_single_row:
        order = [left]
    else:
        order = [above, left]
    return [pos for pos in order if pos is not None]


def reserve_headers(
    candidates: list[GroupCandidate], raw_cells: dict[Coord, tuple[CellValue, str]]
) -> set[Coord]:
    """Assign header cells to candidates (first come, first served) and return
    the set of reserved coordinates."""
    reserved: set[Coord] = set()
    for cand in candidates:
        for pos in naming_position(cand):
            entry = raw_cells.get(pos)
            if entry is None or entry[1] != "text" or pos in reserved:
                continue
            cand.header = pos
            reserved.add(pos)
            break
    return reserved


def group_raw_cells(
    cs: ClassifiedSheet,
    threshold: int,
    formula_candidates: Optional[list[GroupCandidate]] = None,
) -> list[GroupCandidate]:
    """Rectangles of adjacent same-type raw cells, bridging like formula groups.

    Non-text cells group first; header strings claimed by any group formed so
    far are excluded; the remaining text cells group last.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    formula_candidates = formula_candidates or []
    formula_footprint: set[Coord] = set()
    for cand in formula_candidates:
        for addr in cand.range.cells():
            formula_footprint.add((addr.column, addr.row))

    nontext = {c: t for c, (_, t) in cs.raw_cells.items() if t != "text"}
    text = {c: t for c, (_, t) in cs.raw_cells.items() if t == "text"}

    def make(rect: CellRange, sig: Hashable, missing: frozenset[Coord]) -> GroupCandidate:
        return GroupCandidate(
            sheet=cs.sheet, range=rect, kind="raw",
            nexpr=None, value_type=str(sig), missing=missing,
        )

    def own_header(col: int, top: int) -> bool:
        entry = cs.raw_cells.get((col, top - 1))
        return entry is not None and entry[1] == "text"

    blocked = formula_footprint | set(text)
    out = _pack_rectangles(cs.sheet, nontext, blocked, threshold, make, col_veto=own_header)

    reserved = reserve_headers(formula_candidates + out, cs.raw_cells)

    remaining_text = {c: t for c, t in text.items() if c not in reserved}
    covered = formula_footprint | set(nontext) | reserved
    for cand in out:
        for addr in cand.range.cells():
            covered.add((addr.column, addr.row))
    text_groups = _pack_rectangles(
        cs.sheet, remaining_text, covered, threshold, make, col_veto=own_header
    )
    out.extend(text_groups)
    out.sort(key=lambda c: (c.range.top, c.range.left))
    return out
