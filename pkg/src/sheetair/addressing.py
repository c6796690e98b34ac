"""Cell addressing: column letters, A1 notation, rectangular ranges, and the
offset algebra that relates a referenced cell to the cell referencing it."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import AddressError, OutOfBoundsError

MAX_COLUMN = 16384  # XFD
MAX_ROW = 1_048_576

_A1_RE = re.compile(r"^(\$?)([A-Za-z]{1,3})(\$?)([0-9]+)$")


def column_letters(index: int) -> str:
    """1 -> A, 26 -> Z, 27 -> AA, ..."""
    if index < 1:
        raise AddressError(f"column index must be >= 1, got {index}")
    out = ""
    n = index
    while n:
        n, rem = divmod(n - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


def column_index(letters: str) -> int:
    """A -> 1, Z -> 26, AA -> 27, ..."""
    if not letters or not letters.isalpha():
        raise AddressError(f"bad column letters {letters!r}")
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


def parse_a1(text: str) -> tuple[int, int]:
    """'B30' -> (2, 30). Rejects $ markers, out-of-range coordinates, junk."""
    m = _A1_RE.match(text)
    if not m or m.group(1) or m.group(3):
        raise AddressError(f"bad A1 coordinate {text!r}")
    col = column_index(m.group(2))
    row = int(m.group(4))
    if col > MAX_COLUMN or row < 1 or row > MAX_ROW:
        raise AddressError(f"coordinate {text!r} outside sheet limits")
    return col, row


def format_a1(col: int, row: int) -> str:
    return f"{column_letters(col)}{row}"


@dataclass(frozen=True, order=True)
class CellAddress:
    """Absolute position of one cell: (sheet, 1-based column, 1-based row)."""

    sheet: str
    column: int
    row: int

    def __post_init__(self):
        if not self.sheet:
            raise AddressError("sheet name must be non-empty")
        if self.column < 1 or self.row < 1:
            raise AddressError(f"cell coordinates must be >= 1, got {self.column},{self.row}")

    def a1(self) -> str:
        return format_a1(self.column, self.row)

    def ref(self) -> str:
        return f"{self.sheet}!{self.a1()}"

    @classmethod
    def from_a1(cls, sheet: str, text: str) -> "CellAddress":
        col, row = parse_a1(text)
        return cls(sheet, col, row)

    def __str__(self) -> str:
        return self.ref()


@dataclass(frozen=True, order=True)
class CellRange:
    """Rectangle of cells on one sheet, inclusive corners."""

    sheet: str
    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if self.left < 1 or self.top < 1:
            raise AddressError("range corners must be >= 1")
        if self.left > self.right or self.top > self.bottom:
            raise AddressError(
                f"range corners out of order: {format_a1(self.left, self.top)}:"
                f"{format_a1(self.right, self.bottom)}"
            )

    @classmethod
    def from_a1(cls, sheet: str, text: str) -> "CellRange":
        parts = text.split(":")
        if len(parts) == 1:
            col, row = parse_a1(parts[0])
            return cls(sheet, col, row, col, row)
        if len(parts) != 2:
            raise AddressError(f"bad range {text!r}")
        c1, r1 = parse_a1(parts[0])
        c2, r2 = parse_a1(parts[1])
        return cls(sheet, min(c1, c2), min(r1, r2), max(c1, c2), max(r1, r2))

    @classmethod
    def single(cls, addr: CellAddress) -> "CellRange":
        return cls(addr.sheet, addr.column, addr.row, addr.column, addr.row)

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def a1(self) -> str:
        return f"{format_a1(self.left, self.top)}:{format_a1(self.right, self.bottom)}"

    def ref(self) -> str:
        return f"{self.sheet}!{self.a1()}"

    def contains(self, addr: CellAddress) -> bool:
        return addr.sheet == self.sheet and self.contains_coord(addr.column, addr.row)

    def contains_coord(self, col: int, row: int) -> bool:
        return self.left <= col <= self.right and self.top <= row <= self.bottom

    def intersects(self, other: "CellRange") -> bool:
        return (
            self.sheet == other.sheet
            and self.left <= other.right
            and other.left <= self.right
            and self.top <= other.bottom
            and other.top <= self.bottom
        )

    def intersection(self, other: "CellRange") -> Optional["CellRange"]:
        if not self.intersects(other):
            return None
        return CellRange(
            self.sheet,
            max(self.left, other.left),
            max(self.top, other.top),
            min(self.right, other.right),
            min(self.bottom, other.bottom),
        )

    def cells(self) -> Iterator[CellAddress]:
        """Row-major iteration over all positions, including empty ones."""
        for row in range(self.top, self.bottom + 1):
            for col in range(self.left, self.right + 1):
                yield CellAddress(self.sheet, col, row)

    def position_of(self, addr: CellAddress) -> int:
        """Row-major 0-based index of addr within the rectangle."""
        if not self.contains(addr):
            raise AddressError(f"{addr} not inside {self.ref()}")
        return (addr.row - self.top) * self.width + (addr.column - self.left)

    def cell_at(self, position: int) -> CellAddress:
        if not 0 <= position < self.area:
            raise AddressError(f"position {position} outside {self.ref()} (area {self.area})")
        drow, dcol = divmod(position, self.width)
        return CellAddress(self.sheet, self.left + dcol, self.top + drow)

    def __str__(self) -> str:
        return self.ref()


@dataclass(frozen=True)
class LocationExpression:
    """How a referenced cell relates to a base cell.

    sheet is None for a same-sheet (relative) reference, else the absolute
    sheet name. Column/row components are signed offsets when their absolute
    flag is off, or the absolute 1-based coordinate when it is on ($ marker).
    """

    sheet: Optional[str]
    col: int
    col_abs: bool
    row: int
    row_abs: bool

    def apply(self, base: CellAddress) -> CellAddress:
        sheet = self.sheet if self.sheet is not None else base.sheet
        col = self.col if self.col_abs else base.column + self.col
        row = self.row if self.row_abs else base.row + self.row
        if col < 1 or row < 1 or col > MAX_COLUMN or row > MAX_ROW:
            raise OutOfBoundsError(
                f"{self} applied to {base} gives column {col}, row {row}"
            )
        return CellAddress(sheet, col, row)

    def __str__(self) -> str:
        sheet = f"${self.sheet}" if self.sheet is not None else "Void"
        col = f"${self.col}" if self.col_abs else str(self.col)
        row = f"${self.row}" if self.row_abs else str(self.row)
        return f"({sheet}, {col}, {row})"
