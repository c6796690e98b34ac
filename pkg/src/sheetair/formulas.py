"""Spreadsheet formula parsing and rendering.

Two dialects share one grammar core:

* cell formulas — A1-style references, ranges, calls, operators;
* group formulas — additionally `Sheet.Group`, `Sheet.Group[i]`, and
  `Sheet.Group[a:b]` operands for AIR-level edits.

Grammar (EBNF, see docs/formula-grammar.md):

    formula  = "=" expr
    expr     = cmp
    cmp      = concat { ("="|"<"|">"|"<="|">="|"<>") concat }
    concat   = add { "&" add }
    add      = mul { ("+"|"-") mul }
    mul      = pow { ("*"|"/") pow }
    pow      = unary [ "^" pow ]
    unary    = ("-"|"+") unary | postfix
    postfix  = primary { "%" }
    primary  = NUMBER | STRING | TRUE | FALSE | call | reference
             | groupref | "(" expr ")"

Operator precedence is comparison < & < +- < */ < ^ < unary < postfix %,
binaries left-associative except ^. Parentheses are syntax only: the parser
unwraps them and render_formula re-inserts the minimal set that preserves
evaluation order, so parse(render(ast)) == ast holds for any tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .addressing import MAX_COLUMN, MAX_ROW, column_index, column_letters
from .errors import (
    FormulaLexError,
    FormulaSyntaxError,
    MalformedSliceError,
    UnsupportedConstructError,
)

# ---------------------------------------------------------------------------
# AST


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Number(Node):
    value: float


@dataclass(frozen=True)
class Text(Node):
    value: str


@dataclass(frozen=True)
class Boolean(Node):
    value: bool


@dataclass(frozen=True)
class CellRef(Node):
    sheet: Optional[str]
    col: int
    col_abs: bool
    row: int
    row_abs: bool


@dataclass(frozen=True)
class VarRef(Node):
    """Canonical variable placeholder (varN) used in normalized formula text."""

    index: int


@dataclass(frozen=True)
class RangeRef(Node):
    # Endpoints are CellRefs in parsed formulas, VarRefs in canonical text.
    # The sheet, when present, lives on the start endpoint only.
    start: Union[CellRef, VarRef]
    end: Union[CellRef, VarRef]


@dataclass(frozen=True)
class FunctionCall(Node):
    name: str  # case-preserved; compare with .upper()
    args: tuple


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    lhs: Node
    rhs: Node


@dataclass(frozen=True)
class UnaryOp(Node):
    op: str  # "-" / "+" prefix, "%" postfix
    operand: Node


@dataclass(frozen=True)
class GroupRef(Node):
    name: str  # "Sheet.Group"


@dataclass(frozen=True)
class GroupSlice(Node):
    name: str
    lo: int  # 1-based, inclusive
    hi: int


@dataclass(frozen=True)
class GroupElem(Node):
    name: str
    index: int  # 1-based


# ---------------------------------------------------------------------------
# Tokenizer

_TWO_CHAR_OPS = ("<=", ">=", "<>")
_ONE_CHAR = set("()!,:%&^*/+-=<>[]")
_NUMBER_RE = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?", re.ASCII)
_ASCII_DIGITS = "0123456789"
_WORD_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_.$]*")
_A1_WORD_RE = re.compile(r"^(\$?)([A-Za-z]{1,3})(\$?)([0-9]+)$")
_R1C1_RE = re.compile(r"^[Rr](\d+)?[Cc](\d+)?$")
_SHEET_WORD_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_GROUP_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\.[A-Za-z_][A-Za-z0-9_]*$")
_VAR_RE = re.compile(r"^var(\d+)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "str" | "word" | "qsheet" | "op" | "end"
    text: str
    pos: int


def tokenize(text: str) -> list[_Token]:
    """Token stream for a formula body. Never raises anything but FormulaError."""
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise FormulaLexError("unterminated string literal", i)
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(_Token("str", "".join(buf), i))
            i = j + 1
            continue
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise FormulaLexError("unterminated sheet name quote", i)
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(_Token("qsheet", "".join(buf), i))
            i = j + 1
            continue
        if ch == "{":
            raise UnsupportedConstructError("array formulas are not supported", i)
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(_Token("op", two, i))
            i += 2
            continue
        if ch in _ASCII_DIGITS or (ch == "." and i + 1 < n and text[i + 1] in _ASCII_DIGITS):
            m = _NUMBER_RE.match(text, i)
            tokens.append(_Token("num", m.group(0), i))
            i = m.end()
            continue
        m = _WORD_RE.match(text, i)
        if m:
            tokens.append(_Token("word", m.group(0), i))
            i = m.end()
            continue
        if ch in _ONE_CHAR:
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise FormulaLexError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_CMP_OPS = ("=", "<", ">", "<=", ">=", "<>")
_AGG_ARITY = {"SUM", "AVERAGE", "MIN", "MAX", "COUNT"}


class _Parser:
    def __init__(self, text: str, group_mode: bool = False, allow_vars: bool = False):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.group_mode = group_mode
        self.allow_vars = allow_vars

    def peek(self, ahead: int = 0) -> _Token:
        idx = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[idx]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.next()
        raise FormulaSyntaxError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of formula",
            tok.pos,
            expected=(text,),
        )

    def at_op(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in texts

    # --- precedence ladder

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise FormulaSyntaxError(f"trailing input {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Node:
        return self.cmp()

    def cmp(self) -> Node:
        node = self.concat()
        while self.at_op(*_CMP_OPS):
            op = self.next().text
            node = BinaryOp(op, node, self.concat())
        return node

    def concat(self) -> Node:
        node = self.add()
        while self.at_op("&"):
            self.next()
            node = BinaryOp("&", node, self.add())
        return node

    def add(self) -> Node:
        node = self.mul()
        while self.at_op("+", "-"):
            op = self.next().text
            node = BinaryOp(op, node, self.mul())
        return node

    def mul(self) -> Node:
        node = self.pow()
        while self.at_op("*", "/"):
            op = self.next().text
            node = BinaryOp(op, node, self.pow())
        return node

    def pow(self) -> Node:
        node = self.unary()
        if self.at_op("^"):
            self.next()
            return BinaryOp("^", node, self.pow())  # right-associative
        return node

    def unary(self) -> Node:
        if self.at_op("-", "+"):
            op = self.next().text
            return UnaryOp(op, self.unary())
        return self.postfix()

    def postfix(self) -> Node:
        node = self.primary()
        while self.at_op("%"):
            self.next()
            node = UnaryOp("%", node)
        return node

    # --- primaries

    def primary(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Number(float(tok.text))
        if tok.kind == "str":
            self.next()
            return Text(tok.text)
        if tok.kind == "qsheet":
            self.next()
            self.expect("!")
            return self.reference(sheet=tok.text, sheet_pos=tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "op" and tok.text == "[":
            raise UnsupportedConstructError(
                "external workbook references are not supported", tok.pos
            )
        if tok.kind == "word":
            return self.word()
        raise FormulaSyntaxError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of formula",
            tok.pos,
            expected=("number", "string", "reference", "function", "("),
        )

    def word(self) -> Node:
        tok = self.next()
        word = tok.text
        follower = self.peek()

        if follower.kind == "op" and follower.text == "(":
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", word):
                raise FormulaSyntaxError(f"bad function name {word!r}", tok.pos)
            self.next()
            args: list[Node] = []
            if not self.at_op(")"):
                args.append(self.expr())
                while self.at_op(","):
                    self.next()
                    args.append(self.expr())
            self.expect(")")
            return FunctionCall(word, tuple(args))

        if follower.kind == "op" and follower.text == "!":
            if not _SHEET_WORD_RE.match(word):
                raise FormulaSyntaxError(f"bad sheet name {word!r} (quote it)", tok.pos)
            self.next()
            return self.reference(sheet=word, sheet_pos=tok.pos)

        if self.allow_vars:
            vm = _VAR_RE.match(word)
            if vm:
                start = VarRef(int(vm.group(1)))
                if self.at_op(":"):
                    self.next()
                    end_tok = self.next()
                    em = _VAR_RE.match(end_tok.text) if end_tok.kind == "word" else None
                    if not em:
                        raise FormulaSyntaxError("expected variable after ':'", end_tok.pos)
                    return RangeRef(start, VarRef(int(em.group(1))))
                return start

        if self.group_mode and "." in word:
            if not _GROUP_NAME_RE.match(word):
                raise FormulaSyntaxError(f"bad group name {word!r}", tok.pos)
            return self.group_operand(word, tok.pos)

        if word.upper() in ("TRUE", "FALSE"):
            return Boolean(word.upper() == "TRUE")

        ref = self.try_cell_ref(word, tok.pos, sheet=None)
        if ref is not None:
            if self.at_op(":"):
                self.next()
                return self.range_rest(ref)
            return ref

        if follower.kind == "op" and follower.text == "[":
            raise UnsupportedConstructError(
                f"structured or R1C1-style reference {word!r}[...] is not supported", tok.pos
            )
        if _R1C1_RE.match(word):
            raise UnsupportedConstructError(
                f"R1C1-style reference {word!r} is not supported", tok.pos
            )
        raise FormulaSyntaxError(f"unknown name {word!r}", tok.pos)

    def reference(self, sheet: str, sheet_pos: int) -> Node:
        tok = self.next()
        if tok.kind != "word":
            raise FormulaSyntaxError("expected cell reference after '!'", tok.pos)
        ref = self.try_cell_ref(tok.text, tok.pos, sheet=sheet)
        if ref is None:
            if tok.kind == "word" and (_R1C1_RE.match(tok.text) or self.at_op("[")):
                raise UnsupportedConstructError(
                    f"unsupported reference {tok.text!r} after sheet name", tok.pos
                )
            raise FormulaSyntaxError(f"bad cell reference {tok.text!r}", tok.pos)
        if self.at_op(":"):
            self.next()
            return self.range_rest(ref)
        return ref

    def range_rest(self, start: CellRef) -> Node:
        tok = self.next()
        end_sheet = None
        if tok.kind == "qsheet" or (
            tok.kind == "word" and self.at_op("!") and _SHEET_WORD_RE.match(tok.text)
        ):
            end_sheet = tok.text
            self.expect("!")
            tok = self.next()
        if tok.kind != "word":
            raise FormulaSyntaxError("expected cell reference after ':'", tok.pos)
        end = self.try_cell_ref(tok.text, tok.pos, sheet=None)
        if end is None:
            raise FormulaSyntaxError(f"bad cell reference {tok.text!r}", tok.pos)
        if end_sheet is not None and end_sheet != (start.sheet or end_sheet):
            raise FormulaSyntaxError("range endpoints must be on the same sheet", tok.pos)
        return RangeRef(start, end)

    def try_cell_ref(self, word: str, pos: int, sheet: Optional[str]) -> Optional[CellRef]:
        m = _A1_WORD_RE.match(word)
        if not m:
            return None
        col = column_index(m.group(2))
        row = int(m.group(4))
        if col > MAX_COLUMN:
            raise FormulaSyntaxError(f"column {m.group(2)} is beyond XFD", pos)
        if row < 1 or row > MAX_ROW:
            raise FormulaSyntaxError(f"row {row} is outside 1..{MAX_ROW}", pos)
        return CellRef(sheet, col, bool(m.group(1)), row, bool(m.group(3)))

    def group_operand(self, name: str, pos: int) -> Node:
        if not self.at_op("["):
            return GroupRef(name)
        self.next()
        lo = self.slice_index()
        if self.at_op(":"):
            self.next()
            hi = self.slice_index()
            self.expect("]")
            if lo < 1 or hi < 1:
                raise MalformedSliceError(f"slice indices are 1-based, got [{lo}:{hi}]", pos)
            if lo > hi:
                raise MalformedSliceError(f"inverted slice bounds [{lo}:{hi}]", pos)
            return GroupSlice(name, lo, hi)
        self.expect("]")
        if lo < 1:
            raise MalformedSliceError(f"element indices are 1-based, got [{lo}]", pos)
        return GroupElem(name, lo)

    def slice_index(self) -> int:
        tok = self.next()
        if tok.kind != "num" or not tok.text.isdigit():
            raise FormulaSyntaxError("expected integer index", tok.pos)
        return int(tok.text)


def _parse_entry(text: str, group_mode: bool) -> Node:
    if not text.startswith("="):
        raise FormulaSyntaxError("formula must start with '='", 0)
    parser = _Parser(text[1:], group_mode=group_mode)
    node = parser.parse()
    return node


def parse_formula(text: str) -> Node:
    """Parse a per-cell formula ('=...') into an AST."""
    return _parse_entry(text, group_mode=False)


def parse_group_formula(text: str) -> Node:
    """Parse a group-level formula; Sheet.Group operands and slices allowed."""
    return _parse_entry(text, group_mode=True)


def parse_canonical(text: str) -> Node:
    """Parse normalized formula text (no '=' prefix, varN placeholders)."""
    return _Parser(text, allow_vars=True).parse()


# ---------------------------------------------------------------------------
# Rendering

_PREC = {
    "=": 1, "<": 1, ">": 1, "<=": 1, ">=": 1, "<>": 1,
    "&": 2,
    "+": 3, "-": 3,
    "*": 4, "/": 4,
    "^": 5,
}
_UNARY_PREC = 6
_POSTFIX_PREC = 7
_ATOM_PREC = 9


def format_number(value: float) -> str:
    """Shortest decimal text that round-trips to the same float."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _sheet_prefix(sheet: Optional[str]) -> str:
    if sheet is None:
        return ""
    if _SHEET_WORD_RE.match(sheet):
        return f"{sheet}!"
    return "'" + sheet.replace("'", "''") + "'!"


def _cell_text(ref: CellRef) -> str:
    return (
        _sheet_prefix(ref.sheet)
        + ("$" if ref.col_abs else "")
        + column_letters(ref.col)
        + ("$" if ref.row_abs else "")
        + str(ref.row)
    )


def _render(node: Node, canonical: bool) -> tuple[str, int]:
    if isinstance(node, Number):
        return format_number(node.value), _ATOM_PREC
    if isinstance(node, Text):
        return '"' + node.value.replace('"', '""') + '"', _ATOM_PREC
    if isinstance(node, Boolean):
        return ("TRUE" if node.value else "FALSE"), _ATOM_PREC
    if isinstance(node, CellRef):
        return _cell_text(node), _ATOM_PREC
    if isinstance(node, VarRef):
        return f"var{node.index}", _ATOM_PREC
    if isinstance(node, RangeRef):
        start, _ = _render(node.start, canonical)
        end, _ = _render(node.end, canonical)
        return f"{start}:{end}", _ATOM_PREC
    if isinstance(node, FunctionCall):
        name = node.name.upper() if canonical else node.name
        args = ",".join(_render(a, canonical)[0] for a in node.args)
        return f"{name}({args})", _ATOM_PREC
    if isinstance(node, GroupRef):
        return node.name, _ATOM_PREC
    if isinstance(node, GroupSlice):
        return f"{node.name}[{node.lo}:{node.hi}]", _ATOM_PREC
    if isinstance(node, GroupElem):
        return f"{node.name}[{node.index}]", _ATOM_PREC
    if isinstance(node, UnaryOp):
        if node.op == "%":
            inner, prec = _render(node.operand, canonical)
            if prec < _POSTFIX_PREC:
                inner = f"({inner})"
            return f"{inner}%", _POSTFIX_PREC
        inner, prec = _render(node.operand, canonical)
        if prec < _UNARY_PREC:
            inner = f"({inner})"
        return f"{node.op}{inner}", _UNARY_PREC
    if isinstance(node, BinaryOp):
        p = _PREC[node.op]
        lmin = p if node.op != "^" else p + 1
        rmin = p + 1 if node.op != "^" else p
        left, lp = _render(node.lhs, canonical)
        right, rp = _render(node.rhs, canonical)
        if lp < lmin:
            left = f"({left})"
        if rp < rmin:
            right = f"({right})"
        return f"{left}{node.op}{right}", p
    raise TypeError(f"cannot render {node!r}")


def render_expression(node: Node, canonical: bool = False) -> str:
    """Formula body text without the leading '='."""
    return _render(node, canonical)[0]


def render_formula(node: Node, canonical: bool = False) -> str:
    """Full formula text with the leading '='. parse(render(ast)) == ast."""
    return "=" + render_expression(node, canonical)
