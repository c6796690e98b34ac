"""XLSX reading and writing.

Only the Office Open XML container is supported. Loading expands shared
strings and shared formulas; saving re-emits them unshared with inline
strings, so round-trips are semantic (cell content), not byte-identical.
Styles, charts and other presentation parts are not preserved.
"""

from __future__ import annotations

import re
import zipfile
from dataclasses import dataclass
from typing import Optional, Union
from xml.etree import ElementTree
from xml.sax.saxutils import escape, quoteattr

from .addressing import CellAddress, format_a1, parse_a1
from .errors import SheetAirError, WorkbookLoadError, WorkbookSaveError
from .formulas import (
    BinaryOp,
    CellRef,
    FunctionCall,
    Node,
    RangeRef,
    UnaryOp,
    format_number,
    parse_formula,
    render_formula,
)

_NS_MAIN = "http://schemas.openxmlformats.org/spreadsheetml/2006/main"
_NS_REL = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"
_NS_PKG_REL = "http://schemas.openxmlformats.org/package/2006/relationships"

# Built-in number formats that render as dates/times.
_DATE_NUMFMT_IDS = set(range(14, 23)) | set(range(27, 37)) | {45, 46, 47} | set(range(50, 59))

CellValue = Union[float, str, bool, None]


@dataclass
class CellRecord:
    """One populated cell: either a raw value or a formula plus cached value."""

    address: CellAddress
    formula: Optional[str]  # with leading "=", None for raw cells
    value: CellValue  # raw value, or the formula's cached value
    value_type: str  # number | text | boolean | date | unknown

    @property
    def is_formula(self) -> bool:
        return self.formula is not None


class WorkbookModel:
    """Ordered sheets, each a map from (col, row) to CellRecord."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.sheet_names: list[str] = []
        self._cells: dict[str, dict[tuple[int, int], CellRecord]] = {}

    def add_sheet(self, name: str) -> None:
        if not name:
            raise WorkbookLoadError("sheet name must be non-empty")
        if name in self._cells:
            raise WorkbookLoadError(f"duplicate sheet name {name!r}")
        self.sheet_names.append(name)
        self._cells[name] = {}

    def has_sheet(self, name: str) -> bool:
        return name in self._cells

    def cells(self, sheet: str) -> dict[tuple[int, int], CellRecord]:
        return self._cells[sheet]

    def get(self, sheet: str, col: int, row: int) -> Optional[CellRecord]:
        return self._cells[sheet].get((col, row))

    def set_value(self, sheet: str, col: int, row: int, value: CellValue, value_type: str) -> None:
        addr = CellAddress(sheet, col, row)
        self._cells[sheet][(col, row)] = CellRecord(addr, None, value, value_type)

    def set_formula(
        self,
        sheet: str,
        col: int,
        row: int,
        text: str,
        cached: CellValue = None,
        value_type: str = "unknown",
    ) -> None:
        addr = CellAddress(sheet, col, row)
        self._cells[sheet][(col, row)] = CellRecord(addr, text, cached, value_type)

    def clear_cell(self, sheet: str, col: int, row: int) -> None:
        self._cells[sheet].pop((col, row), None)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorkbookModel):
            return NotImplemented
        if self.sheet_names != other.sheet_names:
            return False
        for name in self.sheet_names:
            a, b = self._cells[name], other._cells[name]
            if set(a) != set(b):
                return False
            for key, rec in a.items():
                o = b[key]
                if (rec.formula, rec.value, rec.value_type) != (o.formula, o.value, o.value_type):
                    return False
        return True

    def __repr__(self) -> str:
        counts = ", ".join(f"{n}:{len(self._cells[n])}" for n in self.sheet_names)
        return f"<WorkbookModel [{counts}]>"


# ---------------------------------------------------------------------------
# Reading


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _find(elem, name):
    return elem.find(f"{{{_NS_MAIN}}}{name}")


def _findall(elem, name):
    return elem.findall(f"{{{_NS_MAIN}}}{name}")


def _text_of(elem) -> str:
    return "".join(t.text or "" for t in elem.iter(f"{{{_NS_MAIN}}}t"))


def _is_date_format(code: str) -> bool:
    cleaned = re.sub(r'"[^"]*"|\[[^\]]*\]|\\.', "", code)
    return bool(re.search(r"[dmyhsDMYHS]", cleaned))


def _parse_xml(archive: zipfile.ZipFile, part: str):
    try:
        data = archive.read(part)
    except KeyError:
        raise WorkbookLoadError(f"missing workbook part: {part}")
    try:
        return ElementTree.fromstring(data)
    except ElementTree.ParseError as exc:
        raise WorkbookLoadError(f"malformed workbook part {part}: {exc}")


def _shift_relative(node: Node, dcol: int, drow: int) -> Node:
    if isinstance(node, CellRef):
        col = node.col if node.col_abs else node.col + dcol
        row = node.row if node.row_abs else node.row + drow
        return CellRef(node.sheet, col, node.col_abs, row, node.row_abs)
    if isinstance(node, RangeRef):
        return RangeRef(
            _shift_relative(node.start, dcol, drow), _shift_relative(node.end, dcol, drow)
        )
    if isinstance(node, FunctionCall):
        return FunctionCall(node.name, tuple(_shift_relative(a, dcol, drow) for a in node.args))
    if isinstance(node, BinaryOp):
        return BinaryOp(
            node.op, _shift_relative(node.lhs, dcol, drow), _shift_relative(node.rhs, dcol, drow)
        )
    if isinstance(node, UnaryOp):
        return UnaryOp(node.op, _shift_relative(node.operand, dcol, drow))
    return node


def _translate_shared(master_body: str, dcol: int, drow: int) -> str:
    """Instantiate a shared-formula follower by shifting relative refs.

    Takes and returns formula body text (no '='). Falls back to the master
    text when the master cannot be parsed or shifts out of bounds.
    """
    try:
        ast = parse_formula("=" + master_body)
        return render_formula(_shift_relative(ast, dcol, drow))[1:]
    except SheetAirError:
        return master_body


def load_workbook(path: str) -> WorkbookModel:
    """Read an XLSX file into a WorkbookModel.

    Every populated cell becomes a CellRecord; formula cells keep both the
    '='-prefixed text and the cached value. Empty cells are absent.
    """
    try:
        archive = zipfile.ZipFile(path)
    except FileNotFoundError:
        raise WorkbookLoadError(f"missing file: {path}")
    except (zipfile.BadZipFile, IsADirectoryError, OSError) as exc:
        raise WorkbookLoadError(f"corrupt archive {path}: {exc}")

    with archive:
        workbook_xml = _parse_xml(archive, "xl/workbook.xml")
        rels_xml = _parse_xml(archive, "xl/_rels/workbook.xml.rels")
        rels = {}
        for rel in rels_xml.iter(f"{{{_NS_PKG_REL}}}Relationship"):
            target = rel.get("Target", "")
            if target.startswith("/"):
                target = target.lstrip("/")
            else:
                target = "xl/" + target
            rels[rel.get("Id")] = (target, rel.get("Type", ""))

        shared_strings: list[str] = []
        if "xl/sharedStrings.xml" in archive.namelist():
            sst = _parse_xml(archive, "xl/sharedStrings.xml")
            for si in _findall(sst, "si"):
                shared_strings.append(_text_of(si))

        date_styles: set[int] = set()
        if "xl/styles.xml" in archive.namelist():
            styles = _parse_xml(archive, "xl/styles.xml")
            custom = {}
            numfmts = _find(styles, "numFmts")
            if numfmts is not None:
                for fmt in _findall(numfmts, "numFmt"):
                    custom[int(fmt.get("numFmtId", "0"))] = fmt.get("formatCode", "")
            cellxfs = _find(styles, "cellXfs")
            if cellxfs is not None:
                for idx, xf in enumerate(_findall(cellxfs, "xf")):
                    fmt_id = int(xf.get("numFmtId", "0"))
                    if fmt_id in _DATE_NUMFMT_IDS or _is_date_format(custom.get(fmt_id, "")):
                        date_styles.add(idx)

        model = WorkbookModel(path=path)
        sheets = _find(workbook_xml, "sheets")
        if sheets is None:
            raise WorkbookLoadError("missing workbook part: xl/workbook.xml <sheets>")
        for sheet in _findall(sheets, "sheet"):
            name = sheet.get("name", "")
            rel_id = sheet.get(f"{{{_NS_REL}}}id")
            if rel_id not in rels:
                raise WorkbookLoadError(f"missing relationship for sheet {name!r}")
            target, rel_type = rels[rel_id]
            if not rel_type.endswith("/worksheet"):
                raise WorkbookLoadError(f"unsupported workbook part: {target} ({rel_type})")
            model.add_sheet(name)
            _read_sheet(archive, target, name, model, shared_strings, date_styles)
        return model


def _read_sheet(archive, part, name, model, shared_strings, date_styles):
    root = _parse_xml(archive, part)
    sheet_data = _find(root, "sheetData")
    if sheet_data is None:
        return
    shared_masters: dict[str, tuple[str, int, int]] = {}
    row_counter = 0
    for row_el in _findall(sheet_data, "row"):
        row_counter = int(row_el.get("r", row_counter + 1))
        col_counter = 0
        for cell_el in _findall(row_el, "c"):
            ref = cell_el.get("r")
            if ref:
                col, row = parse_a1(ref)
            else:
                col, row = col_counter + 1, row_counter
            col_counter = col
            _read_cell(cell_el, name, col, row, model, shared_strings, date_styles, shared_masters)


def _read_cell(cell_el, sheet, col, row, model, shared_strings, date_styles, shared_masters):
    ctype = cell_el.get("t", "n")
    style = int(cell_el.get("s", "0"))
    f_el = _find(cell_el, "f")
    v_el = _find(cell_el, "v")
    is_el = _find(cell_el, "is")

    formula = None
    if f_el is not None:
        text = f_el.text or ""
        if f_el.get("t") == "shared":
            si = f_el.get("si", "")
            if text:
                shared_masters[si] = (text, col, row)
            elif si in shared_masters:
                master, mcol, mrow = shared_masters[si]
                text = _translate_shared(master, col - mcol, row - mrow)
        if text:
            formula = "=" + text

    value: CellValue = None
    vtype = "unknown"
    if ctype == "s" and v_el is not None and v_el.text is not None:
        value = shared_strings[int(v_el.text.strip())]
        vtype = "text"
    elif ctype == "inlineStr" and is_el is not None:
        value = _text_of(is_el)
        vtype = "text"
    elif ctype == "str" and v_el is not None:
        value = v_el.text or ""
        vtype = "text"
    elif ctype == "b" and v_el is not None:
        value = (v_el.text or "").strip() in ("1", "true", "TRUE")
        vtype = "boolean"
    elif ctype == "e" and v_el is not None:
        value = v_el.text or ""
        vtype = "text"
    elif ctype == "d" and v_el is not None:
        # ISO-8601 date cells are rare; keep the literal text, tagged as text.
        value = v_el.text or ""
        vtype = "text"
    elif v_el is not None and v_el.text is not None:
        value = float(v_el.text.strip())
        vtype = "date" if style in date_styles else "number"

    if formula is not None:
        model.set_formula(sheet, col, row, formula, cached=value, value_type=vtype)
    elif value is not None:
        model.set_value(sheet, col, row, value, vtype)
    # cells with only style information are treated as empty


# ---------------------------------------------------------------------------
# Writing

_CONTENT_TYPES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">
<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>
<Default Extension="xml" ContentType="application/xml"/>
<Override PartName="/xl/workbook.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>
<Override PartName="/xl/styles.xml" ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml"/>
{sheet_overrides}</Types>
"""

_ROOT_RELS = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">
<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>
</Relationships>
"""

_STYLES = """<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<styleSheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">
<fonts count="1"><font><sz val="11"/><name val="Calibri"/></font></fonts>
<fills count="1"><fill><patternFill patternType="none"/></fill></fills>
<borders count="1"><border/></borders>
<cellStyleXfs count="1"><xf numFmtId="0" fontId="0" fillId="0" borderId="0"/></cellStyleXfs>
<cellXfs count="2">
<xf numFmtId="0" fontId="0" fillId="0" borderId="0" xfId="0"/>
<xf numFmtId="14" fontId="0" fillId="0" borderId="0" xfId="0" applyNumberFormat="1"/>
</cellXfs>
</styleSheet>
"""


def _value_xml(record: CellRecord) -> tuple[str, str]:
    """(cell attributes, inner XML) for one record's value part."""
    value, vtype = record.value, record.value_type
    if record.is_formula:
        inner = f"<f>{escape(record.formula[1:])}</f>"
        if value is None:
            return "", inner  # no cached value: spreadsheet recalculates on open
        if vtype == "text":
            return ' t="str"', inner + f"<v>{escape(str(value))}</v>"
        if vtype == "boolean":
            return ' t="b"', inner + f"<v>{1 if value else 0}</v>"
        attrs = ' s="1"' if vtype == "date" else ""
        return attrs, inner + f"<v>{format_number(float(value))}</v>"
    if vtype == "text":
        body = escape(str(value))
        space = ' xml:space="preserve"' if str(value) != str(value).strip() else ""
        return ' t="inlineStr"', f"<is><t{space}>{body}</t></is>"
    if vtype == "boolean":
        return ' t="b"', f"<v>{1 if value else 0}</v>"
    if vtype == "date":
        return ' s="1"', f"<v>{format_number(float(value))}</v>"
    return "", f"<v>{format_number(float(value))}</v>"


def _sheet_xml(model: WorkbookModel, name: str) -> str:
    rows: dict[int, list[CellRecord]] = {}
    for (col, row), record in model.cells(name).items():
        rows.setdefault(row, []).append(record)
    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n',
        f'<worksheet xmlns="{_NS_MAIN}"><sheetData>',
    ]
    for row in sorted(rows):
        parts.append(f'<row r="{row}">')
        for record in sorted(rows[row], key=lambda r: r.address.column):
            attrs, inner = _value_xml(record)
            parts.append(f'<c r="{record.address.a1()}"{attrs}>{inner}</c>')
        parts.append("</row>")
    parts.append("</sheetData></worksheet>\n")
    return "".join(parts)


def save_workbook(model: WorkbookModel, path: str) -> None:
    """Write the model as an XLSX file; load_workbook(path) returns an equal model."""
    if not model.sheet_names:
        # A workbook needs at least one sheet to be openable.
        model = _with_placeholder_sheet(model)
    sheet_overrides = "".join(
        f'<Override PartName="/xl/worksheets/sheet{i + 1}.xml" '
        'ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>\n'
        for i in range(len(model.sheet_names))
    )
    workbook_rels = [
        f'<Relationship Id="rId{i + 1}" '
        'Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" '
        f'Target="worksheets/sheet{i + 1}.xml"/>'
        for i in range(len(model.sheet_names))
    ]
    styles_rid = len(model.sheet_names) + 1
    workbook_rels.append(
        f'<Relationship Id="rId{styles_rid}" '
        'Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/styles" '
        'Target="styles.xml"/>'
    )
    sheets_xml = "".join(
        f'<sheet name={quoteattr(name)} sheetId="{i + 1}" r:id="rId{i + 1}"/>'
        for i, name in enumerate(model.sheet_names)
    )
    workbook_xml = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
        f'<workbook xmlns="{_NS_MAIN}" xmlns:r="{_NS_REL}">'
        f"<sheets>{sheets_xml}</sheets></workbook>\n"
    )

    entries = [
        ("[Content_Types].xml", _CONTENT_TYPES.format(sheet_overrides=sheet_overrides)),
        ("_rels/.rels", _ROOT_RELS),
        ("xl/workbook.xml", workbook_xml),
        (
            "xl/_rels/workbook.xml.rels",
            '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
            f'<Relationships xmlns="{_NS_PKG_REL}">' + "".join(workbook_rels) + "</Relationships>\n",
        ),
        ("xl/styles.xml", _STYLES),
    ]
    for i, name in enumerate(model.sheet_names):
        entries.append((f"xl/worksheets/sheet{i + 1}.xml", _sheet_xml(model, name)))

    try:
        with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as archive:
            for part, content in entries:
                info = zipfile.ZipInfo(part, date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                archive.writestr(info, content)
    except OSError as exc:
        raise WorkbookSaveError(f"cannot write {path}: {exc}")


def _with_placeholder_sheet(model: WorkbookModel) -> WorkbookModel:
    out = WorkbookModel(path=model.path)
    out.add_sheet("Sheet1")
    return out
