"""sheetair: compile spreadsheet workbooks into a grouped dataflow graph
(AIR), query and edit it at group level, and lower edits back to cells."""

from .addressing import CellAddress, CellRange, LocationExpression
from .errors import (
    AddressError,
    EditError,
    EvalError,
    FormulaError,
    OutOfBoundsError,
    OverlapError,
    SchemaError,
    ShapeMismatchError,
    SheetAirError,
    UnknownGroupError,
    UnknownSheetError,
    UnsupportedFunctionError,
    WorkbookError,
    WorkbookLoadError,
)
from .formulas import parse_formula, parse_group_formula, render_formula
from .graphbuild import build_graph, find_group, lookup
from .grouping import (
    ClassifiedSheet,
    Diagnostic,
    are_coherent,
    classify_cells,
    group_formula_cells,
    group_raw_cells,
)
from .model import (
    DataFlowGraph,
    FormulaGroup,
    RawGroup,
    from_json,
    graphs_isomorphic,
    to_dot,
    to_json,
    to_listing,
)
from .normalize import (
    NormalizedExpression,
    denormalize,
    normalize_expression,
    normalize_reference,
)
from .rewrite import (
    add_group,
    evaluate_group,
    render_group_formula,
    rewrite_cells,
    set_group_formula,
)
from .workbook import CellRecord, WorkbookModel, load_workbook, save_workbook

__all__ = [
    "AddressError",
    "CellAddress",
    "CellRange",
    "CellRecord",
    "ClassifiedSheet",
    "DataFlowGraph",
    "Diagnostic",
    "EditError",
    "EvalError",
    "FormulaError",
    "FormulaGroup",
    "LocationExpression",
    "NormalizedExpression",
    "OutOfBoundsError",
    "OverlapError",
    "RawGroup",
    "SchemaError",
    "ShapeMismatchError",
    "SheetAirError",
    "UnknownGroupError",
    "UnknownSheetError",
    "UnsupportedFunctionError",
    "WorkbookError",
    "WorkbookLoadError",
    "WorkbookModel",
    "add_group",
    "are_coherent",
    "build_graph",
    "classify_cells",
    "denormalize",
    "evaluate_group",
    "find_group",
    "from_json",
    "graphs_isomorphic",
    "group_formula_cells",
    "group_raw_cells",
    "load_workbook",
    "lookup",
    "normalize_expression",
    "normalize_reference",
    "parse_formula",
    "parse_group_formula",
    "render_formula",
    "render_group_formula",
    "rewrite_cells",
    "save_workbook",
    "set_group_formula",
    "to_dot",
    "to_json",
    "to_listing",
]

__version__ = "0.1.0"
