"""Exception hierarchy for the whole package."""


class SheetAirError(Exception):
    """Base class for all errors raised by this package."""


class AddressError(SheetAirError):
    """Malformed A1 coordinate or range text."""


class OutOfBoundsError(SheetAirError):
    """A location expression lands outside the sheet (row/column < 1 or past XLSX limits)."""


class FormulaError(SheetAirError):
    """Base for formula lexing/parsing failures. Carries a byte offset."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class FormulaLexError(FormulaError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int = 0, expected: tuple = ()):
        if expected:
            message = f"{message}; expected one of: {', '.join(sorted(expected))}"
        super().__init__(message, position)
        self.expected = frozenset(expected)


class UnsupportedConstructError(FormulaError):
    """R1C1 refs, array formulas, structured/external references."""


class MalformedSliceError(FormulaError):
    """Group slice with inverted bounds or a zero index."""


class WorkbookError(SheetAirError):
    pass


class WorkbookLoadError(WorkbookError):
    """File missing, archive corrupt, or an unsupported workbook part."""


class WorkbookSaveError(WorkbookError):
    pass


class SchemaError(SheetAirError):
    """AIR JSON that is malformed or has an unknown schema version."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{message} (at {location})")
        self.location = location


class UnknownSheetError(SheetAirError):
    def __init__(self, sheet: str):
        super().__init__(f"no sheet named {sheet!r}")
        self.sheet = sheet


class UnknownGroupError(SheetAirError, KeyError):
    def __init__(self, name: str, candidates: tuple = ()):
        hint = f"; did you mean {', '.join(candidates)}?" if candidates else ""
        Exception.__init__(self, f"no group named {name!r}{hint}")
        self.name = name
        self.candidates = tuple(candidates)


class EditError(SheetAirError):
    """Rejected group edit (validation happens before anything is recorded)."""


class ShapeMismatchError(EditError):
    def __init__(self, message: str, left: int, right: int):
        super().__init__(f"{message}: {left} vs {right} elements")
        self.left = left
        self.right = right


class OverlapError(EditError):
    def __init__(self, range_text: str, clashing: str):
        super().__init__(f"range {range_text} overlaps existing group {clashing}")
        self.clashing = clashing


class LoweringError(SheetAirError):
    """A group formula could not be lowered to per-cell formulas."""


class EvalError(SheetAirError):
    pass


class UnsupportedFunctionError(EvalError):
    def __init__(self, name: str):
        super().__init__(f"function {name.upper()} is not supported by the evaluator")
        self.function = name


class EvalCycleError(EvalError):
    def __init__(self, cycle):
        super().__init__(f"dependency cycle: {' -> '.join(cycle)}")
        self.cycle = tuple(cycle)


class EvalTypeError(EvalError):
    pass
