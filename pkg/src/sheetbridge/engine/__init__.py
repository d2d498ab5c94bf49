"""Workbook calculation engine: parsing, evaluation, recalculation, actions."""

from .addresses import MAX_COL, MAX_ROW, CellAddress, RangeRect
from .dates import DateOutOfRange, PhantomDate, iso_to_serial, serial_to_iso
from .evaluator import evaluate
from .formulas import (
    Binary,
    Call,
    CellRef,
    Formula,
    FormulaSyntaxError,
    Literal,
    NamedRef,
    RangeRef,
    Unary,
    XRefUnsupported,
    formula_to_text,
    parse_formula,
)
from .functions import SUPPORTED_FUNCTIONS, eval_builtin
from .textio import FormatError, load_workbook, save_workbook
from .values import CellError, CellValue, FormatHint, Grid, value_to_json
from .workbook import (
    ActionOutcome,
    ActionScript,
    CapExceeded,
    Cell,
    ClearRangeStep,
    CopyRangeStep,
    DEFAULT_CELL_CAP,
    DuplicateName,
    FailIfStep,
    InvalidName,
    NamedRange,
    RangeTooLarge,
    RecalcStep,
    SetCellStep,
    ShapeMismatch,
    UnknownAction,
    UnknownCell,
    UnknownName,
    Workbook,
)

__all__ = [
    "ActionOutcome",
    "ActionScript",
    "Binary",
    "Call",
    "CapExceeded",
    "Cell",
    "CellAddress",
    "CellError",
    "CellRef",
    "CellValue",
    "ClearRangeStep",
    "CopyRangeStep",
    "DEFAULT_CELL_CAP",
    "DateOutOfRange",
    "DuplicateName",
    "FailIfStep",
    "FormatError",
    "FormatHint",
    "Formula",
    "FormulaSyntaxError",
    "Grid",
    "InvalidName",
    "Literal",
    "MAX_COL",
    "MAX_ROW",
    "NamedRange",
    "NamedRef",
    "PhantomDate",
    "RangeRect",
    "RangeRef",
    "RangeTooLarge",
    "RecalcStep",
    "SetCellStep",
    "ShapeMismatch",
    "SUPPORTED_FUNCTIONS",
    "Unary",
    "UnknownAction",
    "UnknownCell",
    "UnknownName",
    "Workbook",
    "XRefUnsupported",
    "evaluate",
    "eval_builtin",
    "formula_to_text",
    "iso_to_serial",
    "load_workbook",
    "parse_formula",
    "save_workbook",
    "serial_to_iso",
    "value_to_json",
]
