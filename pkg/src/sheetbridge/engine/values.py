"""Cell values, error kinds, and the coercion rules shared by the evaluator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union


class CellError(enum.Enum):
    """First-class error values a cell can hold."""

    DIV0 = "#DIV/0!"
    VALUE = "#VALUE!"
    REF = "#REF!"
    NAME = "#NAME?"
    NA = "#N/A"
    CYCLE = "#CYCLE!"
    XREF = "#XREF!"
    ACTION = "#ACTION!"

    @property
    def display(self) -> str:
        return self.value

    def __repr__(self) -> str:  # keeps test output readable
        return f"CellError.{self.name}"


# A cell holds a finite float, text, boolean, blank (None) or an error.
CellValue = Union[None, float, bool, str, CellError]


class FormatHint(enum.Enum):
    GENERAL = "GENERAL"
    NUMBER = "NUMBER"
    DATE = "DATE"
    TEXT = "TEXT"


@dataclass(frozen=True)
class Grid:
    """Rectangular block of cell values, row-major."""

    rows: tuple[tuple[CellValue, ...], ...]

    @classmethod
    def from_lists(cls, rows: list[list[CellValue]]) -> "Grid":
        return cls(tuple(tuple(r) for r in rows))

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def cells(self):
        for row in self.rows:
            yield from row

    def to_lists(self) -> list[list[CellValue]]:
        return [list(r) for r in self.rows]


def is_number(v: object) -> bool:
    return isinstance(v, float) and not isinstance(v, bool)


def ensure_finite(x: float) -> CellValue:
    """Numbers in cells are always finite; overflow collapses to #VALUE!."""
    if math.isfinite(x):
        return float(x)
    return CellError.VALUE


def number_to_text(x: float) -> str:
    """Canonical text for a number: no trailing .0 on integral values."""
    if x == int(x) and abs(x) < 1e16 and math.copysign(1.0, x) > 0:
        return str(int(x))
    return repr(x)


def to_number(v: CellValue | Grid) -> float | CellError:
    """Coerce a scalar to a number: blank -> 0, booleans -> 0/1, numeric text parsed."""
    if isinstance(v, Grid):
        scalar = scalarize(v)
        if isinstance(scalar, Grid):
            return CellError.VALUE
        return to_number(scalar)
    if v is None:
        return 0.0
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if isinstance(v, CellError):
        return v
    try:
        x = float(v.strip())
    except ValueError:
        return CellError.VALUE
    if not math.isfinite(x):
        return CellError.VALUE
    return x


def to_text(v: CellValue | Grid) -> str | CellError:
    if isinstance(v, Grid):
        scalar = scalarize(v)
        if isinstance(scalar, Grid):
            return CellError.VALUE
        return to_text(scalar)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return number_to_text(v)
    if isinstance(v, CellError):
        return v
    return v


def to_bool(v: CellValue | Grid) -> bool | CellError:
    if isinstance(v, Grid):
        scalar = scalarize(v)
        if isinstance(scalar, Grid):
            return CellError.VALUE
        return to_bool(scalar)
    if v is None:
        return False
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return v != 0.0
    if isinstance(v, CellError):
        return v
    up = v.strip().upper()
    if up == "TRUE":
        return True
    if up == "FALSE":
        return False
    return CellError.VALUE


def scalarize(v: CellValue | Grid) -> CellValue | Grid:
    """Collapse a 1x1 grid to its single value; leave everything else alone."""
    if isinstance(v, Grid) and v.height == 1 and v.width == 1:
        return v.rows[0][0]
    return v


# Type ordering for comparisons follows spreadsheet convention:
# numbers < text < booleans; blanks coerce to the other side's zero value.
_TYPE_RANK = {"number": 0, "text": 1, "bool": 2}


def _rank(v: CellValue) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, float):
        return "number"
    return "text"


def compare(lhs: CellValue, rhs: CellValue) -> int | CellError:
    """Three-way comparison; errors have already been filtered by the caller."""
    if lhs is None and rhs is None:
        return 0
    if lhs is None:
        lhs = False if isinstance(rhs, bool) else "" if isinstance(rhs, str) else 0.0
    if rhs is None:
        rhs = False if isinstance(lhs, bool) else "" if isinstance(lhs, str) else 0.0
    lr, rr = _rank(lhs), _rank(rhs)
    if lr != rr:
        return -1 if _TYPE_RANK[lr] < _TYPE_RANK[rr] else 1
    if lr == "text":
        lhs, rhs = lhs.casefold(), rhs.casefold()  # type: ignore[union-attr]
    if lhs == rhs:
        return 0
    return -1 if lhs < rhs else 1  # type: ignore[operator]


def value_to_json(v: CellValue | Grid) -> object:
    """JSON-safe form used by run results, reports and digests."""
    if isinstance(v, Grid):
        return [[value_to_json(c) for c in row] for row in v.rows]
    if isinstance(v, CellError):
        return {"error": v.name}
    return v


def display_text(v: CellValue) -> str:
    """Human-facing rendering used in reports: numbers keep float form (0.0)."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return str(v)
    if isinstance(v, CellError):
        return v.display
    return v
