"""Cell addresses, A1 notation, and rectangular ranges."""

from __future__ import annotations

import re
from typing import Iterator, NamedTuple

MAX_COL = 16_384  # column XFD
MAX_ROW = 1_048_576

_A1_RE = re.compile(r"^([A-Za-z]{1,3})([1-9][0-9]{0,6})$")
_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def letters_to_col(letters: str) -> int:
    col = 0
    for ch in letters.upper():
        col = col * 26 + (ord(ch) - 64)
    return col


def col_to_letters(col: int) -> str:
    out = ""
    while col > 0:
        col, rem = divmod(col - 1, 26)
        out = _LETTERS[rem] + out
    return out


class CellAddress(NamedTuple):
    sheet: str
    col: int
    row: int

    def a1(self) -> str:
        return f"{col_to_letters(self.col)}{self.row}"

    def text(self) -> str:
        return f"{self.sheet}!{self.a1()}"


class RangeRect(NamedTuple):
    """Normalized rectangle: top-left corner is (col1, row1)."""

    sheet: str
    col1: int
    row1: int
    col2: int
    row2: int

    @classmethod
    def single(cls, addr: CellAddress) -> "RangeRect":
        return cls(addr.sheet, addr.col, addr.row, addr.col, addr.row)

    @property
    def width(self) -> int:
        return self.col2 - self.col1 + 1

    @property
    def height(self) -> int:
        return self.row2 - self.row1 + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def anchor(self) -> CellAddress:
        return CellAddress(self.sheet, self.col1, self.row1)

    def addresses(self) -> Iterator[CellAddress]:
        for row in range(self.row1, self.row2 + 1):
            for col in range(self.col1, self.col2 + 1):
                yield CellAddress(self.sheet, col, row)

    def text(self) -> str:
        if self.area == 1:
            return f"{self.sheet}!{col_to_letters(self.col1)}{self.row1}"
        return (
            f"{self.sheet}!{col_to_letters(self.col1)}{self.row1}"
            f":{col_to_letters(self.col2)}{self.row2}"
        )


def parse_a1(token: str) -> tuple[int, int] | None:
    """Return (col, row) when the token has cell-address shape, else None."""
    m = _A1_RE.match(token)
    if not m:
        return None
    return letters_to_col(m.group(1)), int(m.group(2))


def looks_like_address(token: str) -> bool:
    """Used to keep names disjoint from the address grammar (A1 is not a name)."""
    return _A1_RE.match(token) is not None


def normalize_rect(sheet: str, c1: int, r1: int, c2: int, r2: int) -> RangeRect:
    return RangeRect(sheet, min(c1, c2), min(r1, r2), max(c1, c2), max(r1, r2))
