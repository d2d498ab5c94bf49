"""Shared test helpers: bit-exact comparators, calendar oracle, workbook fuzzer."""

from __future__ import annotations

import math
import random

from sheetbridge.engine import CellAddress, Workbook
from sheetbridge.engine.formulas import (
    Binary,
    Call,
    CellRef,
    Formula,
    Literal,
    RangeRef,
    Unary,
)


def values_equal(a: object, b: object) -> bool:
    """Bit-exact cell-value equality: types must match, floats compare by bits."""
    if type(a) is not type(b):
        return False
    if isinstance(a, float):
        if a != b:
            return False
        return math.copysign(1.0, a) == math.copysign(1.0, b)  # type: ignore[arg-type]
    return a == b


def maps_equal(m1: dict, m2: dict) -> bool:
    if m1.keys() != m2.keys():
        return False
    return all(values_equal(m1[k], m2[k]) for k in m1)


def civil_days_since_1900(year: int, month: int, day: int) -> int:
    """Gregorian day count from 1900-01-01, independent of datetime.

    Uses the days-from-civil algorithm (Howard Hinnant's construction).
    """

    def days_from_civil(y: int, m: int, d: int) -> int:
        y -= m <= 2
        era = (y if y >= 0 else y - 399) // 400
        yoe = y - era * 400
        doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
        doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
        return era * 146097 + doe - 719468

    return days_from_civil(year, month, day) - days_from_civil(1900, 1, 1)


def is_leap_year(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


# -- random workbook generator -------------------------------------------------

_SHEET = "S"
_WIDTH = 10

_TEXT_POOL = ["alpha", "Beta", "x", "", "42", "-3.5", "TRUE", "no"]


def _random_literal(rng: random.Random) -> object:
    roll = rng.random()
    if roll < 0.55:
        base = rng.choice([0.0, 1.0, -1.0, 2.5, 100.0, -7.25, 1e6, 0.1])
        return base * rng.choice([1.0, 1.0, 1.0, rng.uniform(-10, 10)])
    if roll < 0.75:
        return rng.choice(_TEXT_POOL)
    if roll < 0.9:
        return rng.choice([True, False])
    return float(rng.randint(-1000, 1000))


def _addr_for(index: int) -> CellAddress:
    return CellAddress(_SHEET, index % _WIDTH + 1, index // _WIDTH + 1)


def _random_ref(rng: random.Random, limit: int) -> CellRef:
    addr = _addr_for(rng.randrange(limit))
    return CellRef(None if rng.random() < 0.7 else _SHEET, addr.col, addr.row)


def _random_range(rng: random.Random, limit: int) -> RangeRef:
    # full rows below the current cell are always populated or blank-but-settled
    max_row = max(1, (limit - 1) // _WIDTH)
    r1 = rng.randint(1, max_row)
    r2 = min(max_row, r1 + rng.randint(0, 2))
    c1 = rng.randint(1, _WIDTH)
    c2 = min(_WIDTH, c1 + rng.randint(0, 3))
    return RangeRef(None, c1, r1, c2, r2)


def _random_expr(rng: random.Random, limit: int, depth: int, allow_forward: bool,
                 total: int) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.55 and limit > 0:
            if allow_forward:
                return CellRef(None, rng.randint(1, _WIDTH), rng.randint(1, max(1, (total - 1) // _WIDTH + 1)))
            return _random_ref(rng, limit)
        return Literal(_random_literal(rng))
    roll = rng.random()
    sub = lambda: _random_expr(rng, limit, depth - 1, allow_forward, total)
    if roll < 0.35:
        op = rng.choice(["+", "-", "*", "/", "^", "&", "=", "<>", "<", "<=", ">", ">="])
        return Binary(op, sub(), sub())
    if roll < 0.42:
        return Unary(rng.choice(["-", "+"]), sub())
    if roll < 0.62 and limit > _WIDTH:
        fn = rng.choice(["SUM", "AVERAGE", "MIN", "MAX", "COUNT", "COUNTA"])
        args: list[Formula] = [_random_range(rng, limit)]
        if rng.random() < 0.4:
            args.append(sub())
        return Call(fn, tuple(args))
    fn = rng.choice(
        ["IF", "ROUND", "ABS", "SQRT", "POWER", "CONCATENATE", "LEFT", "RIGHT",
         "LEN", "UPPER", "LOWER", "ISBLANK", "ISERROR", "IFERROR", "AND", "OR",
         "NOT", "DATE", "YEAR", "MONTH", "DAY", "VLOOKUP", "MATCH", "INDEX"]
    )
    arity = {
        "IF": 3, "ROUND": 2, "ABS": 1, "SQRT": 1, "POWER": 2, "CONCATENATE": 2,
        "LEFT": 2, "RIGHT": 2, "LEN": 1, "UPPER": 1, "LOWER": 1, "ISBLANK": 1,
        "ISERROR": 1, "IFERROR": 2, "AND": 2, "OR": 2, "NOT": 1, "DATE": 3,
        "YEAR": 1, "MONTH": 1, "DAY": 1,
    }
    if fn in ("VLOOKUP", "MATCH", "INDEX") and limit > _WIDTH:
        table = _random_range(rng, limit)
        if fn == "VLOOKUP":
            return Call(fn, (sub(), table, Literal(float(rng.randint(1, 4))), Literal(False)))
        if fn == "MATCH":
            return Call(fn, (sub(), RangeRef(None, table.col1, table.row1, table.col1, table.row2),
                             Literal(float(rng.choice([-1, 0, 1])))))
        return Call(fn, (table, Literal(float(rng.randint(1, 3))), Literal(float(rng.randint(1, 4)))))
    n = arity.get(fn, 1)
    return Call(fn, tuple(sub() for _ in range(n)))


def random_workbook(rng: random.Random, n_cells: int, allow_cycles: bool = False) -> Workbook:
    """Random workbook over a 10-column region; DAG by construction unless
    allow_cycles is set (forward references permitted)."""
    wb = Workbook("fuzz")
    wb.add_sheet(_SHEET)
    for i in range(n_cells):
        addr = _addr_for(i)
        if i < _WIDTH or rng.random() < 0.5:
            wb.set_cell(addr, value=_random_literal(rng))
        else:
            formula = _random_expr(rng, i, rng.randint(1, 3), allow_cycles, n_cells)
            wb.set_cell(addr, formula=formula)
    wb.seal()
    return wb


def random_edit(rng: random.Random, wb: Workbook, n_cells: int) -> list[CellAddress]:
    """Apply 1-3 random single-cell overwrites; returns the changed addresses."""
    changed = []
    for _ in range(rng.randint(1, 3)):
        addr = _addr_for(rng.randrange(n_cells))
        value = None if rng.random() < 0.1 else _random_literal(rng)
        wb.set_value(addr, value)
        changed.append(addr)
    return changed


def generate_scale_workbook(
    cols: int = 20, input_rows: int = 12_000, sum_rows: int = 1_500, chain_rows: int = 1_500
) -> str:
    """Text document with cols*(input_rows+sum_rows+chain_rows) populated cells:
    literal inputs, SUM windows over them, and an IF chain per column."""
    letters = [chr(ord("A") + i) for i in range(cols)]
    lines = ["workbook Scale Model", "sheet Data"]
    append = lines.append
    for c in letters:
        ci = ord(c) - 64
        for r in range(1, input_rows + 1):
            append(f"cell {c}{r} = {(r * ci) % 97 + 1}")
    for c in letters:
        for k in range(1, sum_rows + 1):
            append(f"cell {c}{input_rows + k} := =SUM({c}{8 * (k - 1) + 1}:{c}{8 * k})")
    for c in letters:
        for k in range(1, chain_rows + 1):
            row = input_rows + sum_rows + k
            append(f"cell {c}{row} := =IF({c}{row - 1}>50, {c}{row - 1}-50, {c}{row - 1}+1)")
    append("name SeedInput = Data!A1")
    append(f"name ChainTail = Data!{letters[-1]}{input_rows + sum_rows + chain_rows}")
    return "\n".join(lines) + "\n"
