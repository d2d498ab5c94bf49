"""The supported worksheet function set and its evaluation conventions.

Arguments arrive already evaluated (scalars or grids).  Conventions:

- a scalar error argument makes the call return that error, except for
  ISERROR and IFERROR which absorb errors;
- aggregates walk grids and use numbers only, skipping blanks, text and
  booleans; an error inside a grid propagates (COUNT/COUNTA ignore them);
- scalar arguments to aggregates are coerced, so SUM("3", 4) is 7;
- there is no lazy evaluation: IF propagates an error from either branch;
- results that overflow the finite range collapse to #VALUE!.
"""

from __future__ import annotations

import datetime as dt
import math
from typing import Callable, Iterable

from . import dates
from .values import (
    CellError,
    CellValue,
    Grid,
    compare,
    ensure_finite,
    scalarize,
    to_bool,
    to_number,
    to_text,
)

Arg = CellValue | Grid

SUPPORTED_FUNCTIONS = frozenset(
    """SUM AVERAGE MIN MAX COUNT COUNTA IF AND OR NOT ROUND ABS SQRT POWER
    CONCATENATE LEFT RIGHT LEN UPPER LOWER VLOOKUP HLOOKUP INDEX MATCH
    ISBLANK ISERROR IFERROR DATE YEAR MONTH DAY""".split()
)

_ABSORBING = frozenset({"ISERROR", "IFERROR"})


def _numbers(args: Iterable[Arg]) -> list[float] | CellError:
    """Collect numeric operands for an aggregate; see module conventions."""
    out: list[float] = []
    for arg in args:
        if isinstance(arg, Grid):
            for v in arg.cells():
                if isinstance(v, CellError):
                    return v
                if isinstance(v, float) and not isinstance(v, bool):
                    out.append(v)
        elif arg is None:
            continue
        else:
            n = to_number(arg)
            if isinstance(n, CellError):
                return n
            out.append(n)
    return out


def _fn_sum(args: list[Arg]) -> CellValue:
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return ensure_finite(math.fsum(nums))


def _fn_average(args: list[Arg]) -> CellValue:
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    if not nums:
        return CellError.DIV0
    return ensure_finite(math.fsum(nums) / len(nums))


def _fn_min(args: list[Arg]) -> CellValue:
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return min(nums) if nums else 0.0


def _fn_max(args: list[Arg]) -> CellValue:
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return max(nums) if nums else 0.0


def _fn_count(args: list[Arg]) -> CellValue:
    n = 0
    for arg in args:
        if isinstance(arg, Grid):
            n += sum(
                1 for v in arg.cells() if isinstance(v, float) and not isinstance(v, bool)
            )
        elif arg is None:
            continue
        elif not isinstance(to_number(arg), CellError):
            n += 1
    return float(n)


def _fn_counta(args: list[Arg]) -> CellValue:
    n = 0
    for arg in args:
        if isinstance(arg, Grid):
            n += sum(1 for v in arg.cells() if v is not None)
        elif arg is not None:
            n += 1
    return float(n)


def _fn_if(args: list[Arg]) -> Arg:
    if len(args) not in (2, 3):
        return CellError.VALUE
    cond = to_bool(args[0])
    if isinstance(cond, CellError):
        return cond
    if cond:
        return args[1]
    return args[2] if len(args) == 3 else False


def _logicals(args: list[Arg]) -> list[bool] | CellError:
    out: list[bool] = []
    for arg in args:
        if isinstance(arg, Grid):
            for v in arg.cells():
                if isinstance(v, CellError):
                    return v
                if isinstance(v, bool):
                    out.append(v)
                elif isinstance(v, float):
                    out.append(v != 0.0)
        elif arg is None:
            continue
        else:
            b = to_bool(arg)
            if isinstance(b, CellError):
                return b
            out.append(b)
    if not out:
        return CellError.VALUE
    return out


def _fn_and(args: list[Arg]) -> CellValue:
    bools = _logicals(args)
    return bools if isinstance(bools, CellError) else all(bools)


def _fn_or(args: list[Arg]) -> CellValue:
    bools = _logicals(args)
    return bools if isinstance(bools, CellError) else any(bools)


def _fn_not(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    b = to_bool(args[0])
    return b if isinstance(b, CellError) else not b


def _fn_round(args: list[Arg]) -> CellValue:
    if len(args) != 2:
        return CellError.VALUE
    n = to_number(args[0])
    if isinstance(n, CellError):
        return n
    d = to_number(args[1])
    if isinstance(d, CellError):
        return d
    digits = int(d)
    if abs(digits) > 300:
        return CellError.VALUE
    factor = 10.0 ** digits
    # half away from zero, the spreadsheet convention (3.5 -> 4, -3.5 -> -4)
    rounded = math.floor(abs(n) * factor + 0.5) / factor
    return ensure_finite(math.copysign(rounded, n))


def _fn_abs(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    n = to_number(args[0])
    return n if isinstance(n, CellError) else abs(n)


def _fn_sqrt(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    n = to_number(args[0])
    if isinstance(n, CellError):
        return n
    if n < 0:
        return CellError.VALUE
    return math.sqrt(n)


def power(base: float, exponent: float) -> CellValue:
    """Shared by POWER and the ^ operator."""
    if base == 0.0 and exponent < 0:
        return CellError.DIV0
    if base == 0.0 and exponent == 0.0:
        return CellError.VALUE
    try:
        result = base ** exponent
    except (OverflowError, ValueError, ZeroDivisionError):
        return CellError.VALUE
    if isinstance(result, complex):
        return CellError.VALUE
    return ensure_finite(result)


def _fn_power(args: list[Arg]) -> CellValue:
    if len(args) != 2:
        return CellError.VALUE
    b = to_number(args[0])
    if isinstance(b, CellError):
        return b
    e = to_number(args[1])
    if isinstance(e, CellError):
        return e
    return power(b, e)


def _fn_concatenate(args: list[Arg]) -> CellValue:
    parts: list[str] = []
    for arg in args:
        t = to_text(arg)
        if isinstance(t, CellError):
            return t
        parts.append(t)
    return "".join(parts)


def _text_arg(arg: Arg) -> str | CellError:
    return to_text(arg)


def _fn_left(args: list[Arg]) -> CellValue:
    return _substr(args, from_left=True)


def _fn_right(args: list[Arg]) -> CellValue:
    return _substr(args, from_left=False)


def _substr(args: list[Arg], from_left: bool) -> CellValue:
    if len(args) not in (1, 2):
        return CellError.VALUE
    t = _text_arg(args[0])
    if isinstance(t, CellError):
        return t
    n = 1.0 if len(args) == 1 else to_number(args[1])
    if isinstance(n, CellError):
        return n
    count = int(n)
    if count < 0:
        return CellError.VALUE
    return t[:count] if from_left else (t[-count:] if count else "")


def _fn_len(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    t = _text_arg(args[0])
    return t if isinstance(t, CellError) else float(len(t))


def _fn_upper(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    t = _text_arg(args[0])
    return t if isinstance(t, CellError) else t.upper()


def _fn_lower(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    t = _text_arg(args[0])
    return t if isinstance(t, CellError) else t.lower()


def _same_kind(a: CellValue, b: CellValue) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, float) or isinstance(b, float):
        return isinstance(a, float) and isinstance(b, float)
    return isinstance(a, str) and isinstance(b, str)


def _as_grid(arg: Arg) -> Grid | None:
    if isinstance(arg, Grid):
        return arg
    if isinstance(arg, CellError):
        return None
    return Grid(((arg,),))


def _lookup(args: list[Arg], by_row: bool) -> CellValue:
    if len(args) not in (3, 4):
        return CellError.VALUE
    needle = scalarize(args[0])
    if isinstance(needle, Grid):
        return CellError.VALUE
    table = _as_grid(args[1])
    if table is None:
        return CellError.VALUE
    idx = to_number(args[2])
    if isinstance(idx, CellError):
        return idx
    index = int(idx)
    approximate = True
    if len(args) == 4:
        b = to_bool(args[3])
        if isinstance(b, CellError):
            return b
        approximate = b
    keys = [row[0] for row in table.rows] if by_row else list(table.rows[0])
    limit = table.width if by_row else table.height
    if index < 1 or index > limit:
        return CellError.REF

    def pick(pos: int) -> CellValue:
        return table.rows[pos][index - 1] if by_row else table.rows[index - 1][pos]

    if not approximate:
        for pos, key in enumerate(keys):
            if key is not None and _same_kind(key, needle) and compare(key, needle) == 0:
                return pick(pos)
        return CellError.NA
    best: int | None = None
    for pos, key in enumerate(keys):
        if key is None or not _same_kind(key, needle):
            continue
        if compare(key, needle) <= 0 and (best is None or compare(key, keys[best]) >= 0):
            best = pos
    if best is None:
        return CellError.NA
    return pick(best)


def _fn_vlookup(args: list[Arg]) -> CellValue:
    return _lookup(args, by_row=True)


def _fn_hlookup(args: list[Arg]) -> CellValue:
    return _lookup(args, by_row=False)


def _fn_index(args: list[Arg]) -> CellValue:
    if len(args) not in (2, 3):
        return CellError.VALUE
    grid = _as_grid(args[0])
    if grid is None:
        return CellError.VALUE
    first = to_number(args[1])
    if isinstance(first, CellError):
        return first
    if len(args) == 3:
        second = to_number(args[2])
        if isinstance(second, CellError):
            return second
        row, col = int(first), int(second)
    elif grid.width == 1:
        row, col = int(first), 1
    elif grid.height == 1:
        row, col = 1, int(first)
    else:
        return CellError.REF
    if not (1 <= row <= grid.height and 1 <= col <= grid.width):
        return CellError.REF
    return grid.rows[row - 1][col - 1]


def _fn_match(args: list[Arg]) -> CellValue:
    if len(args) not in (2, 3):
        return CellError.VALUE
    needle = scalarize(args[0])
    if isinstance(needle, Grid):
        return CellError.VALUE
    grid = _as_grid(args[1])
    if grid is None:
        return CellError.VALUE
    if grid.width != 1 and grid.height != 1:
        return CellError.NA
    mode = 1.0
    if len(args) == 3:
        m = to_number(args[2])
        if isinstance(m, CellError):
            return m
        mode = m
    keys = list(grid.cells())
    candidates = [
        (pos, key)
        for pos, key in enumerate(keys)
        if key is not None and _same_kind(key, needle)
    ]
    if mode == 0:
        for pos, key in candidates:
            if compare(key, needle) == 0:
                return float(pos + 1)
        return CellError.NA
    best: tuple[int, CellValue] | None = None
    for pos, key in candidates:
        cmp = compare(key, needle)
        if mode > 0 and cmp <= 0 and (best is None or compare(key, best[1]) >= 0):
            best = (pos, key)
        if mode < 0 and cmp >= 0 and (best is None or compare(key, best[1]) <= 0):
            best = (pos, key)
    if best is None:
        return CellError.NA
    return float(best[0] + 1)


def _fn_isblank(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    v = scalarize(args[0])
    if isinstance(v, Grid):
        return CellError.VALUE
    return v is None


def _fn_iserror(args: list[Arg]) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    return isinstance(scalarize(args[0]), CellError)


def _fn_iferror(args: list[Arg]) -> Arg:
    if len(args) != 2:
        return CellError.VALUE
    v = scalarize(args[0])
    return args[1] if isinstance(v, CellError) else v


def _fn_date(args: list[Arg]) -> CellValue:
    if len(args) != 3:
        return CellError.VALUE
    parts = []
    for arg in args:
        n = to_number(arg)
        if isinstance(n, CellError):
            return n
        parts.append(int(n))
    year, month, day = parts
    if year < 1900:
        return CellError.VALUE
    months = year * 12 + (month - 1)
    norm_year, norm_month = divmod(months, 12)
    try:
        d = dt.date(norm_year, norm_month + 1, 1) + dt.timedelta(days=day - 1)
        return float(dates.date_to_serial(d))
    except (ValueError, OverflowError, dates.DateOutOfRange):
        return CellError.VALUE


def _date_part(args: list[Arg], part: str) -> CellValue:
    if len(args) != 1:
        return CellError.VALUE
    n = to_number(args[0])
    if isinstance(n, CellError):
        return n
    try:
        d = dates.serial_to_date(int(n))
    except (dates.DateOutOfRange, dates.PhantomDate):
        return CellError.VALUE
    return float(getattr(d, part))


def _fn_year(args: list[Arg]) -> CellValue:
    return _date_part(args, "year")


def _fn_month(args: list[Arg]) -> CellValue:
    return _date_part(args, "month")


def _fn_day(args: list[Arg]) -> CellValue:
    return _date_part(args, "day")


_FUNCTIONS: dict[str, Callable[[list[Arg]], Arg]] = {
    "SUM": _fn_sum,
    "AVERAGE": _fn_average,
    "MIN": _fn_min,
    "MAX": _fn_max,
    "COUNT": _fn_count,
    "COUNTA": _fn_counta,
    "IF": _fn_if,
    "AND": _fn_and,
    "OR": _fn_or,
    "NOT": _fn_not,
    "ROUND": _fn_round,
    "ABS": _fn_abs,
    "SQRT": _fn_sqrt,
    "POWER": _fn_power,
    "CONCATENATE": _fn_concatenate,
    "LEFT": _fn_left,
    "RIGHT": _fn_right,
    "LEN": _fn_len,
    "UPPER": _fn_upper,
    "LOWER": _fn_lower,
    "VLOOKUP": _fn_vlookup,
    "HLOOKUP": _fn_hlookup,
    "INDEX": _fn_index,
    "MATCH": _fn_match,
    "ISBLANK": _fn_isblank,
    "ISERROR": _fn_iserror,
    "IFERROR": _fn_iferror,
    "DATE": _fn_date,
    "YEAR": _fn_year,
    "MONTH": _fn_month,
    "DAY": _fn_day,
}


def eval_builtin(name: str, args: list[Arg]) -> Arg:
    """Apply a worksheet function to already-evaluated arguments."""
    fn = _FUNCTIONS.get(name.upper())
    if fn is None:
        return CellError.NAME
    if name.upper() not in _ABSORBING:
        for arg in args:
            if isinstance(arg, CellError):
                return arg
    return fn(args)
