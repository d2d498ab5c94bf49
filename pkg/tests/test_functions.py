import random

from sheetbridge.engine import CellError, Grid, eval_builtin
from sheetbridge.engine.dates import date_to_serial
import datetime as dt


def g(rows):
    return Grid.from_lists(rows)


def test_sum_skips_blanks():
    assert eval_builtin("SUM", [g([[1.0], [2.0], [None], [3.0]])]) == 6.0


def test_sum_mixed_grid_ignores_text_and_bools():
    assert eval_builtin("SUM", [g([[1.0, "x"], [True, 2.0]])]) == 3.0


def test_sum_coerces_scalar_text():
    assert eval_builtin("SUM", ["3", 4.0]) == 7.0
    assert eval_builtin("SUM", ["three"]) is CellError.VALUE


def test_error_in_grid_propagates():
    assert eval_builtin("SUM", [g([[1.0], [CellError.DIV0]])]) is CellError.DIV0


def test_scalar_error_propagates():
    assert eval_builtin("ABS", [CellError.REF]) is CellError.REF
    assert eval_builtin("IF", [True, 1.0, CellError.DIV0]) is CellError.DIV0


def test_average_min_max_count():
    grid = g([[4.0], [None], [2.0], ["t"]])
    assert eval_builtin("AVERAGE", [grid]) == 3.0
    assert eval_builtin("AVERAGE", [g([[None]])]) is CellError.DIV0
    assert eval_builtin("MIN", [grid]) == 2.0
    assert eval_builtin("MAX", [grid]) == 4.0
    assert eval_builtin("MIN", [g([["a"]])]) == 0.0
    assert eval_builtin("COUNT", [grid]) == 2.0
    assert eval_builtin("COUNTA", [grid]) == 3.0
    assert eval_builtin("COUNT", [g([[CellError.NA], [1.0]])]) == 1.0


def test_if_and_or_not():
    assert eval_builtin("IF", [True, "yes", "no"]) == "yes"
    assert eval_builtin("IF", [0.0, "yes", "no"]) == "no"
    assert eval_builtin("IF", [False, "yes"]) is False
    assert eval_builtin("AND", [True, 1.0]) is True
    assert eval_builtin("AND", [True, 0.0]) is False
    assert eval_builtin("OR", [False, g([[0.0, "skip"], [None, 3.0]])]) is True
    assert eval_builtin("AND", [g([["a", "b"]])]) is CellError.VALUE
    assert eval_builtin("NOT", [False]) is True


def test_round_half_away_from_zero():
    assert eval_builtin("ROUND", [2.5, 0.0]) == 3.0
    assert eval_builtin("ROUND", [-2.5, 0.0]) == -3.0
    assert eval_builtin("ROUND", [1.234, 2.0]) == 1.23
    assert eval_builtin("ROUND", [1250.0, -2.0]) == 1300.0


def test_math_edge_cases():
    assert eval_builtin("ABS", [-3.0]) == 3.0
    assert eval_builtin("SQRT", [9.0]) == 3.0
    assert eval_builtin("SQRT", [-1.0]) is CellError.VALUE
    assert eval_builtin("POWER", [2.0, 10.0]) == 1024.0
    assert eval_builtin("POWER", [0.0, -1.0]) is CellError.DIV0
    assert eval_builtin("POWER", [0.0, 0.0]) is CellError.VALUE
    assert eval_builtin("POWER", [10.0, 400.0]) is CellError.VALUE


def test_text_functions():
    assert eval_builtin("CONCATENATE", ["a", 3.0, True, None]) == "a3TRUE"
    assert eval_builtin("LEFT", ["hello", 2.0]) == "he"
    assert eval_builtin("LEFT", ["hello"]) == "h"
    assert eval_builtin("RIGHT", ["hello", 2.0]) == "lo"
    assert eval_builtin("RIGHT", ["hello", 0.0]) == ""
    assert eval_builtin("LEN", ["hello"]) == 5.0
    assert eval_builtin("LEN", [12.5]) == 4.0
    assert eval_builtin("UPPER", ["aBc"]) == "ABC"
    assert eval_builtin("LOWER", ["aBc"]) == "abc"
    assert eval_builtin("LEFT", ["x", -1.0]) is CellError.VALUE


def test_vlookup_exact_matches_linear_scan_oracle():
    rng = random.Random(7)
    table = [[float(rng.randint(0, 20)), rng.choice("abcdef"), float(i)] for i in range(30)]
    grid = g(table)
    for _ in range(50):
        needle = float(rng.randint(0, 20))
        col = rng.randint(1, 3)
        # oracle: first row whose first column equals the needle
        expected = next((row[col - 1] for row in table if row[0] == needle), CellError.NA)
        assert eval_builtin("VLOOKUP", [needle, grid, float(col), False]) == expected


def test_vlookup_approximate_largest_below():
    table = g([[1.0, "a"], [3.0, "b"], [7.0, "c"]])
    assert eval_builtin("VLOOKUP", [5.0, table, 2.0]) == "b"
    assert eval_builtin("VLOOKUP", [7.0, table, 2.0]) == "c"
    assert eval_builtin("VLOOKUP", [0.5, table, 2.0]) is CellError.NA
    assert eval_builtin("VLOOKUP", [2.0, table, 5.0, False]) is CellError.REF


def test_vlookup_spec_example():
    assert eval_builtin("VLOOKUP", [2.0, g([[1.0, "a"], [2.0, "b"]]), 2.0, False]) == "b"


def test_hlookup():
    table = g([[1.0, 2.0, 3.0], ["a", "b", "c"]])
    assert eval_builtin("HLOOKUP", [2.0, table, 2.0, False]) == "b"
    assert eval_builtin("HLOOKUP", [9.0, table, 2.0, False]) is CellError.NA


def test_index_and_match():
    grid = g([[1.0, 2.0], [3.0, 4.0]])
    assert eval_builtin("INDEX", [grid, 2.0, 1.0]) == 3.0
    assert eval_builtin("INDEX", [grid, 3.0, 1.0]) is CellError.REF
    assert eval_builtin("INDEX", [g([[5.0], [6.0]]), 2.0]) == 6.0
    assert eval_builtin("INDEX", [g([[5.0, 6.0]]), 2.0]) == 6.0
    column = g([[1.0], [3.0], [5.0]])
    assert eval_builtin("MATCH", [3.0, column, 0.0]) == 2.0
    assert eval_builtin("MATCH", [4.0, column, 1.0]) == 2.0
    assert eval_builtin("MATCH", [4.0, column, -1.0]) == 3.0
    assert eval_builtin("MATCH", [9.0, column, -1.0]) is CellError.NA
    assert eval_builtin("MATCH", [1.0, grid, 0.0]) is CellError.NA


def test_is_functions_and_iferror():
    assert eval_builtin("ISBLANK", [None]) is True
    assert eval_builtin("ISBLANK", [0.0]) is False
    assert eval_builtin("ISERROR", [CellError.DIV0]) is True
    assert eval_builtin("ISERROR", [1.0]) is False
    assert eval_builtin("IFERROR", [CellError.DIV0, 99.0]) == 99.0
    assert eval_builtin("IFERROR", [1.0, 99.0]) == 1.0


def test_date_functions():
    assert eval_builtin("DATE", [2020.0, 1.0, 15.0]) == float(
        date_to_serial(dt.date(2020, 1, 15))
    )
    # month overflow normalizes into the following year
    assert eval_builtin("DATE", [2020.0, 13.0, 1.0]) == eval_builtin(
        "DATE", [2021.0, 1.0, 1.0]
    )
    assert eval_builtin("DATE", [1899.0, 1.0, 1.0]) is CellError.VALUE
    serial = eval_builtin("DATE", [2024.0, 7.0, 15.0])
    assert eval_builtin("YEAR", [serial]) == 2024.0
    assert eval_builtin("MONTH", [serial]) == 7.0
    assert eval_builtin("DAY", [serial]) == 15.0
    assert eval_builtin("YEAR", [60.0]) is CellError.VALUE
    assert eval_builtin("YEAR", [0.0]) is CellError.VALUE


def test_unknown_function():
    assert eval_builtin("NOSUCHFN", [1.0]) is CellError.NAME
