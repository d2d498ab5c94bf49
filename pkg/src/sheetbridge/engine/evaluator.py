"""AST evaluation against a value resolver (normally a Workbook)."""

from __future__ import annotations

from typing import Protocol

from .functions import eval_builtin, power
from .formulas import Binary, Call, CellRef, Formula, Literal, NamedRef, RangeRef, Unary
from .values import (
    CellError,
    CellValue,
    Grid,
    compare,
    ensure_finite,
    scalarize,
    to_number,
    to_text,
)

_CMP_OPS = {"=", "<>", "<", "<=", ">", ">="}


class ValueResolver(Protocol):
    def eval_ref(self, sheet: str | None, col: int, row: int, ctx: str) -> CellValue: ...

    def eval_range(
        self, sheet: str | None, c1: int, r1: int, c2: int, r2: int, ctx: str
    ) -> Grid | CellError: ...

    def eval_name(self, name: str) -> CellValue | Grid: ...


def evaluate(node: Formula, resolver: ValueResolver, ctx_sheet: str) -> CellValue | Grid:
    t = type(node)
    if t is Literal:
        return node.value
    if t is CellRef:
        return resolver.eval_ref(node.sheet, node.col, node.row, ctx_sheet)
    if t is Binary:
        return _binary(node, resolver, ctx_sheet)
    if t is Call:
        args = [evaluate(arg, resolver, ctx_sheet) for arg in node.args]
        return eval_builtin(node.name, args)
    if t is RangeRef:
        return resolver.eval_range(
            node.sheet, node.col1, node.row1, node.col2, node.row2, ctx_sheet
        )
    if t is NamedRef:
        return resolver.eval_name(node.name)
    if t is Unary:
        v = evaluate(node.operand, resolver, ctx_sheet)
        n = to_number(v)
        if isinstance(n, CellError):
            return n
        return -n if node.op == "-" else n
    raise TypeError(f"not a formula node: {node!r}")


def _binary(node: Binary, resolver: ValueResolver, ctx_sheet: str) -> CellValue:
    op = node.op
    lhs = evaluate(node.left, resolver, ctx_sheet)
    rhs = evaluate(node.right, resolver, ctx_sheet)
    if op in _CMP_OPS:
        return _comparison(op, lhs, rhs)
    if op == "&":
        lt = to_text(lhs)
        if isinstance(lt, CellError):
            return lt
        rt = to_text(rhs)
        if isinstance(rt, CellError):
            return rt
        return lt + rt
    ln = to_number(lhs)
    if isinstance(ln, CellError):
        return ln
    rn = to_number(rhs)
    if isinstance(rn, CellError):
        return rn
    if op == "+":
        return ensure_finite(ln + rn)
    if op == "-":
        return ensure_finite(ln - rn)
    if op == "*":
        return ensure_finite(ln * rn)
    if op == "/":
        if rn == 0.0:
            return CellError.DIV0
        return ensure_finite(ln / rn)
    if op == "^":
        return power(ln, rn)
    raise ValueError(f"unknown operator {op!r}")


def _comparison(op: str, lhs: CellValue | Grid, rhs: CellValue | Grid) -> CellValue:
    lhs = scalarize(lhs)
    rhs = scalarize(rhs)
    if isinstance(lhs, CellError):
        return lhs
    if isinstance(rhs, CellError):
        return rhs
    if isinstance(lhs, Grid) or isinstance(rhs, Grid):
        return CellError.VALUE
    cmp = compare(lhs, rhs)
    if op == "=":
        return cmp == 0
    if op == "<>":
        return cmp != 0
    if op == "<":
        return cmp < 0
    if op == "<=":
        return cmp <= 0
    if op == ">":
        return cmp > 0
    return cmp >= 0
