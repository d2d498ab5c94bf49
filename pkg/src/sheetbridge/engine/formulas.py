"""Formula text <-> AST: tokenizer, recursive-descent parser, serializer.

Grammar (lowest to highest precedence):

    formula    = "=" compare
    compare    = concat (("=" | "<>" | "<" | "<=" | ">" | ">=") concat)*
    concat     = additive ("&" additive)*
    additive   = multiplic (("+" | "-") multiplic)*
    multiplic  = power (("*" | "/") power)*
    power      = unary ("^" unary)*            ; left-associative
    unary      = ("-" | "+") unary | primary   ; unary minus binds tighter than ^
    primary    = number | string | TRUE | FALSE
               | [sheet "!"] cellref [":" cellref]
               | name "(" args ")" | name
               | "(" compare ")"

Cell references are plain A1 style (1-3 letters, then digits); identifiers that
do not fit that shape are named-range references.  A leading "[" anywhere
outside a string is the external-workbook syntax, which is rejected outright.
"""

from __future__ import annotations

import re
from typing import NamedTuple, Union

from .addresses import col_to_letters, parse_a1
from .values import CellValue, number_to_text


class FormulaSyntaxError(ValueError):
    def __init__(self, position: int, expected: str):
        super().__init__(f"syntax error at position {position}: expected {expected}")
        self.position = position
        self.expected = expected


class XRefUnsupported(ValueError):
    """Cross-workbook references have no meaning here and fail at parse time."""

    def __init__(self, position: int):
        super().__init__(
            f"external workbook reference at position {position} is not supported"
        )
        self.position = position


class Literal(NamedTuple):
    value: CellValue


class CellRef(NamedTuple):
    sheet: str | None
    col: int
    row: int


class RangeRef(NamedTuple):
    sheet: str | None
    col1: int
    row1: int
    col2: int
    row2: int


class NamedRef(NamedTuple):
    name: str


class Unary(NamedTuple):
    op: str
    operand: "Formula"


class Binary(NamedTuple):
    op: str
    left: "Formula"
    right: "Formula"


class Call(NamedTuple):
    name: str
    args: tuple["Formula", ...]


Formula = Union[Literal, CellRef, RangeRef, NamedRef, Unary, Binary, Call]


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op><=|>=|<>|[=<>+\-*/^&(),:!])
  | (?P<xref>\[)
    """,
    re.VERBOSE,
)

_CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str, offset: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise FormulaSyntaxError(offset + i, "a valid token")
        kind = m.lastgroup or ""
        if kind == "xref":
            raise XRefUnsupported(offset + i)
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), offset + i))
        i = m.end()
    tokens.append(_Token("eof", "", offset + len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept_op(self, *ops: str) -> str | None:
        if self.cur.kind == "op" and self.cur.text in ops:
            return self.advance().text
        return None

    def expect_op(self, op: str, what: str) -> None:
        if not self.accept_op(op):
            raise FormulaSyntaxError(self.cur.pos, what)

    def parse(self) -> Formula:
        node = self.compare()
        if self.cur.kind != "eof":
            raise FormulaSyntaxError(self.cur.pos, "end of formula")
        return node

    def compare(self) -> Formula:
        node = self.concat()
        while (op := self.accept_op(*_CMP_OPS)) is not None:
            node = Binary(op, node, self.concat())
        return node

    def concat(self) -> Formula:
        node = self.additive()
        while self.accept_op("&"):
            node = Binary("&", node, self.additive())
        return node

    def additive(self) -> Formula:
        node = self.multiplic()
        while (op := self.accept_op("+", "-")) is not None:
            node = Binary(op, node, self.multiplic())
        return node

    def multiplic(self) -> Formula:
        node = self.power()
        while (op := self.accept_op("*", "/")) is not None:
            node = Binary(op, node, self.power())
        return node

    def power(self) -> Formula:
        node = self.unary()
        while self.accept_op("^"):
            node = Binary("^", node, self.unary())
        return node

    def unary(self) -> Formula:
        if (op := self.accept_op("-", "+")) is not None:
            return Unary(op, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if value in (float("inf"), float("-inf")):
                raise FormulaSyntaxError(tok.pos, "a representable number")
            return Literal(value)
        if tok.kind == "string":
            self.advance()
            return Literal(tok.text[1:-1].replace('""', '"'))
        if tok.kind == "ident":
            return self.ident_expr()
        if self.accept_op("("):
            node = self.compare()
            self.expect_op(")", "')'")
            return node
        raise FormulaSyntaxError(tok.pos, "a value, reference or '('")

    def ident_expr(self) -> Formula:
        tok = self.advance()
        name = tok.text
        if self.accept_op("!"):
            ref = self.cur
            if ref.kind != "ident" or (cr := parse_a1(ref.text)) is None:
                raise FormulaSyntaxError(self.cur.pos, "a cell address after '!'")
            self.advance()
            return self.maybe_range(name, cr)
        upper = name.upper()
        if upper == "TRUE" and self.cur.text != "(":
            return Literal(True)
        if upper == "FALSE" and self.cur.text != "(":
            return Literal(False)
        if self.cur.kind == "op" and self.cur.text == "(":
            self.advance()
            return Call(upper, self.call_args())
        if (cr := parse_a1(name)) is not None:
            return self.maybe_range(None, cr)
        return NamedRef(name)

    def maybe_range(self, sheet: str | None, start: tuple[int, int]) -> Formula:
        if self.accept_op(":"):
            ref = self.cur
            if ref.kind != "ident" or (end := parse_a1(ref.text)) is None:
                raise FormulaSyntaxError(self.cur.pos, "a cell address after ':'")
            self.advance()
            c1, r1 = start
            c2, r2 = end
            return RangeRef(sheet, min(c1, c2), min(r1, r2), max(c1, c2), max(r1, r2))
        return CellRef(sheet, start[0], start[1])

    def call_args(self) -> tuple[Formula, ...]:
        if self.accept_op(")"):
            return ()
        args = [self.compare()]
        while self.accept_op(","):
            args.append(self.compare())
        self.expect_op(")", "')' or ','")
        return tuple(args)


def parse_formula(text: str) -> Formula:
    """Parse formula text (must start with '='). Positions count from the '='."""
    if not text or not text.startswith("="):
        raise FormulaSyntaxError(0, "'=' at the start of a formula")
    return _Parser(_tokenize(text[1:], 1)).parse()


# -- serialization ------------------------------------------------------------

_PRECEDENCE = {
    "=": 1, "<>": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
    "&": 2,
    "+": 3, "-": 3,
    "*": 4, "/": 4,
    "^": 5,
}
_UNARY_PREC = 6
_ATOM_PREC = 7


def _escape(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def _node_prec(node: Formula) -> int:
    if isinstance(node, Binary):
        return _PRECEDENCE[node.op]
    if isinstance(node, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def _to_text(node: Formula) -> str:
    if isinstance(node, Literal):
        v = node.value
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, float):
            return number_to_text(v)
        if isinstance(v, str):
            return _escape(v)
        raise ValueError(f"unserializable literal: {v!r}")
    if isinstance(node, CellRef):
        a1 = f"{col_to_letters(node.col)}{node.row}"
        return f"{node.sheet}!{a1}" if node.sheet else a1
    if isinstance(node, RangeRef):
        start = f"{col_to_letters(node.col1)}{node.row1}"
        end = f"{col_to_letters(node.col2)}{node.row2}"
        prefix = f"{node.sheet}!" if node.sheet else ""
        return f"{prefix}{start}:{end}"
    if isinstance(node, NamedRef):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(_to_text(a) for a in node.args)})"
    if isinstance(node, Unary):
        inner = _to_text(node.operand)
        if _node_prec(node.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return node.op + inner
    if isinstance(node, Binary):
        prec = _PRECEDENCE[node.op]
        left = _to_text(node.left)
        if _node_prec(node.left) < prec:
            left = f"({left})"
        right = _to_text(node.right)
        # all binary operators here are left-associative
        if _node_prec(node.right) <= prec:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not a formula node: {node!r}")


def formula_to_text(node: Formula) -> str:
    """Canonical text for an AST; parse_formula(formula_to_text(f)) == f."""
    return "=" + _to_text(node)
