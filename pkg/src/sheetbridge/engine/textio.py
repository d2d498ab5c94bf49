"""Line-oriented workbook text format: loader and canonical writer.

The format (full grammar in docs/workbook_format.md):

    workbook <title>
    sheet <Name>
    cell <addr> [<FORMAT>] = <literal>
    cell <addr> [<FORMAT>] := <formula starting with '='>
    name <Ident> = <addr | range>
    action <Ident> status=<addr>
      set <target> = <literal>
      copy <range> -> <addr>
      clear <range>
      recalc
      failif <formula> "<message>"

Addresses may be sheet-qualified (Model!B2); bare addresses use the sheet that
is current where the line appears.  `#` lines and blank lines are ignored.
Loading the writer's output reproduces the same workbook, and writing that
again is byte-identical.
"""

from __future__ import annotations

import re

from .addresses import CellAddress, RangeRect, normalize_rect, parse_a1
from .formulas import (
    Formula,
    FormulaSyntaxError,
    XRefUnsupported,
    formula_to_text,
    parse_formula,
)
from .values import CellValue, FormatHint, number_to_text
from .workbook import (
    ActionScript,
    ActionStep,
    CapExceeded,
    ClearRangeStep,
    CopyRangeStep,
    DEFAULT_CELL_CAP,
    DuplicateName,
    FailIfStep,
    InvalidName,
    RangeTooLarge,
    RecalcStep,
    SetCellStep,
    UnknownCell,
    UnknownName,
    Workbook,
)


class FormatError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


_ADDR_TOKEN = r"[A-Za-z0-9_.!$]+"
_RANGE_TOKEN = r"[A-Za-z0-9_.!:$]+"

_CELL_RE = re.compile(
    rf"^cell\s+(?P<addr>{_ADDR_TOKEN})"
    r"(?:\s+(?P<fmt>GENERAL|NUMBER|DATE|TEXT))?"
    r"\s*(?P<op>:?=)\s*(?P<payload>.*)$"
)
_NAME_LINE_RE = re.compile(rf"^name\s+(?P<name>\S+)\s*=\s*(?P<target>{_RANGE_TOKEN})$")
_ACTION_RE = re.compile(rf"^action\s+(?P<name>\S+)\s+status\s*=\s*(?P<addr>{_ADDR_TOKEN})$")
_SET_RE = re.compile(rf"^set\s+(?P<target>{_ADDR_TOKEN})\s*=\s*(?P<payload>.*)$")
_COPY_RE = re.compile(rf"^copy\s+(?P<src>{_RANGE_TOKEN})\s*->\s*(?P<dst>{_ADDR_TOKEN})$")
_CLEAR_RE = re.compile(rf"^clear\s+(?P<target>{_RANGE_TOKEN})$")
_FAILIF_RE = re.compile(r'^failif\s+(?P<formula>.+)\s+"(?P<msg>(?:[^"]|"")*)"$')
_STRING_RE = re.compile(r'^"(?:[^"]|"")*"$')


def _parse_literal(text: str, line: int) -> CellValue:
    text = text.strip()
    if _STRING_RE.match(text):
        return text[1:-1].replace('""', '"')
    upper = text.upper()
    if upper == "TRUE":
        return True
    if upper == "FALSE":
        return False
    try:
        value = float(text)
    except ValueError:
        raise FormatError(line, f"not a literal: {text!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise FormatError(line, f"number out of range: {text!r}")
    return value


def _format_literal(value: CellValue) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        return number_to_text(value)
    if isinstance(value, str):
        return '"' + value.replace('"', '""') + '"'
    raise ValueError(f"cannot serialize literal {value!r}")


def _split_ref(token: str, ctx_sheet: str | None, line: int) -> tuple[str, str]:
    """Return (sheet, local part); sheet falls back to the context sheet."""
    if "!" in token:
        sheet, _, local = token.partition("!")
        return sheet, local
    if ctx_sheet is None:
        raise FormatError(line, f"address {token!r} used before any sheet is declared")
    return ctx_sheet, token


def _parse_addr(token: str, ctx_sheet: str | None, line: int) -> CellAddress:
    sheet, local = _split_ref(token, ctx_sheet, line)
    cr = parse_a1(local)
    if cr is None:
        raise FormatError(line, f"not a cell address: {token!r}")
    return CellAddress(sheet, cr[0], cr[1])


def _parse_rect(token: str, ctx_sheet: str | None, line: int) -> RangeRect:
    sheet, local = _split_ref(token, ctx_sheet, line)
    if ":" in local:
        first, _, second = local.partition(":")
        a, b = parse_a1(first), parse_a1(second)
        if a is None or b is None:
            raise FormatError(line, f"not a range: {token!r}")
        return normalize_rect(sheet, a[0], a[1], b[0], b[1])
    cr = parse_a1(local)
    if cr is None:
        raise FormatError(line, f"not a range: {token!r}")
    return RangeRect(sheet, cr[0], cr[1], cr[0], cr[1])


def _is_name_token(token: str) -> bool:
    return "!" not in token and parse_a1(token.partition(":")[0]) is None


def _compile_formula(payload: str, line: int) -> Formula:
    if not payload.startswith("="):
        raise FormatError(line, "formula must start with '='")
    try:
        return parse_formula(payload)
    except (XRefUnsupported, FormulaSyntaxError) as exc:
        raise FormatError(line, str(exc)) from exc


def load_workbook(document: str, cap: int = DEFAULT_CELL_CAP) -> Workbook:
    wb: Workbook | None = None
    current_sheet: str | None = None
    # (line, name, target-token, context sheet)
    pending_names: list[tuple[int, str, str, str | None]] = []
    # (line, name, status-token, context sheet, [(line, step text)])
    pending_actions: list[tuple[int, str, str, str | None, list[tuple[int, str]]]] = []
    lines = document.splitlines()

    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if raw[0] in (" ", "\t"):
            if not pending_actions:
                raise FormatError(lineno, "indented step outside an action")
            pending_actions[-1][4].append((lineno, stripped))
            continue
        keyword = stripped.split(None, 1)[0]
        if keyword == "workbook":
            if wb is not None:
                raise FormatError(lineno, "duplicate workbook header")
            title = stripped[len("workbook"):].strip()
            if not title:
                raise FormatError(lineno, "workbook title missing")
            wb = Workbook(title, cap=cap)
            continue
        if wb is None:
            raise FormatError(lineno, "file must start with a 'workbook' line")
        if keyword == "sheet":
            name = stripped[len("sheet"):].strip()
            try:
                wb.add_sheet(name)
            except (InvalidName, DuplicateName) as exc:
                raise FormatError(lineno, str(exc)) from exc
            current_sheet = name
            continue
        if keyword == "cell":
            m = _CELL_RE.match(stripped)
            if m is None:
                raise FormatError(lineno, "malformed cell line")
            addr = _parse_addr(m.group("addr"), current_sheet, lineno)
            canon = wb.resolve_sheet(addr.sheet)
            if canon is None:
                raise FormatError(lineno, f"cell on undeclared sheet {addr.sheet!r}")
            addr = CellAddress(canon, addr.col, addr.row)
            fmt = FormatHint(m.group("fmt") or "GENERAL")
            try:
                if m.group("op") == ":=":
                    formula = _compile_formula(m.group("payload").strip(), lineno)
                    wb.set_cell(addr, formula=formula, fmt=fmt)
                else:
                    wb.set_cell(addr, value=_parse_literal(m.group("payload"), lineno), fmt=fmt)
            except CapExceeded:
                raise
            except UnknownCell as exc:
                raise FormatError(lineno, str(exc)) from exc
            continue
        if keyword == "name":
            m = _NAME_LINE_RE.match(stripped)
            if m is None:
                raise FormatError(lineno, "malformed name line")
            pending_names.append((lineno, m.group("name"), m.group("target"), current_sheet))
            continue
        if keyword == "action":
            m = _ACTION_RE.match(stripped)
            if m is None:
                raise FormatError(lineno, "malformed action line")
            pending_actions.append(
                (lineno, m.group("name"), m.group("addr"), current_sheet, [])
            )
            continue
        raise FormatError(lineno, f"unknown directive {keyword!r}")

    if wb is None:
        raise FormatError(1, "empty document")

    for lineno, name, target, ctx in pending_names:
        rect = _parse_rect(target, ctx, lineno)
        canon = wb.resolve_sheet(rect.sheet)
        if canon is None:
            raise FormatError(lineno, f"name {name!r} targets unknown sheet {rect.sheet!r}")
        rect = RangeRect(canon, rect.col1, rect.row1, rect.col2, rect.row2)
        try:
            wb.add_name(name, rect)
        except DuplicateName:
            raise
        except (InvalidName, RangeTooLarge) as exc:
            raise FormatError(lineno, str(exc)) from exc

    for lineno, name, status_token, ctx, step_lines in pending_actions:
        status = _parse_addr(status_token, ctx, lineno)
        canon = wb.resolve_sheet(status.sheet)
        if canon is None:
            raise FormatError(lineno, f"status cell on unknown sheet {status.sheet!r}")
        status = CellAddress(canon, status.col, status.row)
        steps = tuple(_parse_step(text, ctx, ln) for ln, text in step_lines)
        try:
            wb.add_action(ActionScript(name, status, steps))
        except (InvalidName, DuplicateName, UnknownName, UnknownCell, ValueError) as exc:
            raise FormatError(lineno, str(exc)) from exc

    try:
        wb.seal()
    except (UnknownName, RangeTooLarge) as exc:
        raise FormatError(len(lines), str(exc)) from exc
    return wb


def _parse_step(text: str, ctx_sheet: str | None, line: int) -> ActionStep:
    if text == "recalc":
        return RecalcStep()
    if m := _SET_RE.match(text):
        token = m.group("target")
        target = token if _is_name_token(token) else _parse_addr(token, ctx_sheet, line)
        return SetCellStep(target, _parse_literal(m.group("payload"), line))
    if m := _COPY_RE.match(text):
        src_token, dst_token = m.group("src"), m.group("dst")
        src = src_token if _is_name_token(src_token) else _parse_rect(src_token, ctx_sheet, line)
        dst = dst_token if _is_name_token(dst_token) else _parse_addr(dst_token, ctx_sheet, line)
        return CopyRangeStep(src, dst)
    if m := _CLEAR_RE.match(text):
        token = m.group("target")
        target = token if _is_name_token(token) else _parse_rect(token, ctx_sheet, line)
        return ClearRangeStep(target)
    if m := _FAILIF_RE.match(text):
        formula = _compile_formula(m.group("formula").strip(), line)
        return FailIfStep(formula, m.group("msg").replace('""', '"'))
    raise FormatError(line, f"unknown action step: {text!r}")


def save_workbook(wb: Workbook) -> str:
    """Canonical text for a workbook; loading it reproduces the same model."""
    out: list[str] = [f"workbook {wb.title}"]
    for sheet in wb.sheet_order:
        out.append(f"sheet {sheet}")
        sheet_cells = sorted(
            (addr for addr in wb.cells if addr.sheet == sheet),
            key=lambda a: (a.row, a.col),
        )
        for addr in sheet_cells:
            cell = wb.cells[addr]
            fmt = "" if cell.fmt is FormatHint.GENERAL else f" {cell.fmt.value}"
            if cell.formula is not None:
                out.append(f"cell {addr.a1()}{fmt} := {formula_to_text(cell.formula)}")
            else:
                out.append(f"cell {addr.a1()}{fmt} = {_format_literal(cell.value)}")
    for key in sorted(wb.names):
        named = wb.names[key]
        out.append(f"name {named.name} = {named.rect.text()}")
    for key in sorted(wb.actions):
        action = wb.actions[key]
        out.append(f"action {action.name} status={action.status_cell.text()}")
        for step in action.steps:
            out.append(f"  {_format_step(step)}")
    return "\n".join(out) + "\n"


def _target_text(target: str | CellAddress | RangeRect) -> str:
    if isinstance(target, str):
        return target
    return target.text()


def _format_step(step: ActionStep) -> str:
    if isinstance(step, SetCellStep):
        return f"set {_target_text(step.target)} = {_format_literal(step.value)}"
    if isinstance(step, CopyRangeStep):
        return f"copy {_target_text(step.src)} -> {_target_text(step.dst)}"
    if isinstance(step, ClearRangeStep):
        return f"clear {_target_text(step.target)}"
    if isinstance(step, RecalcStep):
        return "recalc"
    if isinstance(step, FailIfStep):
        msg = step.message.replace('"', '""')
        return f'failif {formula_to_text(step.formula)} "{msg}"'
    raise TypeError(f"unknown step {step!r}")
