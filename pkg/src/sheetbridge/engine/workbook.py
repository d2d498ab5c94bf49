"""In-memory workbook: sparse cells, named ranges, recalculation, actions.

A Workbook instance is single-threaded; the broker hands each instance to at
most one worker at a time.  All evaluation failures surface as error values in
cells, never as exceptions — exceptions here mean the *caller* misused the API
(unknown name, shape mismatch, ...) or a load-time rule was violated.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .addresses import MAX_COL, MAX_ROW, CellAddress, RangeRect
from .evaluator import evaluate
from .formulas import Call, CellRef, Formula, NamedRef, RangeRef, Unary, Binary
from .values import CellError, CellValue, FormatHint, Grid, scalarize, to_bool

DEFAULT_CELL_CAP = 300_000
MAX_RANGE_CELLS = 1_000_000

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_SHEET_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ADDRESS_SHAPE = re.compile(r"^[A-Za-z]{1,3}[1-9][0-9]*$")


class UnknownName(KeyError):
    pass


class UnknownCell(KeyError):
    pass


class UnknownAction(KeyError):
    pass


class ShapeMismatch(ValueError):
    pass


class CapExceeded(ValueError):
    pass


class DuplicateName(ValueError):
    pass


class InvalidName(ValueError):
    pass


class RangeTooLarge(ValueError):
    pass


@dataclass(slots=True)
class Cell:
    value: CellValue = None
    formula: Formula | None = None
    fmt: FormatHint = FormatHint.GENERAL


@dataclass(frozen=True)
class NamedRange:
    name: str
    rect: RangeRect

    @property
    def is_single(self) -> bool:
        return self.rect.area == 1


class SetCellStep(NamedTuple):
    target: str | CellAddress
    value: CellValue


class CopyRangeStep(NamedTuple):
    src: str | RangeRect
    dst: str | CellAddress


class ClearRangeStep(NamedTuple):
    target: str | RangeRect


class RecalcStep(NamedTuple):
    pass


class FailIfStep(NamedTuple):
    formula: Formula
    message: str


ActionStep = SetCellStep | CopyRangeStep | ClearRangeStep | RecalcStep | FailIfStep


@dataclass(frozen=True)
class ActionScript:
    name: str
    status_cell: CellAddress
    steps: tuple[ActionStep, ...]


@dataclass(frozen=True)
class ActionOutcome:
    ok: bool
    message: str


class _ActionFailure(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class Workbook:
    def __init__(self, title: str, cap: int = DEFAULT_CELL_CAP):
        self.title = title
        self.cap = cap
        self.sheet_order: list[str] = []
        self._sheet_canon: dict[str, str] = {}  # casefold -> declared spelling
        self.cells: dict[CellAddress, Cell] = {}
        self.names: dict[str, NamedRange] = {}  # casefold key
        self.actions: dict[str, ActionScript] = {}  # casefold key
        self.values: dict[CellAddress, CellValue] = {}
        self.origin: tuple[str, int] | None = None  # (workbook_id, revision) when registry-loaded
        self._precedents: dict[CellAddress, set[CellAddress]] = {}
        self._dependents: dict[CellAddress, set[CellAddress]] = {}
        self._dirty: set[CellAddress] = set()
        self._calculated = False

    # -- construction (used by the text loader) -------------------------------

    def add_sheet(self, name: str) -> None:
        if not _SHEET_RE.match(name):
            raise InvalidName(f"invalid sheet name {name!r}")
        if name.casefold() in self._sheet_canon:
            raise DuplicateName(f"duplicate sheet {name!r}")
        self._sheet_canon[name.casefold()] = name
        self.sheet_order.append(name)

    def set_cell(
        self,
        addr: CellAddress,
        value: CellValue = None,
        formula: Formula | None = None,
        fmt: FormatHint = FormatHint.GENERAL,
    ) -> None:
        if addr.col > MAX_COL or addr.row > MAX_ROW:
            raise UnknownCell(f"{addr.text()} is outside sheet bounds")
        if addr not in self.cells and len(self.cells) >= self.cap:
            raise CapExceeded(f"populated cell cap of {self.cap} exceeded")
        self.cells[addr] = Cell(value=value, formula=formula, fmt=fmt)

    def add_name(self, name: str, rect: RangeRect) -> None:
        if not _NAME_RE.match(name) or _ADDRESS_SHAPE.match(name):
            raise InvalidName(f"invalid range name {name!r}")
        key = name.casefold()
        if key in self.names:
            raise DuplicateName(f"duplicate range name {name!r}")
        if rect.area > MAX_RANGE_CELLS:
            raise RangeTooLarge(f"named range {name!r} spans {rect.area} cells")
        self.names[key] = NamedRange(name, rect)

    def add_action(self, action: ActionScript) -> None:
        key = action.name.casefold()
        if not _NAME_RE.match(action.name) or _ADDRESS_SHAPE.match(action.name):
            raise InvalidName(f"invalid action name {action.name!r}")
        if key in self.actions:
            raise DuplicateName(f"duplicate action {action.name!r}")
        if not action.steps:
            raise ValueError(f"action {action.name!r} has no steps")
        if self.resolve_sheet(action.status_cell.sheet) is None:
            raise UnknownCell(f"status cell {action.status_cell.text()} on unknown sheet")
        for step in action.steps:
            self._check_step_target(action.name, step)
        self.actions[key] = action

    def _check_step_target(self, action: str, step: ActionStep) -> None:
        def check(target: str | CellAddress | RangeRect) -> None:
            if isinstance(target, str):
                if target.casefold() not in self.names:
                    raise UnknownName(f"action {action!r} refers to unknown name {target!r}")
            elif self.resolve_sheet(target.sheet) is None:
                raise UnknownCell(f"action {action!r} targets unknown sheet {target.sheet!r}")

        if isinstance(step, SetCellStep):
            check(step.target)
        elif isinstance(step, CopyRangeStep):
            check(step.src)
            check(step.dst)
        elif isinstance(step, ClearRangeStep):
            check(step.target)

    def seal(self) -> None:
        """Finish construction: verify name targets and build the dependency graph."""
        for named in self.names.values():
            if self.resolve_sheet(named.rect.sheet) is None:
                raise UnknownName(
                    f"named range {named.name!r} targets unknown sheet {named.rect.sheet!r}"
                )
        self._rebuild_graph()

    # -- sheet / name resolution ----------------------------------------------

    def resolve_sheet(self, name: str) -> str | None:
        return self._sheet_canon.get(name.casefold())

    def lookup_name(self, name: str) -> NamedRange | None:
        return self.names.get(name.casefold())

    @property
    def populated_count(self) -> int:
        return len(self.cells)

    @property
    def calculated(self) -> bool:
        return self._calculated

    # -- dependency graph ------------------------------------------------------

    def _formula_precedents(self, formula: Formula, ctx_sheet: str) -> set[CellAddress]:
        out: set[CellAddress] = set()
        stack: list[Formula] = [formula]
        while stack:
            node = stack.pop()
            t = type(node)
            if t is CellRef:
                sheet = ctx_sheet if node.sheet is None else self.resolve_sheet(node.sheet)
                if sheet is not None and node.col <= MAX_COL and node.row <= MAX_ROW:
                    out.add(CellAddress(sheet, node.col, node.row))
            elif t is RangeRef:
                sheet = ctx_sheet if node.sheet is None else self.resolve_sheet(node.sheet)
                if sheet is None:
                    continue
                rect = RangeRect(sheet, node.col1, node.row1, node.col2, node.row2)
                if rect.area > MAX_RANGE_CELLS:
                    raise RangeTooLarge(f"range {rect.text()} spans {rect.area} cells")
                out.update(rect.addresses())
            elif t is NamedRef:
                named = self.lookup_name(node.name)
                if named is not None:
                    out.update(named.rect.addresses())
            elif t is Unary:
                stack.append(node.operand)
            elif t is Binary:
                stack.append(node.left)
                stack.append(node.right)
            elif t is Call:
                stack.extend(node.args)
        return out

    def _rebuild_graph(self) -> None:
        self._precedents = {}
        self._dependents = {}
        for addr, cell in self.cells.items():
            if cell.formula is None:
                continue
            precedents = self._formula_precedents(cell.formula, addr.sheet)
            self._precedents[addr] = precedents
            for p in precedents:
                self._dependents.setdefault(p, set()).add(addr)

    def _drop_formula_edges(self, addr: CellAddress) -> None:
        precedents = self._precedents.pop(addr, None)
        if precedents:
            for p in precedents:
                deps = self._dependents.get(p)
                if deps is not None:
                    deps.discard(addr)

    # -- evaluation ------------------------------------------------------------

    def eval_ref(self, sheet: str | None, col: int, row: int, ctx: str) -> CellValue:
        s = ctx if sheet is None else self.resolve_sheet(sheet)
        if s is None or col > MAX_COL or row > MAX_ROW:
            return CellError.REF
        return self.values.get(CellAddress(s, col, row))

    def eval_range(
        self, sheet: str | None, c1: int, r1: int, c2: int, r2: int, ctx: str
    ) -> Grid | CellError:
        s = ctx if sheet is None else self.resolve_sheet(sheet)
        if s is None or c2 > MAX_COL or r2 > MAX_ROW:
            return CellError.REF
        if (c2 - c1 + 1) * (r2 - r1 + 1) > MAX_RANGE_CELLS:
            return CellError.REF
        get = self.values.get
        return Grid(
            tuple(
                tuple(get(CellAddress(s, c, r)) for c in range(c1, c2 + 1))
                for r in range(r1, r2 + 1)
            )
        )

    def eval_name(self, name: str) -> CellValue | Grid:
        named = self.lookup_name(name)
        if named is None:
            return CellError.NAME
        rect = named.rect
        if rect.area == 1:
            return self.values.get(rect.anchor)
        return self.eval_range(rect.sheet, rect.col1, rect.row1, rect.col2, rect.row2, rect.sheet)

    def _eval_cell(self, addr: CellAddress) -> CellValue:
        result = scalarize(evaluate(self.cells[addr].formula, self, addr.sheet))
        if isinstance(result, Grid):
            return CellError.VALUE
        return result

    def _plan(self, targets: Iterable[CellAddress]) -> tuple[list[CellAddress], set[CellAddress]]:
        """Order formula cells so precedents come first; detect cycle members."""
        target_list = list(targets)
        target_set = set(target_list)
        indeg: dict[CellAddress, int] = {}
        for c in target_list:
            indeg[c] = sum(1 for p in self._precedents.get(c, ()) if p in target_set)
        queue = deque(c for c in target_list if indeg[c] == 0)
        order: list[CellAddress] = []
        while queue:
            c = queue.popleft()
            order.append(c)
            for d in self._dependents.get(c, ()):
                if d in indeg:
                    indeg[d] -= 1
                    if indeg[d] == 0:
                        queue.append(d)
        if len(order) == len(target_list):
            return order, set()
        done = set(order)
        leftover = [c for c in target_list if c not in done]
        cycles = self._cycle_members(leftover)
        # remaining off-cycle cells depend on cycle members; order them after
        live = set(leftover) - cycles
        indeg2 = {
            c: sum(1 for p in self._precedents.get(c, ()) if p in live) for c in live
        }
        queue = deque(c for c in leftover if c in live and indeg2[c] == 0)
        tail: list[CellAddress] = []
        while queue:
            c = queue.popleft()
            tail.append(c)
            for d in self._dependents.get(c, ()):
                if d in indeg2:
                    indeg2[d] -= 1
                    if indeg2[d] == 0:
                        queue.append(d)
        order.extend(c for c in leftover if c in cycles)
        order.extend(tail)
        return order, cycles

    def _cycle_members(self, nodes: list[CellAddress]) -> set[CellAddress]:
        """Members of strongly connected components (incl. self-loops) among nodes."""
        node_set = set(nodes)
        index: dict[CellAddress, int] = {}
        low: dict[CellAddress, int] = {}
        on_stack: set[CellAddress] = set()
        stack: list[CellAddress] = []
        cycles: set[CellAddress] = set()
        counter = 0

        def edges(c: CellAddress) -> Iterator[CellAddress]:
            return (p for p in self._precedents.get(c, ()) if p in node_set)

        for root in nodes:
            if root in index:
                continue
            work: list[tuple[CellAddress, Iterator[CellAddress]]] = [(root, edges(root))]
            index[root] = low[root] = counter
            counter += 1
            stack.append(root)
            on_stack.add(root)
            while work:
                node, it = work[-1]
                advanced = False
                for nxt in it:
                    if nxt not in index:
                        index[nxt] = low[nxt] = counter
                        counter += 1
                        stack.append(nxt)
                        on_stack.add(nxt)
                        work.append((nxt, edges(nxt)))
                        advanced = True
                        break
                    if nxt in on_stack and index[nxt] < low[node]:
                        low[node] = index[nxt]
                if advanced:
                    continue
                work.pop()
                if work and low[node] < low[work[-1][0]]:
                    low[work[-1][0]] = low[node]
                if low[node] == index[node]:
                    component = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        component.append(w)
                        if w == node:
                            break
                    if len(component) > 1 or node in self._precedents.get(node, ()):
                        cycles.update(component)
        return cycles

    def recalc_full(self) -> dict[CellAddress, CellValue]:
        values: dict[CellAddress, CellValue] = {}
        formulas: list[CellAddress] = []
        for addr, cell in self.cells.items():
            if cell.formula is None:
                values[addr] = cell.value
            else:
                formulas.append(addr)
        self.values = values
        order, cycles = self._plan(formulas)
        for addr in order:
            values[addr] = CellError.CYCLE if addr in cycles else self._eval_cell(addr)
        self._dirty.clear()
        self._calculated = True
        return dict(values)

    def recalc_incremental(
        self, changed: Iterable[CellAddress] | None = None
    ) -> dict[CellAddress, CellValue]:
        if not self._calculated:
            return self.recalc_full()
        if changed is None:
            changed_set = set(self._dirty)
        else:
            changed_set = set()
            for addr in changed:
                sheet = self.resolve_sheet(addr.sheet)
                if sheet is None:
                    raise UnknownCell(f"no sheet {addr.sheet!r}")
                changed_set.add(CellAddress(sheet, addr.col, addr.row))
        dirty_formulas: set[CellAddress] = set()
        seen = set(changed_set)
        frontier = deque(changed_set)
        while frontier:
            addr = frontier.popleft()
            for dep in self._dependents.get(addr, ()):
                if dep not in seen:
                    seen.add(dep)
                    frontier.append(dep)
                    dirty_formulas.add(dep)
        for addr in changed_set:
            cell = self.cells.get(addr)
            if cell is not None and cell.formula is not None:
                dirty_formulas.add(addr)
        order, cycles = self._plan(dirty_formulas)
        for addr in order:
            self.values[addr] = (
                CellError.CYCLE if addr in cycles else self._eval_cell(addr)
            )
        self._dirty.difference_update(changed_set)
        self._dirty.difference_update(dirty_formulas)
        return dict(self.values)

    # -- mutation ----------------------------------------------------------------

    def _resolve_target(self, target: str | CellAddress | RangeRect) -> RangeRect:
        if isinstance(target, str):
            named = self.lookup_name(target)
            if named is None:
                raise UnknownName(f"no named range {target!r}")
            return named.rect
        if isinstance(target, RangeRect):
            sheet = self.resolve_sheet(target.sheet)
            if sheet is None:
                raise UnknownName(f"no sheet {target.sheet!r}")
            return RangeRect(sheet, target.col1, target.row1, target.col2, target.row2)
        sheet = self.resolve_sheet(target.sheet)
        if sheet is None:
            raise UnknownName(f"no sheet {target.sheet!r}")
        return RangeRect.single(CellAddress(sheet, target.col, target.row))

    @staticmethod
    def _normalize_scalar(value: object) -> CellValue:
        if isinstance(value, bool) or value is None or isinstance(value, (str, CellError)):
            return value
        if isinstance(value, (int, float)):
            x = float(value)
            if not math.isfinite(x):
                raise ValueError("cell numbers must be finite")
            return x
        raise ValueError(f"unsupported cell value {value!r}")

    def set_value(
        self,
        target: str | CellAddress,
        value: object,
    ) -> None:
        """Overwrite values under a name or address; formulas there are cleared."""
        rect = self._resolve_target(target)
        if isinstance(value, Grid):
            value = value.to_lists()
        if isinstance(value, list):
            grid = [[self._normalize_scalar(v) for v in row] for row in value]
            if len(grid) != rect.height or any(len(row) != rect.width for row in grid):
                raise ShapeMismatch(
                    f"grid is {len(grid)}x{len(grid[0]) if grid else 0}, "
                    f"target {target!r} is {rect.height}x{rect.width}"
                )
        else:
            scalar = self._normalize_scalar(value)
            if rect.area != 1:
                raise ShapeMismatch(
                    f"scalar value for {target!r} which is {rect.height}x{rect.width}"
                )
            grid = [[scalar]]
        if rect.row2 > MAX_ROW or rect.col2 > MAX_COL:
            raise UnknownCell(f"{rect.text()} is outside sheet bounds")
        new_cells = 0
        for r, row in enumerate(grid):
            for c, v in enumerate(row):
                addr = CellAddress(rect.sheet, rect.col1 + c, rect.row1 + r)
                if v is not None and addr not in self.cells:
                    new_cells += 1
        if len(self.cells) + new_cells > self.cap:
            raise CapExceeded(f"populated cell cap of {self.cap} exceeded")
        for r, row in enumerate(grid):
            for c, v in enumerate(row):
                self._write_cell(CellAddress(rect.sheet, rect.col1 + c, rect.row1 + r), v)

    def _write_cell(self, addr: CellAddress, value: CellValue) -> None:
        cell = self.cells.get(addr)
        if cell is not None and cell.formula is not None:
            self._drop_formula_edges(addr)
        if value is None:
            if cell is not None:
                del self.cells[addr]
            self.values.pop(addr, None)
        else:
            if cell is None:
                self.cells[addr] = Cell(value=value)
            else:
                cell.value = value
                cell.formula = None
            self.values[addr] = value
        self._dirty.add(addr)

    def get_range(self, name: str) -> Grid:
        named = self.lookup_name(name)
        if named is None:
            raise UnknownName(f"no named range {name!r}")
        rect = named.rect
        get = self.values.get
        return Grid(
            tuple(
                tuple(get(CellAddress(rect.sheet, c, r)) for c in range(rect.col1, rect.col2 + 1))
                for r in range(rect.row1, rect.row2 + 1)
            )
        )

    # -- actions ----------------------------------------------------------------

    def run_action(self, name: str) -> ActionOutcome:
        action = self.actions.get(name.casefold())
        if action is None:
            raise UnknownAction(f"no action {name!r}")
        failure: str | None = None
        try:
            for step in action.steps:
                self._run_step(action, step)
        except _ActionFailure as fail:
            failure = fail.message
        except (
            UnknownName,
            UnknownCell,
            ShapeMismatch,
            CapExceeded,
            RangeTooLarge,
            ValueError,
        ) as exc:
            failure = str(exc)
        if failure is None:
            self.recalc_incremental()
            return ActionOutcome(True, "")
        status = CellAddress(
            self.resolve_sheet(action.status_cell.sheet) or action.status_cell.sheet,
            action.status_cell.col,
            action.status_cell.row,
        )
        self.set_value(status, f"ERR: {failure}")
        self.recalc_incremental()
        return ActionOutcome(False, failure)

    def _run_step(self, action: ActionScript, step: ActionStep) -> None:
        if isinstance(step, SetCellStep):
            self.set_value(step.target, step.value)
        elif isinstance(step, CopyRangeStep):
            self._copy_range(step.src, step.dst)
        elif isinstance(step, ClearRangeStep):
            rect = self._resolve_target(step.target)
            for addr in rect.addresses():
                self._write_cell(addr, None)
        elif isinstance(step, RecalcStep):
            self.recalc_incremental()
        elif isinstance(step, FailIfStep):
            result = to_bool(scalarize(evaluate(step.formula, self, action.status_cell.sheet)))
            if isinstance(result, CellError) or result:
                raise _ActionFailure(step.message)

    def _copy_range(self, src: str | RangeRect, dst: str | CellAddress) -> None:
        src_rect = self._resolve_target(src)
        dst_anchor = self._resolve_target(dst).anchor
        end_col = dst_anchor.col + src_rect.width - 1
        end_row = dst_anchor.row + src_rect.height - 1
        if end_col > MAX_COL or end_row > MAX_ROW:
            raise _ActionFailure(
                f"copy of {src_rect.width}x{src_rect.height} range at "
                f"{dst_anchor.text()} overflows the sheet"
            )
        snapshot = [
            [self.values.get(CellAddress(src_rect.sheet, c, r)) for c in range(src_rect.col1, src_rect.col2 + 1)]
            for r in range(src_rect.row1, src_rect.row2 + 1)
        ]
        new_cells = 0
        for r, row in enumerate(snapshot):
            for c, v in enumerate(row):
                addr = CellAddress(dst_anchor.sheet, dst_anchor.col + c, dst_anchor.row + r)
                if v is not None and addr not in self.cells:
                    new_cells += 1
        if len(self.cells) + new_cells > self.cap:
            raise CapExceeded(f"populated cell cap of {self.cap} exceeded")
        for r, row in enumerate(snapshot):
            for c, v in enumerate(row):
                self._write_cell(
                    CellAddress(dst_anchor.sheet, dst_anchor.col + c, dst_anchor.row + r), v
                )
