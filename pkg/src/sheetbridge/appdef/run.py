"""Applying a submission to a workbook instance and rendering report data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from ..engine import Grid, Workbook, iso_to_serial, value_to_json
from ..engine.dates import DateOutOfRange, PhantomDate
from ..engine.values import display_text
from .model import (
    AppDefinition,
    ChoiceList,
    InputField,
    InSet,
    MaxLength,
    NumericRange,
    OutputField,
    Paragraph,
    Pattern,
    RadioButtons,
    Required,
    ChartData,
    Heading,
    TableSection,
    INTERPOLATION_RE,
)
from .validate import ValidationIssue

import re


class StaleDefinition(Exception):
    """The workbook instance is not the revision this definition pins."""


class UnresolvedName(KeyError):
    """A report template references a name absent from the value state."""


@dataclass(frozen=True)
class ReportDocument:
    sections: tuple[dict, ...]

    def to_json(self) -> dict:
        return {"sections": [dict(s) for s in self.sections]}


@dataclass
class RunResult:
    outcome: str  # OK | VALIDATION_FAILED | ACTION_ERROR
    outputs: dict[str, object] = field(default_factory=dict)
    validation_failures: list[ValidationIssue] = field(default_factory=list)
    report: ReportDocument | None = None
    message: str = ""

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "message": self.message,
            "outputs": self.outputs,
            "validation_failures": [f.to_json() for f in self.validation_failures],
            "report": self.report.to_json() if self.report is not None else None,
        }


def is_missing(raw: object) -> bool:
    return raw is None or (isinstance(raw, str) and raw.strip() == "")


# plain decimal/scientific notation only: no inf/nan/underscores, so the
# browser client can reproduce verdicts with the same expression
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def coerce_input(datatype: str, raw: object):
    """Coerce a submitted raw value; returns (cell value, failure code)."""
    if datatype == "NUMBER":
        if isinstance(raw, bool):
            return None, "NotANumber"
        if isinstance(raw, (int, float)):
            if not math.isfinite(raw):
                return None, "NotANumber"
            return float(raw), None
        if isinstance(raw, str) and _NUMBER_RE.match(raw.strip()):
            return float(raw.strip()), None
        return None, "NotANumber"
    if datatype == "DATE":
        if not isinstance(raw, str):
            return None, "NotADate"
        try:
            return float(iso_to_serial(raw)), None
        except (DateOutOfRange, PhantomDate):
            return None, "NotADate"
    if datatype == "BOOLEAN":
        if isinstance(raw, bool):
            return raw, None
        if isinstance(raw, str):
            lowered = raw.strip().lower()
            if lowered == "true":
                return True, None
            if lowered == "false":
                return False, None
        return None, "NotABoolean"
    if isinstance(raw, str):
        return raw, None
    return None, "NotText"


def apply_validators(validators, raw: object, coerced: object) -> str | None:
    for v in validators:
        if isinstance(v, Required):
            continue  # checked before coercion
        if isinstance(v, NumericRange):
            if not isinstance(coerced, float):
                return "OutOfRange"
            if v.min is not None and coerced < v.min:
                return "OutOfRange"
            if v.max is not None and coerced > v.max:
                return "OutOfRange"
        elif isinstance(v, Pattern):
            if re.fullmatch(v.regex, str(raw)) is None:
                return "PatternMismatch"
        elif isinstance(v, MaxLength):
            if len(str(raw)) > v.n:
                return "TooLong"
        elif isinstance(v, InSet):
            if not _in_values(coerced, v.values):
                return "NotInSet"
    return None


def _in_values(coerced: object, values) -> bool:
    for option in values:
        if isinstance(option, (int, float)) and not isinstance(option, bool):
            if isinstance(coerced, float) and coerced == float(option):
                return True
        elif isinstance(option, str) and isinstance(coerced, str) and coerced == option:
            return True
    return False


def check_input_value(datatype: str, validators, raw: object):
    """Full verdict for one field: (coerced value | None, failure code | None).

    Mirrored by the browser client; the shared parity vector file freezes
    this function's verdicts.
    """
    if is_missing(raw):
        if any(isinstance(v, Required) for v in validators):
            return None, "Required"
        return None, None  # optional and absent: nothing to write
    coerced, failure = coerce_input(datatype, raw)
    if failure is not None:
        return None, failure
    failure = apply_validators(validators, raw, coerced)
    if failure is not None:
        return None, failure
    return coerced, None


def choice_options(component, wb: Workbook) -> list:
    if component.options is not None:
        return [float(o) if isinstance(o, (int, float)) and not isinstance(o, bool) else o
                for o in component.options]
    grid = wb.get_range(component.options_from)
    return [v for v in grid.cells() if v is not None]


def _match_option(raw: object, options: list):
    for option in options:
        if isinstance(option, float):
            if isinstance(raw, bool):
                continue
            if isinstance(raw, (int, float)) and float(raw) == option:
                return option
            if isinstance(raw, str):
                try:
                    if float(raw.strip()) == option:
                        return option
                except ValueError:
                    pass
        elif isinstance(option, str) and isinstance(raw, str) and raw == option:
            return option
    return None


def apply_submission(
    appdef: AppDefinition,
    wb: Workbook,
    inputs: Mapping[str, object],
    pressed: str | None = None,
) -> RunResult:
    """Validate, write inputs, optionally run the pressed button's action,
    recalculate, and extract outputs and report data.

    Fail-fast: any validation failure means nothing is written to the workbook.
    """
    ref = appdef.workbook_ref
    if wb.origin is not None and wb.origin != (ref.id, ref.revision):
        raise StaleDefinition(
            f"definition pins {ref.id} r{ref.revision}, instance is "
            f"{wb.origin[0]} r{wb.origin[1]}"
        )
    if not wb.calculated:
        wb.recalc_full()

    failures: list[ValidationIssue] = []
    staged: list[tuple[str, object]] = []
    known_ids = set()
    for component in appdef.input_components():
        known_ids.add(component.id)
        raw = inputs.get(component.id)
        if isinstance(component, InputField):
            coerced, failure = check_input_value(component.datatype, component.validators, raw)
            if failure is not None:
                failures.append(ValidationIssue(component.id, failure))
            elif coerced is not None:
                staged.append((component.binding, coerced))
        else:  # ChoiceList / RadioButtons
            required = any(isinstance(v, Required) for v in component.validators)
            if is_missing(raw):
                if required:
                    failures.append(ValidationIssue(component.id, "Required"))
                continue
            option = _match_option(raw, choice_options(component, wb))
            if option is None:
                failures.append(ValidationIssue(component.id, "NotAnOption"))
            else:
                staged.append((component.binding, option))

    for key in inputs:
        if key not in known_ids:
            failures.append(ValidationIssue(key, "UnknownComponent"))
    button = None
    if pressed is not None:
        button = appdef.buttons().get(pressed)
        if button is None:
            failures.append(ValidationIssue(pressed, "UnknownButton"))

    if failures:
        return RunResult(outcome="VALIDATION_FAILED", validation_failures=failures)

    for binding, value in staged:
        wb.set_value(binding, value)
    wb.recalc_incremental()

    outcome, message = "OK", ""
    if button is not None:
        action_outcome = wb.run_action(button.action)
        if not action_outcome.ok:
            outcome, message = "ACTION_ERROR", action_outcome.message

    outputs: dict[str, object] = {}
    for component in appdef.output_components():
        grid = wb.get_range(component.binding)
        if isinstance(component, OutputField):
            outputs[component.id] = value_to_json(grid.rows[0][0])
        else:
            outputs[component.id] = value_to_json(grid)

    values = {named.name: wb.get_range(named.name) for named in wb.names.values()}
    report = render_report(appdef, values)
    return RunResult(outcome=outcome, outputs=outputs, report=report, message=message)


def render_report(appdef: AppDefinition, values: Mapping[str, Grid]) -> ReportDocument:
    """Deterministic report data from a post-run value state."""
    lookup = {name.casefold(): grid for name, grid in values.items()}

    def grid_for(name: str) -> Grid:
        grid = lookup.get(name.casefold())
        if grid is None:
            raise UnresolvedName(name)
        return grid

    sections: list[dict] = []
    for section in appdef.report.sections:
        if isinstance(section, Heading):
            sections.append({"kind": "Heading", "text": section.text})
        elif isinstance(section, Paragraph):
            def substitute(match: re.Match) -> str:
                grid = grid_for(match.group(1))
                return display_text(grid.rows[0][0])

            sections.append(
                {"kind": "Paragraph", "text": INTERPOLATION_RE.sub(substitute, section.text)}
            )
        elif isinstance(section, TableSection):
            grid = grid_for(section.binding)
            sections.append(
                {
                    "kind": "Table",
                    "labels": list(section.labels),
                    "rows": value_to_json(grid),
                }
            )
        elif isinstance(section, ChartData):
            series_out = []
            for series in section.series:
                grid = grid_for(series.binding)
                points = [
                    v if isinstance(v, float) and not isinstance(v, bool) else None
                    for v in grid.cells()
                ]
                series_out.append({"label": series.label, "points": points})
            sections.append({"kind": "Chart", "chart": section.chart, "series": series_out})
    return ReportDocument(tuple(sections))
