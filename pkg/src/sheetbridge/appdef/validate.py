"""Author-time checking of an app definition against its workbook revision."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..engine import Workbook
from .model import (
    AppDefinition,
    Button,
    ChartData,
    ChoiceList,
    InputField,
    InSet,
    MaxLength,
    NumericRange,
    OutputField,
    OutputTable,
    Paragraph,
    Pattern,
    RadioButtons,
    Required,
    TableSection,
    INTERPOLATION_RE,
)


@dataclass(frozen=True)
class ValidationIssue:
    component_id: str
    reason: str

    def to_json(self) -> dict:
        return {"component_id": self.component_id, "reason": self.reason}


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, component_id: str, reason: str) -> None:
        self.errors.append(ValidationIssue(component_id, reason))

    def to_json(self) -> dict:
        return {"ok": self.ok, "errors": [e.to_json() for e in self.errors]}


def _check_binding(report, wb, component_id, name, want_single=False, want_vector=False):
    named = wb.lookup_name(name)
    if named is None:
        report.add(component_id, f"UnresolvedBinding: no named range {name!r}")
        return
    rect = named.rect
    if want_single and rect.area != 1:
        report.add(
            component_id,
            f"ShapeError: {name!r} is {rect.height}x{rect.width}, expected a single cell",
        )
    if want_vector and rect.height != 1 and rect.width != 1:
        report.add(
            component_id,
            f"ShapeError: {name!r} is {rect.height}x{rect.width}, expected one row or column",
        )


def _check_validators(report: ValidationReport, component) -> None:
    for v in component.validators:
        if isinstance(v, NumericRange):
            if v.min is not None and v.max is not None and v.min > v.max:
                report.add(component.id, f"BadValidator: NumericRange min {v.min} > max {v.max}")
            if isinstance(component, InputField) and component.datatype != "NUMBER":
                report.add(
                    component.id,
                    f"BadValidator: NumericRange on {component.datatype} field",
                )
        elif isinstance(v, Pattern):
            try:
                re.compile(v.regex)
            except re.error as exc:
                report.add(component.id, f"BadValidator: Pattern does not compile ({exc})")
        elif isinstance(v, MaxLength):
            if v.n < 0:
                report.add(component.id, "BadValidator: MaxLength is negative")
        elif isinstance(v, InSet):
            if not v.values:
                report.add(component.id, "BadValidator: InSet has no values")
        elif not isinstance(v, Required):
            report.add(component.id, f"BadValidator: unknown validator {v!r}")


def validate_appdef(appdef: AppDefinition, wb: Workbook) -> ValidationReport:
    """Empty report iff every binding resolves with a compatible shape,
    referenced actions exist, ids are unique and validators are well-formed."""
    report = ValidationReport()
    seen: set[str] = set()
    for component in appdef.walk():
        if component.id in seen:
            report.add(component.id, "DuplicateId: component id reused")
        seen.add(component.id)
        if isinstance(component, InputField):
            _check_binding(report, wb, component.id, component.binding, want_single=True)
            _check_validators(report, component)
        elif isinstance(component, (ChoiceList, RadioButtons)):
            _check_binding(report, wb, component.id, component.binding, want_single=True)
            _check_validators(report, component)
            has_static = component.options is not None
            has_dynamic = component.options_from is not None
            if has_static == has_dynamic:
                report.add(
                    component.id,
                    "BadOptions: exactly one of options/options_from is required",
                )
            elif has_dynamic:
                _check_binding(report, wb, component.id, component.options_from, want_vector=True)
            elif not component.options:
                report.add(component.id, "BadOptions: empty options list")
        elif isinstance(component, Button):
            if component.action.casefold() not in wb.actions:
                report.add(component.id, f"UnknownAction: no action {component.action!r}")
        elif isinstance(component, OutputField):
            _check_binding(report, wb, component.id, component.binding, want_single=True)
        elif isinstance(component, OutputTable):
            _check_binding(report, wb, component.id, component.binding)
    _validate_report_template(report, appdef, wb)
    return report


def _validate_report_template(report: ValidationReport, appdef: AppDefinition, wb: Workbook) -> None:
    for index, section in enumerate(appdef.report.sections):
        section_id = f"report[{index}]"
        if isinstance(section, Paragraph):
            for name in INTERPOLATION_RE.findall(section.text):
                if wb.lookup_name(name) is None:
                    report.add(section_id, f"UnresolvedBinding: no named range {name!r}")
        elif isinstance(section, TableSection):
            _check_binding(report, wb, section_id, section.binding)
        elif isinstance(section, ChartData):
            for series in section.series:
                _check_binding(report, wb, section_id, series.binding, want_vector=True)
