"""Declarative form-style app definitions bound to workbook named ranges."""

from .model import (
    Acl,
    AppDefinition,
    AppDefFormatError,
    Button,
    ChartData,
    ChoiceList,
    Component,
    Heading,
    InputField,
    InSet,
    MaxLength,
    NumericRange,
    OutputField,
    OutputTable,
    Paragraph,
    Pattern,
    RadioButtons,
    ReportTemplate,
    Required,
    Series,
    StaticText,
    Tab,
    TabbedPane,
    TableSection,
    Validator,
    WorkbookRef,
    loads_appdef,
    parse_appdef,
)
from .run import (
    ReportDocument,
    RunResult,
    StaleDefinition,
    UnresolvedName,
    apply_submission,
    check_input_value,
    choice_options,
    render_report,
)
from .validate import ValidationIssue, ValidationReport, validate_appdef

__all__ = [
    "Acl",
    "AppDefinition",
    "AppDefFormatError",
    "Button",
    "ChartData",
    "ChoiceList",
    "Component",
    "Heading",
    "InputField",
    "InSet",
    "MaxLength",
    "NumericRange",
    "OutputField",
    "OutputTable",
    "Paragraph",
    "Pattern",
    "RadioButtons",
    "ReportDocument",
    "ReportTemplate",
    "Required",
    "RunResult",
    "Series",
    "StaleDefinition",
    "StaticText",
    "Tab",
    "TabbedPane",
    "TableSection",
    "UnresolvedName",
    "ValidationIssue",
    "ValidationReport",
    "Validator",
    "WorkbookRef",
    "apply_submission",
    "check_input_value",
    "choice_options",
    "loads_appdef",
    "parse_appdef",
    "render_report",
    "validate_appdef",
]
