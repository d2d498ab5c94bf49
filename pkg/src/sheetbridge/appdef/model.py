"""App-definition documents: a component tree bound to named ranges.

Documents are JSON; the shipped schema.json gives the structural contract and
`parse_appdef` builds the typed model from a schema-valid document.  Semantic
rules (bindings resolve, shapes fit, actions exist) live in validate.py.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator, Union

import jsonschema


class AppDefFormatError(ValueError):
    pass


def _schema() -> dict:
    with resources.files(__package__).joinpath("schema.json").open("rb") as fh:
        return json.load(fh)


_SCHEMA = _schema()
_VALIDATOR = jsonschema.Draft202012Validator(_SCHEMA)


@dataclass(frozen=True)
class WorkbookRef:
    id: str
    revision: int


@dataclass(frozen=True)
class Acl:
    min_role: str = "END_USER"


# -- validators ----------------------------------------------------------------


@dataclass(frozen=True)
class Required:
    kind: str = "Required"


@dataclass(frozen=True)
class NumericRange:
    min: float | None = None
    max: float | None = None
    kind: str = "NumericRange"


@dataclass(frozen=True)
class Pattern:
    regex: str = ""
    kind: str = "Pattern"


@dataclass(frozen=True)
class MaxLength:
    n: int = 0
    kind: str = "MaxLength"


@dataclass(frozen=True)
class InSet:
    values: tuple = ()
    kind: str = "InSet"


Validator = Union[Required, NumericRange, Pattern, MaxLength, InSet]


# -- components ------------------------------------------------------------------


@dataclass(frozen=True)
class TabbedPane:
    id: str
    tabs: tuple["Tab", ...]
    kind: str = "TabbedPane"


@dataclass(frozen=True)
class Tab:
    id: str
    label: str
    children: tuple["Component", ...]
    kind: str = "Tab"


@dataclass(frozen=True)
class InputField:
    id: str
    label: str
    binding: str
    datatype: str
    validators: tuple[Validator, ...] = ()
    kind: str = "InputField"


@dataclass(frozen=True)
class ChoiceList:
    id: str
    label: str
    binding: str
    options: tuple | None = None
    options_from: str | None = None
    validators: tuple[Validator, ...] = ()
    kind: str = "ChoiceList"


@dataclass(frozen=True)
class RadioButtons:
    id: str
    label: str
    binding: str
    options: tuple | None = None
    options_from: str | None = None
    validators: tuple[Validator, ...] = ()
    kind: str = "RadioButtons"


@dataclass(frozen=True)
class Button:
    id: str
    label: str
    action: str
    kind: str = "Button"


@dataclass(frozen=True)
class OutputField:
    id: str
    binding: str
    label: str = ""
    format: str = "GENERAL"
    kind: str = "OutputField"


@dataclass(frozen=True)
class OutputTable:
    id: str
    binding: str
    columns: tuple[str, ...] = ()
    label: str = ""
    kind: str = "OutputTable"


@dataclass(frozen=True)
class StaticText:
    id: str
    text: str
    kind: str = "StaticText"


Component = Union[
    TabbedPane, Tab, InputField, ChoiceList, RadioButtons, Button,
    OutputField, OutputTable, StaticText,
]

INPUT_KINDS = (InputField, ChoiceList, RadioButtons)


# -- report ----------------------------------------------------------------------


@dataclass(frozen=True)
class Heading:
    text: str
    kind: str = "Heading"


@dataclass(frozen=True)
class Paragraph:
    text: str
    kind: str = "Paragraph"


@dataclass(frozen=True)
class TableSection:
    binding: str
    labels: tuple[str, ...]
    kind: str = "Table"


@dataclass(frozen=True)
class Series:
    label: str
    binding: str


@dataclass(frozen=True)
class ChartData:
    chart: str
    series: tuple[Series, ...]
    kind: str = "ChartData"


Section = Union[Heading, Paragraph, TableSection, ChartData]


@dataclass(frozen=True)
class ReportTemplate:
    sections: tuple[Section, ...] = ()


@dataclass(frozen=True)
class AppDefinition:
    app_id: str
    title: str
    workbook_ref: WorkbookRef
    acl: Acl
    root: Component
    report: ReportTemplate = field(default_factory=ReportTemplate)

    def walk(self) -> Iterator[Component]:
        return walk(self.root)

    def input_components(self) -> list[Component]:
        return [c for c in self.walk() if isinstance(c, INPUT_KINDS)]

    def buttons(self) -> dict[str, Button]:
        return {c.id: c for c in self.walk() if isinstance(c, Button)}

    def output_components(self) -> list[Component]:
        return [c for c in self.walk() if isinstance(c, (OutputField, OutputTable))]


def walk(component: Component) -> Iterator[Component]:
    yield component
    if isinstance(component, TabbedPane):
        for tab in component.tabs:
            yield from walk(tab)
    elif isinstance(component, Tab):
        for child in component.children:
            yield from walk(child)


# -- parsing ----------------------------------------------------------------------


def _parse_validator(doc: dict) -> Validator:
    kind = doc["kind"]
    if kind == "Required":
        return Required()
    if kind == "NumericRange":
        return NumericRange(min=doc.get("min"), max=doc.get("max"))
    if kind == "Pattern":
        return Pattern(regex=doc.get("regex", ""))
    if kind == "MaxLength":
        return MaxLength(n=doc.get("n", 0))
    return InSet(values=tuple(doc.get("values", ())))


def _parse_component(doc: dict) -> Component:
    kind = doc["kind"]
    cid = doc["id"]
    validators = tuple(_parse_validator(v) for v in doc.get("validators", ()))
    if kind == "TabbedPane":
        return TabbedPane(cid, tuple(_parse_component(t) for t in doc["tabs"]))
    if kind == "Tab":
        return Tab(cid, doc["label"], tuple(_parse_component(c) for c in doc["children"]))
    if kind == "InputField":
        return InputField(cid, doc["label"], doc["binding"], doc["datatype"], validators)
    if kind in ("ChoiceList", "RadioButtons"):
        cls = ChoiceList if kind == "ChoiceList" else RadioButtons
        options = doc.get("options")
        return cls(
            cid,
            doc["label"],
            doc["binding"],
            tuple(options) if options is not None else None,
            doc.get("options_from"),
            validators,
        )
    if kind == "Button":
        return Button(cid, doc["label"], doc["action"])
    if kind == "OutputField":
        return OutputField(cid, doc["binding"], doc.get("label", ""), doc.get("format", "GENERAL"))
    if kind == "OutputTable":
        return OutputTable(cid, doc["binding"], tuple(doc["columns"]), doc.get("label", ""))
    return StaticText(cid, doc["text"])


def _parse_section(doc: dict) -> Section:
    kind = doc["kind"]
    if kind == "Heading":
        return Heading(doc["text"])
    if kind == "Paragraph":
        return Paragraph(doc["text"])
    if kind == "Table":
        return TableSection(doc["binding"], tuple(doc["labels"]))
    return ChartData(doc["chart"], tuple(Series(s["label"], s["binding"]) for s in doc["series"]))


def parse_appdef(document: dict) -> AppDefinition:
    """Build the typed model from a JSON document; structural errors raise."""
    errors = sorted(_VALIDATOR.iter_errors(document), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise AppDefFormatError(f"{first.json_path}: {first.message}")
    report_doc = document.get("report") or {"sections": []}
    return AppDefinition(
        app_id=document["app_id"],
        title=document["title"],
        workbook_ref=WorkbookRef(
            document["workbook_ref"]["id"], int(document["workbook_ref"]["revision"])
        ),
        acl=Acl(**document.get("acl", {})),
        root=_parse_component(document["root"]),
        report=ReportTemplate(tuple(_parse_section(s) for s in report_doc["sections"])),
    )


def loads_appdef(text: str) -> AppDefinition:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AppDefFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise AppDefFormatError("document must be a JSON object")
    return parse_appdef(document)


INTERPOLATION_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_.]*)\}")
