// Generic renderer: any schema-valid document renders with zero app-specific
// branches. Unknown component kinds degrade to a visible warning and the rest
// of the form stays usable.

import { FormModel } from "./form.js";
import { serialToIso } from "./serial.js";
import { CellJson, ComponentDoc } from "./types.js";
import { VNode, h } from "./vdom.js";

export interface RenderHooks {
  onInput(componentId: string, raw: unknown): void;
  onTab(index: number): void;
  onButton(componentId: string): void;
}

const NOOP_HOOKS: RenderHooks = { onInput: () => {}, onTab: () => {}, onButton: () => {} };

const ERROR_DISPLAY: Record<string, string> = {
  DIV0: "#DIV/0!",
  VALUE: "#VALUE!",
  REF: "#REF!",
  NAME: "#NAME?",
  NA: "#N/A",
  CYCLE: "#CYCLE!",
  XREF: "#XREF!",
  ACTION: "#ACTION!",
};

export function cellText(value: CellJson): string {
  if (value === null) return "";
  if (typeof value === "object") return ERROR_DISPLAY[value.error] ?? `#${value.error}!`;
  if (typeof value === "boolean") return value ? "TRUE" : "FALSE";
  if (typeof value === "number") {
    return Number.isInteger(value) ? value.toFixed(1) : String(value);
  }
  return value;
}

/** Output rendering honors the component's format hint (DATE shows ISO text). */
export function formatOutput(value: CellJson, format?: string): string {
  if (format === "DATE" && typeof value === "number") {
    return serialToIso(value) ?? cellText(value);
  }
  return cellText(value);
}

export function renderForm(model: FormModel, hooks: RenderHooks = NOOP_HOOKS): VNode {
  return h("form", { class: "app-form", "data-app": model.app.app_id }, [
    h("h1", { class: "app-title" }, [model.app.title]),
    renderComponent(model.app.document.root, model, hooks),
  ]);
}

function renderComponent(doc: ComponentDoc, model: FormModel, hooks: RenderHooks): VNode {
  switch (doc.kind) {
    case "TabbedPane":
      return renderTabbedPane(doc, model, hooks);
    case "Tab":
      return h("section", { class: "tab-body", "data-component": doc.id },
        (doc.children ?? []).map((c) => renderComponent(c, model, hooks)));
    case "InputField":
      return renderInputField(doc, model, hooks);
    case "ChoiceList":
      return renderChoiceList(doc, model, hooks);
    case "RadioButtons":
      return renderRadioButtons(doc, model, hooks);
    case "Button":
      return h("button", { class: "action-button", type: "button", "data-component": doc.id },
        [doc.label ?? doc.id],
        { click: () => hooks.onButton(doc.id) });
    case "OutputField":
      return h("div", { class: "output-field", "data-component": doc.id }, [
        h("span", { class: "output-label" }, [doc.label ?? doc.binding ?? ""]),
        h("output", { class: "output-value", "data-binding": doc.binding ?? "" }, [""]),
      ]);
    case "OutputTable":
      return h("div", { class: "output-table", "data-component": doc.id }, [
        h("table", {}, [
          h("thead", {}, [h("tr", {}, (doc.columns ?? []).map((c) => h("th", {}, [c])))]),
          h("tbody", {}, []),
        ]),
      ]);
    case "StaticText":
      return h("p", { class: "static-text", "data-component": doc.id }, [doc.text ?? ""]);
    default:
      return h("div", { class: "unknown-component", "data-component": doc.id, role: "alert" }, [
        `Unsupported component kind "${doc.kind}" — this part of the form cannot be shown.`,
      ]);
  }
}

function renderTabbedPane(doc: ComponentDoc, model: FormModel, hooks: RenderHooks): VNode {
  const tabs = doc.tabs ?? [];
  const bar = h("nav", { class: "tab-bar", role: "tablist" },
    tabs.map((tab, index) =>
      h("button", {
        class: index === model.activeTab ? "tab-label active" : "tab-label",
        type: "button",
        role: "tab",
        "data-component": tab.id,
        "aria-selected": index === model.activeTab ? "true" : "false",
      }, [tab.label ?? tab.id], { click: () => hooks.onTab(index) }),
    ));
  const active = tabs[model.activeTab];
  return h("div", { class: "tabbed-pane", "data-component": doc.id }, [
    bar,
    ...(active !== undefined ? [renderComponent(active, model, hooks)] : []),
  ]);
}

function fieldWrapper(doc: ComponentDoc, model: FormModel, control: VNode): VNode {
  const error = model.fields.get(doc.id)?.error ?? null;
  const children: (VNode | string)[] = [
    h("label", { class: "field-label", for: `field-${doc.id}` }, [doc.label ?? doc.id]),
    control,
  ];
  if (error !== null) {
    children.push(h("span", { class: "field-error", role: "alert" }, [error]));
  }
  return h("div", { class: error === null ? "field" : "field invalid", "data-component": doc.id },
    children);
}

function renderInputField(doc: ComponentDoc, model: FormModel, hooks: RenderHooks): VNode {
  const state = model.fields.get(doc.id);
  const raw = state?.raw;
  const control = h("input", {
    class: "field-input",
    id: `field-${doc.id}`,
    name: doc.id,
    type: doc.datatype === "DATE" ? "date" : "text",
    value: raw === null || raw === undefined ? "" : String(raw),
  }, [], {
    input: (event) => hooks.onInput(doc.id, (event.target as HTMLInputElement).value),
  });
  return fieldWrapper(doc, model, control);
}

function renderChoiceList(doc: ComponentDoc, model: FormModel, hooks: RenderHooks): VNode {
  const state = model.fields.get(doc.id);
  const options = state?.options ?? [];
  const control = h("select", { class: "field-choice", id: `field-${doc.id}`, name: doc.id },
    [
      h("option", { value: "" }, [""]),
      ...options.map((option) =>
        h("option", {
          value: String(option),
          ...(state?.raw === option ? { selected: "selected" } : {}),
        }, [String(option)])),
    ],
    { change: (event) => hooks.onInput(doc.id, (event.target as HTMLSelectElement).value) });
  return fieldWrapper(doc, model, control);
}

function renderRadioButtons(doc: ComponentDoc, model: FormModel, hooks: RenderHooks): VNode {
  const state = model.fields.get(doc.id);
  const options = state?.options ?? [];
  const group = h("div", { class: "radio-group", role: "radiogroup" },
    options.map((option) =>
      h("label", { class: "radio-option" }, [
        h("input", {
          type: "radio",
          name: doc.id,
          value: String(option),
          ...(state?.raw === option ? { checked: "true" } : {}),
        }, [], {
          change: () => hooks.onInput(doc.id, option),
        }),
        String(option),
      ])));
  return fieldWrapper(doc, model, group);
}
