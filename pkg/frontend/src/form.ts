// Form state for one fetched app: field values, client verdicts, active tab.
// The field set mirrors the component tree exactly; nothing here is
// app-specific.

import { AppResponse, ComponentDoc, Datatype, ValidatorSpec } from "./types.js";
import { checkInputValue, isMissing } from "./validators.js";

export interface FieldState {
  component: ComponentDoc;
  datatype: Datatype;
  validators: ValidatorSpec[];
  options: (string | number)[] | null; // resolved choices (static or snapshot)
  raw: unknown;
  error: string | null;
}

function* walk(component: ComponentDoc): Generator<ComponentDoc> {
  yield component;
  for (const child of component.tabs ?? []) yield* walk(child);
  for (const child of component.children ?? []) yield* walk(child);
}

const INPUT_KINDS = new Set(["InputField", "ChoiceList", "RadioButtons"]);

export class FormModel {
  readonly app: AppResponse;
  readonly fields = new Map<string, FieldState>();
  activeTab = 0;

  constructor(app: AppResponse) {
    this.app = app;
    for (const component of walk(app.document.root)) {
      if (!INPUT_KINDS.has(component.kind)) continue;
      const isChoice = component.kind !== "InputField";
      let options: (string | number)[] | null = null;
      if (isChoice) {
        options = component.options ?? app.options[component.id] ?? [];
      }
      this.fields.set(component.id, {
        component,
        datatype: component.datatype ?? "TEXT",
        validators: component.validators ?? [],
        options,
        raw: null,
        error: null,
      });
    }
  }

  setValue(componentId: string, raw: unknown): void {
    const field = this.fields.get(componentId);
    if (field === undefined) return;
    field.raw = raw;
    field.error = null;
  }

  /** Run client-side validation; returns true when every field passes. */
  validate(): boolean {
    let ok = true;
    for (const field of this.fields.values()) {
      field.error = this.checkField(field);
      if (field.error !== null) ok = false;
    }
    return ok;
  }

  private checkField(field: FieldState): string | null {
    if (field.options !== null) {
      const required = field.validators.some((v) => v.kind === "Required");
      if (isMissing(field.raw)) return required ? "Required" : null;
      const raw = field.raw;
      const hit = field.options.some((option) =>
        typeof option === "number"
          ? Number(raw) === option && typeof raw !== "boolean"
          : raw === option,
      );
      return hit ? null : "NotAnOption";
    }
    return checkInputValue(field.datatype, field.validators, field.raw).failure;
  }

  /** Inputs payload for POST /apps/{id}/runs: only filled fields are sent. */
  collectInputs(): Record<string, unknown> {
    const inputs: Record<string, unknown> = {};
    for (const [id, field] of this.fields.entries()) {
      if (!isMissing(field.raw)) inputs[id] = field.raw;
    }
    return inputs;
  }

  /** Merge server verdicts in (the server is authoritative). */
  applyServerFailures(failures: { component_id: string; reason: string }[]): void {
    for (const failure of failures) {
      const field = this.fields.get(failure.component_id);
      if (field !== undefined) field.error = failure.reason;
    }
  }
}
