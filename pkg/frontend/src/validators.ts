// Client-side input checking. Must return the exact verdicts of the server's
// checker: the shared vector file (shared/validator_parity.json) freezes the
// contract and both test suites replay it. Server verdicts stay authoritative
// at submit time regardless.

import { Datatype, ValidatorSpec } from "./types.js";
import { isoToSerial } from "./serial.js";

export type Coerced = number | string | boolean | null;

export interface Verdict {
  value: Coerced;
  failure: string | null;
}

export function isMissing(raw: unknown): boolean {
  return raw === null || raw === undefined || (typeof raw === "string" && raw.trim() === "");
}

const NUMBER_RE = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;

function coerce(datatype: Datatype, raw: unknown): Verdict {
  if (datatype === "NUMBER") {
    if (typeof raw === "boolean") return { value: null, failure: "NotANumber" };
    if (typeof raw === "number" && Number.isFinite(raw)) return { value: raw, failure: null };
    if (typeof raw === "string" && NUMBER_RE.test(raw.trim())) {
      return { value: Number(raw.trim()), failure: null };
    }
    return { value: null, failure: "NotANumber" };
  }
  if (datatype === "DATE") {
    if (typeof raw !== "string") return { value: null, failure: "NotADate" };
    const serial = isoToSerial(raw);
    return serial === null ? { value: null, failure: "NotADate" } : { value: serial, failure: null };
  }
  if (datatype === "BOOLEAN") {
    if (typeof raw === "boolean") return { value: raw, failure: null };
    if (typeof raw === "string") {
      const lowered = raw.trim().toLowerCase();
      if (lowered === "true") return { value: true, failure: null };
      if (lowered === "false") return { value: false, failure: null };
    }
    return { value: null, failure: "NotABoolean" };
  }
  if (typeof raw === "string") return { value: raw, failure: null };
  return { value: null, failure: "NotText" };
}

function rawText(raw: unknown): string {
  if (typeof raw === "string") return raw;
  if (typeof raw === "boolean") return raw ? "True" : "False";
  return String(raw);
}

function inValues(coerced: Coerced, values: (string | number)[]): boolean {
  for (const option of values) {
    if (typeof option === "number") {
      if (typeof coerced === "number" && coerced === option) return true;
    } else if (typeof coerced === "string" && coerced === option) {
      return true;
    }
  }
  return false;
}

function applyValidators(
  validators: ValidatorSpec[],
  raw: unknown,
  coerced: Coerced,
): string | null {
  for (const v of validators) {
    if (v.kind === "Required") continue; // handled before coercion
    if (v.kind === "NumericRange") {
      if (typeof coerced !== "number") return "OutOfRange";
      if (v.min !== undefined && v.min !== null && coerced < v.min) return "OutOfRange";
      if (v.max !== undefined && v.max !== null && coerced > v.max) return "OutOfRange";
    } else if (v.kind === "Pattern") {
      let re: RegExp;
      try {
        re = new RegExp(`^(?:${v.regex ?? ""})$`);
      } catch {
        return "PatternMismatch";
      }
      if (!re.test(rawText(raw))) return "PatternMismatch";
    } else if (v.kind === "MaxLength") {
      if (rawText(raw).length > (v.n ?? 0)) return "TooLong";
    } else if (v.kind === "InSet") {
      if (!inValues(coerced, v.values ?? [])) return "NotInSet";
    }
  }
  return null;
}

/** Full verdict for one field; mirrors the server's check_input_value. */
export function checkInputValue(
  datatype: Datatype,
  validators: ValidatorSpec[],
  raw: unknown,
): Verdict {
  if (isMissing(raw)) {
    if (validators.some((v) => v.kind === "Required")) {
      return { value: null, failure: "Required" };
    }
    return { value: null, failure: null };
  }
  const coerced = coerce(datatype, raw);
  if (coerced.failure !== null) return coerced;
  const failure = applyValidators(validators, raw, coerced.value);
  return failure === null ? coerced : { value: null, failure };
}
