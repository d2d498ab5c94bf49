// Shapes of the documents served by the /api/v1 REST surface.

export type Datatype = "NUMBER" | "TEXT" | "DATE" | "BOOLEAN";

export interface ValidatorSpec {
  kind: "Required" | "NumericRange" | "Pattern" | "MaxLength" | "InSet";
  min?: number;
  max?: number;
  regex?: string;
  n?: number;
  values?: (string | number)[];
}

export interface ComponentDoc {
  kind: string;
  id: string;
  label?: string;
  text?: string;
  binding?: string;
  datatype?: Datatype;
  validators?: ValidatorSpec[];
  options?: (string | number)[];
  options_from?: string;
  action?: string;
  columns?: string[];
  format?: string;
  tabs?: ComponentDoc[];
  children?: ComponentDoc[];
}

export interface AppDocument {
  app_id: string;
  title: string;
  workbook_ref: { id: string; revision: number };
  root: ComponentDoc;
  report?: { sections: unknown[] };
}

export interface AppResponse {
  app_id: string;
  title: string;
  revision: number;
  workbook: { id: string; revision: number };
  document: AppDocument;
  options: Record<string, (string | number)[]>;
}

export interface AppListEntry {
  app_id: string;
  title: string;
  revision: number;
}

export type CellJson =
  | number
  | string
  | boolean
  | null
  | { error: string };

export interface ValidationFailure {
  component_id: string;
  reason: string;
}

export interface ReportSection {
  kind: string;
  text?: string;
  labels?: string[];
  rows?: CellJson[][];
  chart?: "LINE" | "BAR";
  series?: { label: string; points: (number | null)[] }[];
}

export interface RunResultJson {
  outcome: "OK" | "VALIDATION_FAILED" | "ACTION_ERROR";
  message: string;
  outputs: Record<string, CellJson | CellJson[][]>;
  validation_failures: ValidationFailure[];
  report: { sections: ReportSection[] } | null;
}

export interface JobResponse {
  job_id: string;
  status: "QUEUED" | "RUNNING" | "DONE" | "FAILED";
  result: RunResultJson | null;
  failure: { code: string; message: string } | null;
}
