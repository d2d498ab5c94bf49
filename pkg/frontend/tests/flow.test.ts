// Submit-and-poll flow against a stub API: blank inputs display 0.0 totals,
// client validation blocks the request, server failures land per field,
// FAILED jobs surface the job id, and stale definitions prompt a reload.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, PollCancelled, submitAndPoll } from "../src/api.js";
import { RunController } from "../src/controller.js";
import { FormModel } from "../src/form.js";
import { renderOutputs } from "../src/report.js";
import { AppResponse, JobResponse, RunResultJson } from "../src/types.js";
import { byClass, text } from "../src/vdom.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture: AppResponse = JSON.parse(
  readFileSync(join(here, "fixtures", "balance_sheet_response.json"), "utf-8"),
);

const ZERO_TOTALS: RunResultJson = {
  outcome: "OK",
  message: "",
  outputs: {
    "totalcurrentassets-y1": 0.0,
    "totalcurrentassets-y2": 0.0,
    "totalcurrentassets-y3": 0.0,
    "netppe-y1": 0.0,
    "totalassets-y1": 0.0,
  },
  validation_failures: [],
  report: { sections: [{ kind: "Paragraph", text: "Total Assets (Year One): 0.0" }] },
};

class StubClient implements ApiClient {
  submissions: { inputs: Record<string, unknown>; pressed: string | null }[] = [];
  polls = 0;
  pollsUntilDone = 2;
  terminal: JobResponse = {
    job_id: "job-1", status: "DONE", result: ZERO_TOTALS, failure: null,
  };
  submitError: ApiError | null = null;

  async listApps() {
    return [{ app_id: fixture.app_id, title: fixture.title, revision: 1 }];
  }

  async getApp() {
    return fixture;
  }

  async submitRun(_: string, inputs: Record<string, unknown>, pressed: string | null) {
    if (this.submitError !== null) throw this.submitError;
    this.submissions.push({ inputs, pressed });
    return "job-1";
  }

  async getRun(jobId: string): Promise<JobResponse> {
    this.polls += 1;
    if (this.polls < this.pollsUntilDone) {
      return { job_id: jobId, status: "RUNNING", result: null, failure: null };
    }
    return this.terminal;
  }
}

const fastPoll = { intervalMs: 1, sleep: async () => {} };

describe("submit and poll", () => {
  it("blank submission displays 0.0 totals", async () => {
    const client = new StubClient();
    const model = new FormModel(fixture);
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit("submit");
    expect(controller.state.phase).toBe("done");
    expect(client.submissions).toEqual([{ inputs: {}, pressed: "submit" }]);
    const outputs = renderOutputs(controller.state.result!);
    const shown = byClass(outputs, "run-outputs")
      .flatMap((n) => n.children)
      .map((n) => text(n));
    expect(shown).toContain("totalcurrentassets-y1");
    expect(shown).toContain("0.0");
    expect(controller.state.result!.outputs["totalassets-y1"]).toBe(0.0);
  });

  it("client-side required violation: inline error, no network call", async () => {
    const strict: AppResponse = JSON.parse(JSON.stringify(fixture));
    strict.document.root.tabs![0].children![0].validators = [{ kind: "Required" }];
    const client = new StubClient();
    const model = new FormModel(strict);
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(client.submissions.length).toBe(0);
    expect(controller.state.phase).toBe("idle");
    expect(model.fields.get("operatingcash-y1")!.error).toBe("Required");
  });

  it("numbers are validated before send", async () => {
    const client = new StubClient();
    const model = new FormModel(fixture);
    model.setValue("operatingcash-y1", "not a number");
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(client.submissions.length).toBe(0);
    expect(model.fields.get("operatingcash-y1")!.error).toBe("NotANumber");
  });

  it("server VALIDATION_FAILED verdicts land on fields", async () => {
    const client = new StubClient();
    client.terminal = {
      job_id: "job-1",
      status: "DONE",
      failure: null,
      result: {
        outcome: "VALIDATION_FAILED",
        message: "",
        outputs: {},
        validation_failures: [{ component_id: "currency", reason: "NotAnOption" }],
        report: null,
      },
    };
    const model = new FormModel(fixture);
    model.setValue("currency", "USD"); // passes client-side, server still rejects
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(controller.state.phase).toBe("done");
    expect(model.fields.get("currency")!.error).toBe("NotAnOption");
  });

  it("FAILED jobs show an error panel with the job id", async () => {
    const client = new StubClient();
    client.terminal = {
      job_id: "job-1", status: "FAILED", result: null,
      failure: { code: "SYSTEM_ERROR", message: "worker crashed" },
    };
    const model = new FormModel(fixture);
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(controller.state.phase).toBe("failed");
    expect(controller.state.jobId).toBe("job-1");
    expect(controller.state.failure!.code).toBe("SYSTEM_ERROR");
  });

  it("transport errors become a retryable banner", async () => {
    const client = new StubClient();
    client.submitError = new ApiError(503, "INTERNAL", "bad gateway");
    const model = new FormModel(fixture);
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(controller.state.phase).toBe("error");
    expect(controller.state.banner).toContain("bad gateway");
    expect(controller.state.staleDefinition).toBe(false);
  });

  it("stale definition conflict asks for a reload", async () => {
    const client = new StubClient();
    client.submitError = new ApiError(409, "CONFLICT", "definition republished");
    const model = new FormModel(fixture);
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit(null);
    expect(controller.state.phase).toBe("error");
    expect(controller.state.staleDefinition).toBe(true);
  });

  it("polling backs off and can be cancelled", async () => {
    const client = new StubClient();
    client.pollsUntilDone = 4;
    const waits: number[] = [];
    const job = await submitAndPoll(client, fixture.app_id, {}, null, {
      intervalMs: 100,
      backoff: 2,
      sleep: async (ms) => {
        waits.push(ms);
      },
    });
    expect(job.status).toBe("DONE");
    expect(waits).toEqual([100, 200, 400]);

    const cancelled = new StubClient();
    cancelled.pollsUntilDone = 1000;
    let calls = 0;
    await expect(
      submitAndPoll(cancelled, fixture.app_id, {}, null, {
        intervalMs: 1,
        sleep: async () => {},
        onCancel: () => ++calls > 3,
      }),
    ).rejects.toBeInstanceOf(PollCancelled);
  });

  it("collects only filled inputs", async () => {
    const client = new StubClient();
    const model = new FormModel(fixture);
    model.setValue("operatingcash-y1", "120.5");
    model.setValue("currency", "EUR");
    model.setValue("inventories-y2", "");
    const controller = new RunController(client, model, () => {}, fastPoll);
    await controller.submit("submit");
    expect(client.submissions[0].inputs).toEqual({
      "operatingcash-y1": "120.5",
      currency: "EUR",
    });
  });
});
