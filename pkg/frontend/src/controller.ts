// Submit/poll orchestration, kept free of DOM concerns so it is testable:
// the controller mutates a view state and invokes a repaint callback.

import { ApiClient, ApiError, PollOptions, pollUntilTerminal } from "./api.js";
import { FormModel } from "./form.js";
import { JobResponse, RunResultJson } from "./types.js";

export type Phase = "idle" | "running" | "done" | "failed" | "error";

export interface ViewState {
  phase: Phase;
  jobId: string | null;
  result: RunResultJson | null;
  failure: { code: string; message: string } | null;
  banner: string | null; // transport errors and stale-version notices
  staleDefinition: boolean;
}

export class RunController {
  readonly state: ViewState = {
    phase: "idle",
    jobId: null,
    result: null,
    failure: null,
    banner: null,
    staleDefinition: false,
  };
  private generation = 0;

  constructor(
    private readonly client: ApiClient,
    readonly model: FormModel,
    private readonly repaint: () => void = () => {},
    private readonly poll: PollOptions = {},
  ) {}

  /** One in-flight run per form; navigation bumps the generation to cancel. */
  cancelPolling(): void {
    this.generation += 1;
  }

  async submit(pressed: string | null = null): Promise<void> {
    if (this.state.phase === "running") return;
    if (!this.model.validate()) {
      this.repaint(); // inline field errors, no network call
      return;
    }
    const generation = ++this.generation;
    this.state.phase = "running";
    this.state.banner = null;
    this.state.result = null;
    this.state.failure = null;
    this.repaint();
    let job: JobResponse;
    try {
      const jobId = await this.client.submitRun(
        this.model.app.app_id, this.model.collectInputs(), pressed);
      this.state.jobId = jobId;
      this.repaint();
      job = await pollUntilTerminal(this.client, jobId, {
        ...this.poll,
        onCancel: () => this.generation !== generation,
      });
    } catch (error) {
      if (this.generation !== generation) return; // navigated away
      this.state.phase = "error";
      if (error instanceof ApiError && error.code === "CONFLICT") {
        // the published definition moved under us: caller should refetch
        this.state.staleDefinition = true;
        this.state.banner = "This app was republished; reload to get the current version.";
      } else {
        this.state.banner = error instanceof Error ? error.message : String(error);
      }
      this.repaint();
      return;
    }
    if (this.generation !== generation) return;
    if (job.status === "FAILED") {
      this.state.phase = "failed";
      this.state.failure = job.failure;
      this.repaint();
      return;
    }
    this.state.result = job.result;
    this.state.phase = "done";
    if (job.result?.outcome === "VALIDATION_FAILED") {
      this.model.applyServerFailures(job.result.validation_failures);
    }
    this.repaint();
  }
}
