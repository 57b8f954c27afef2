import type { Client } from "../src/api.js";
import type { ParameterRow, RunDetail, ScoreComponents } from "../src/types.js";

export function scores(combined: number): ScoreComponents {
  const component = combined / 100;
  return {
    spatial_iou: component,
    weighted_spatial_iou: component,
    spatiotemporal_iou: component,
    combined,
    n_samples: 1,
    category: "",
    sample_index: 0,
    resampled: false,
  };
}

export function runDetail(overrides: Partial<RunDetail> = {}): RunDetail {
  return {
    run_id: "run-a",
    status: "complete",
    caption: "a ball drops onto the floor",
    created_at: "2026-01-01T00:00:00",
    parent_run: null,
    intervention: null,
    frame_count: 12,
    scores: null,
    error: null,
    children: [],
    samples: [{ sample_index: 0, status: "ok" }],
    selected_sample: 0,
    scores_detail: null,
    ...overrides,
  };
}

export interface MockClientState {
  runs: RunDetail[];
  parameters: ParameterRow[];
  program: string;
  submitted: Array<{ runId: string; kind: string; payload: unknown }>;
  submitResult?: () => Promise<string>;
}

/** Structural stand-in for Client backed by in-memory fixtures. */
export function mockClient(state: MockClientState): Client {
  const byId = () => new Map(state.runs.map((run) => [run.run_id, run]));
  const client = {
    baseUrl: "http://mock",
    listRuns: async () => state.runs,
    getRun: async (id: string) => {
      const run = byId().get(id);
      if (!run) throw new Error(`no run ${id}`);
      return run;
    },
    getProgram: async () => state.program,
    getParameters: async () => state.parameters,
    getScores: async (id: string) => byId().get(id)?.scores_detail ?? null,
    frameUrl: (id: string, k: number) => `http://mock/runs/${id}/frames/${k}`,
    stmapUrl: (id: string) => `http://mock/runs/${id}/stmap`,
    submitIntervention: async (runId: string, kind: string, payload: unknown) => {
      state.submitted.push({ runId, kind, payload });
      if (state.submitResult) return state.submitResult();
      return "child-1";
    },
    pollUntilDone: async (id: string) => {
      const run = byId().get(id);
      if (!run) throw new Error(`no run ${id}`);
      return run;
    },
  };
  return client as unknown as Client;
}

export function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  return root;
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}
