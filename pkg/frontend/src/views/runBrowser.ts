/** Run list with lineage tree; selecting a run opens its detail view. */

import { Client } from "../api.js";
import { badge, clear, el, fmt } from "../dom.js";
import type { RunSummary } from "../types.js";

export interface Navigator {
  openRun(runId: string): void;
  openCompare(runA: string, runB: string): void;
  openBrowser(): void;
}

function runNode(
  run: RunSummary,
  byId: Map<string, RunSummary>,
  nav: Navigator,
): HTMLElement {
  const label = el(
    "div",
    { class: "run-row" },
    badge(run.status),
    el(
      "a",
      { class: "run-link", href: `#/runs/${run.run_id}`, "data-run": run.run_id },
      run.run_id,
    ),
    el("span", { class: "run-caption" }, run.caption || "(no caption)"),
    run.scores
      ? el("span", { class: "run-score" }, `score ${fmt(run.scores.combined, 1)}`)
      : null,
    run.intervention
      ? el("span", { class: "run-intervention" }, run.intervention.kind)
      : null,
  );
  const item = el("li", { class: "run-node" }, label);
  if (run.status === "failed" && run.error) {
    item.append(
      el("pre", { class: "error-excerpt" }, run.error.slice(0, 300)),
    );
  }
  const children = run.children
    .map((id) => byId.get(id))
    .filter((child): child is RunSummary => Boolean(child));
  if (children.length) {
    item.append(
      el(
        "ul",
        { class: "run-children" },
        ...children.map((child) => runNode(child, byId, nav)),
      ),
    );
  }
  return item;
}

export async function renderRunBrowser(
  container: HTMLElement,
  client: Client,
  nav: Navigator,
): Promise<void> {
  clear(container);
  let runs: RunSummary[];
  try {
    runs = await client.listRuns();
  } catch (error) {
    container.append(
      el(
        "div",
        { class: "banner banner-error" },
        `service unreachable: ${error instanceof Error ? error.message : error}`,
      ),
    );
    return;
  }
  if (!runs.length) {
    container.append(
      el(
        "div",
        { class: "empty-state" },
        "No runs yet. Generate one with the CLI, then refresh.",
      ),
    );
    return;
  }
  const byId = new Map(runs.map((run) => [run.run_id, run]));
  const roots = runs.filter(
    (run) => !run.parent_run || !byId.has(run.parent_run),
  );
  container.append(
    el("h2", {}, `Runs (${runs.length})`),
    el(
      "ul",
      { class: "run-tree" },
      ...roots.map((run) => runNode(run, byId, nav)),
    ),
  );
}
