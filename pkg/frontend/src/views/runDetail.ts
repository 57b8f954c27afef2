/** Run detail: frame scrubber, motion map, scores, and the intervention panel. */

import { ApiError, Client } from "../api.js";
import { badge, clear, el, fmt } from "../dom.js";
import type { Navigator } from "./runBrowser.js";
import type { InterventionKind, ParameterRow, RunDetail } from "../types.js";

function frameScrubber(client: Client, run: RunDetail): HTMLElement {
  const img = el("img", {
    class: "frame",
    src: client.frameUrl(run.run_id, 0),
    alt: `frame 0 of ${run.run_id}`,
  });
  const maxIndex = Math.max(run.frame_count - 1, 0);
  const slider = el("input", {
    type: "range",
    class: "scrubber",
    min: 0,
    max: maxIndex,
    value: 0,
  }) as HTMLInputElement;
  const counter = el("span", { class: "frame-counter" }, `0 / ${maxIndex}`);
  slider.addEventListener("input", () => {
    img.setAttribute("src", client.frameUrl(run.run_id, Number(slider.value)));
    counter.textContent = `${slider.value} / ${maxIndex}`;
  });
  return el("div", { class: "scrubber-block" }, img, el("div", {}, slider, counter));
}

function scoresBlock(run: RunDetail): HTMLElement | null {
  const best = run.scores_detail?.best ?? run.scores;
  if (!best) return null;
  return el(
    "dl",
    { class: "scores" },
    el("dt", {}, "combined"),
    el("dd", {}, fmt(best.combined, 2)),
    el("dt", {}, "spatial IoU"),
    el("dd", {}, fmt(best.spatial_iou)),
    el("dt", {}, "weighted spatial IoU"),
    el("dd", {}, fmt(best.weighted_spatial_iou)),
    el("dt", {}, "spatiotemporal IoU"),
    el("dd", {}, fmt(best.spatiotemporal_iou)),
  );
}

interface PanelDeps {
  client: Client;
  run: RunDetail;
  nav: Navigator;
  pollIntervalMs: number;
}

function parseValue(raw: string): unknown {
  try {
    return JSON.parse(raw);
  } catch {
    return raw;
  }
}

async function submitAndFollow(
  deps: PanelDeps,
  kind: InterventionKind,
  payload: unknown,
  errorBox: HTMLElement,
  button: HTMLButtonElement,
): Promise<void> {
  errorBox.textContent = "";
  button.disabled = true;
  button.textContent = "re-simulating…";
  try {
    const childId = await deps.client.submitIntervention(
      deps.run.run_id,
      kind,
      payload,
      crypto.randomUUID(),
    );
    const child = await deps.client.pollUntilDone(childId, {
      intervalMs: deps.pollIntervalMs,
    });
    if (child.status === "failed") {
      errorBox.textContent = `child run failed: ${child.error ?? "unknown error"}`;
      return;
    }
    deps.nav.openRun(childId);
  } catch (error) {
    // validation errors surface inline; no child run was created
    errorBox.textContent =
      error instanceof ApiError ? error.detail : String(error);
  } finally {
    button.disabled = false;
    button.textContent = "re-simulate";
  }
}

function parametersTab(deps: PanelDeps, parameters: ParameterRow[]): HTMLElement {
  const inputs = new Map<string, HTMLInputElement>();
  const rows = parameters.map((row) => {
    const input = el("input", {
      type: "text",
      class: "param-input",
      value: JSON.stringify(row.value),
      "data-param": row.name,
    }) as HTMLInputElement;
    inputs.set(row.name, input);
    return el(
      "tr",
      {},
      el("td", { class: "param-name" }, row.name),
      el("td", { class: "param-type" }, row.type),
      el("td", {}, input),
    );
  });
  const errorBox = el("div", { class: "inline-error" });
  const button = el("button", { class: "submit-patch" }, "re-simulate") as HTMLButtonElement;
  button.addEventListener("click", () => {
    const patch: Record<string, unknown> = {};
    for (const [name, input] of inputs) {
      const original = parameters.find((p) => p.name === name);
      const parsed = parseValue(input.value);
      if (JSON.stringify(parsed) !== JSON.stringify(original?.value)) {
        patch[name] = parsed;
      }
    }
    if (!Object.keys(patch).length) {
      errorBox.textContent = "no parameter changed";
      return;
    }
    void submitAndFollow(deps, "parameter_patch", patch, errorBox, button);
  });
  return el(
    "div",
    { class: "tab-panel", "data-panel": "parameters" },
    parameters.length
      ? el(
          "table",
          { class: "param-table" },
          el(
            "thead",
            {},
            el("tr", {}, el("th", {}, "name"), el("th", {}, "type"), el("th", {}, "value")),
          ),
          el("tbody", {}, ...rows),
        )
      : el("div", { class: "empty-state" }, "program declares no PARAMS block"),
    button,
    errorBox,
  );
}

function captionTab(deps: PanelDeps): HTMLElement {
  const area = el("textarea", { class: "caption-input", rows: 3 }) as HTMLTextAreaElement;
  area.value = deps.run.caption;
  const errorBox = el("div", { class: "inline-error" });
  const button = el("button", { class: "submit-caption" }, "re-simulate") as HTMLButtonElement;
  button.addEventListener("click", () => {
    if (!area.value.trim()) {
      errorBox.textContent = "caption must not be empty";
      return;
    }
    void submitAndFollow(deps, "caption_edit", area.value, errorBox, button);
  });
  return el(
    "div",
    { class: "tab-panel", "data-panel": "caption" },
    area,
    button,
    errorBox,
  );
}

function sourceTab(deps: PanelDeps, source: string): HTMLElement {
  const area = el("textarea", { class: "source-input", rows: 24, spellcheck: false }) as HTMLTextAreaElement;
  area.value = source;
  const errorBox = el("div", { class: "inline-error" });
  const button = el("button", { class: "submit-source" }, "re-simulate") as HTMLButtonElement;
  button.addEventListener("click", () => {
    void submitAndFollow(deps, "source_edit", area.value, errorBox, button);
  });
  return el(
    "div",
    { class: "tab-panel", "data-panel": "source" },
    area,
    button,
    errorBox,
  );
}

function tabbedPanel(panels: Record<string, HTMLElement>): HTMLElement {
  const names = Object.keys(panels);
  const buttons = new Map<string, HTMLButtonElement>();
  const body = el("div", { class: "tab-body" });

  const select = (name: string) => {
    for (const [n, b] of buttons) b.classList.toggle("active", n === name);
    body.replaceChildren(panels[name]!);
  };
  const bar = el(
    "div",
    { class: "tab-bar" },
    ...names.map((name) => {
      const button = el(
        "button",
        { class: "tab-button", "data-tab": name },
        name,
      ) as HTMLButtonElement;
      button.addEventListener("click", () => select(name));
      buttons.set(name, button);
      return button;
    }),
  );
  select(names[0]!);
  return el("div", { class: "intervention-panel" }, bar, body);
}

export async function renderRunDetail(
  container: HTMLElement,
  client: Client,
  runId: string,
  nav: Navigator,
  pollIntervalMs = 1000,
): Promise<void> {
  clear(container);
  let run: RunDetail;
  try {
    run = await client.getRun(runId);
  } catch (error) {
    container.append(
      el("div", { class: "banner banner-error" }, `cannot load run: ${error}`),
    );
    return;
  }

  const header = el(
    "div",
    { class: "run-header" },
    el("a", { href: "#/", class: "back-link" }, "← all runs"),
    el("h2", {}, run.run_id),
    badge(run.status),
    el("p", { class: "run-caption" }, run.caption),
  );
  if (run.parent_run) {
    header.append(
      el("p", {}, "parent: ",
        el("a", { href: `#/runs/${run.parent_run}` }, run.parent_run),
        " · ",
        el(
          "a",
          { href: `#/compare/${run.parent_run}/${run.run_id}`, class: "compare-link" },
          "compare with parent",
        ),
      ),
    );
  }
  for (const child of run.children) {
    header.append(
      el("p", {}, "child: ", el("a", { href: `#/runs/${child}` }, child)),
    );
  }
  container.append(header);

  if (run.status === "failed") {
    container.append(
      el("pre", { class: "error-excerpt" }, run.error ?? "run failed"),
    );
    return;
  }

  container.append(frameScrubber(client, run));
  container.append(
    el(
      "div",
      { class: "stmap-block" },
      el("h3", {}, "motion map"),
      el("img", { class: "stmap", src: client.stmapUrl(run.run_id), alt: "motion map" }),
    ),
  );
  const scores = scoresBlock(run);
  if (scores) container.append(el("h3", {}, "scores"), scores);

  let source = "";
  let parameters: ParameterRow[] = [];
  try {
    [source, parameters] = await Promise.all([
      client.getProgram(run.run_id),
      client.getParameters(run.run_id),
    ]);
  } catch {
    // runs without a final program (all samples failed) have no panel
    return;
  }
  const deps: PanelDeps = { client, run, nav, pollIntervalMs };
  container.append(
    el("h3", {}, "intervene"),
    tabbedPanel({
      parameters: parametersTab(deps, parameters),
      caption: captionTab(deps),
      source: sourceTab(deps, source),
    }),
  );
  container.append(
    el("details", { class: "program-block" },
      el("summary", {}, "program source"),
      el("pre", { class: "program-source" }, source)),
  );
}
