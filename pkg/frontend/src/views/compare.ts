/** Side-by-side comparison: shared frame scrubber, motion maps, score deltas. */

import { Client } from "../api.js";
import { clear, el, fmt } from "../dom.js";
import type { RunDetail, ScoreComponents } from "../types.js";

const DELTA_COMPONENTS: Array<[keyof ScoreComponents, string]> = [
  ["combined", "combined"],
  ["spatial_iou", "spatial IoU"],
  ["weighted_spatial_iou", "weighted spatial IoU"],
  ["spatiotemporal_iou", "spatiotemporal IoU"],
];

function bestScores(run: RunDetail): ScoreComponents | null {
  return run.scores_detail?.best ?? run.scores ?? null;
}

function deltaPanel(a: RunDetail, b: RunDetail): HTMLElement {
  const scoresA = bestScores(a);
  const scoresB = bestScores(b);
  if (!scoresA || !scoresB) {
    // one run unscored: deltas hidden, frames still comparable
    return el(
      "div",
      { class: "deltas-hidden" },
      "score deltas unavailable (both runs must be scored)",
    );
  }
  const rows = DELTA_COMPONENTS.map(([key, label]) => {
    const va = scoresA[key] as number;
    const vb = scoresB[key] as number;
    const delta = vb - va;
    const sign = delta > 0 ? "+" : "";
    return el(
      "tr",
      {},
      el("td", {}, label),
      el("td", {}, fmt(va)),
      el("td", {}, fmt(vb)),
      el(
        "td",
        { class: `delta ${delta > 0 ? "up" : delta < 0 ? "down" : "zero"}`,
          "data-delta": key },
        `${sign}${fmt(delta)}`,
      ),
    );
  });
  return el(
    "table",
    { class: "delta-table" },
    el(
      "thead",
      {},
      el("tr", {},
        el("th", {}, "component"),
        el("th", {}, a.run_id),
        el("th", {}, b.run_id),
        el("th", {}, "delta")),
    ),
    el("tbody", {}, ...rows),
  );
}

export async function renderCompareView(
  container: HTMLElement,
  client: Client,
  runIdA: string,
  runIdB: string,
): Promise<void> {
  clear(container);
  let a: RunDetail;
  let b: RunDetail;
  try {
    [a, b] = await Promise.all([client.getRun(runIdA), client.getRun(runIdB)]);
  } catch (error) {
    container.append(
      el("div", { class: "banner banner-error" }, `cannot load runs: ${error}`),
    );
    return;
  }

  // mismatched frame counts scrub over the shared prefix
  const maxIndex = Math.max(Math.min(a.frame_count, b.frame_count) - 1, 0);
  const imgA = el("img", { class: "frame frame-a", src: client.frameUrl(a.run_id, 0) });
  const imgB = el("img", { class: "frame frame-b", src: client.frameUrl(b.run_id, 0) });
  const slider = el("input", {
    type: "range",
    class: "scrubber shared-scrubber",
    min: 0,
    max: maxIndex,
    value: 0,
  }) as HTMLInputElement;
  const counter = el("span", { class: "frame-counter" }, `0 / ${maxIndex}`);
  slider.addEventListener("input", () => {
    const k = Number(slider.value);
    imgA.setAttribute("src", client.frameUrl(a.run_id, k));
    imgB.setAttribute("src", client.frameUrl(b.run_id, k));
    counter.textContent = `${slider.value} / ${maxIndex}`;
  });

  container.append(
    el("a", { href: "#/", class: "back-link" }, "← all runs"),
    el("h2", {}, `compare ${a.run_id} vs ${b.run_id}`),
    el(
      "div",
      { class: "compare-grid" },
      el("div", { class: "compare-col" },
        el("h3", {}, a.run_id),
        el("p", { class: "run-caption" }, a.caption),
        imgA,
        el("img", { class: "stmap", src: client.stmapUrl(a.run_id) })),
      el("div", { class: "compare-col" },
        el("h3", {}, b.run_id),
        el("p", { class: "run-caption" }, b.caption),
        imgB,
        el("img", { class: "stmap", src: client.stmapUrl(b.run_id) })),
    ),
    el("div", { class: "shared-timeline" }, slider, counter),
    el("h3", {}, "score deltas"),
    deltaPanel(a, b),
  );
}
