/** Hash routing: every view is reconstructable from run ids in the URL. */

import { Client } from "./api.js";
import { renderCompareView } from "./views/compare.js";
import { renderRunBrowser, type Navigator } from "./views/runBrowser.js";
import { renderRunDetail } from "./views/runDetail.js";

export type Route =
  | { view: "browser" }
  | { view: "run"; runId: string }
  | { view: "compare"; runA: string; runB: string };

export function parseHash(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter(Boolean);
  if (parts[0] === "runs" && parts[1]) {
    return { view: "run", runId: parts[1] };
  }
  if (parts[0] === "compare" && parts[1] && parts[2]) {
    return { view: "compare", runA: parts[1], runB: parts[2] };
  }
  return { view: "browser" };
}

export function makeNavigator(win: Window): Navigator {
  return {
    openRun: (runId) => {
      win.location.hash = `#/runs/${runId}`;
    },
    openCompare: (runA, runB) => {
      win.location.hash = `#/compare/${runA}/${runB}`;
    },
    openBrowser: () => {
      win.location.hash = "#/";
    },
  };
}

export async function renderRoute(
  container: HTMLElement,
  client: Client,
  route: Route,
  nav: Navigator,
  pollIntervalMs = 1000,
): Promise<void> {
  if (route.view === "run") {
    await renderRunDetail(container, client, route.runId, nav, pollIntervalMs);
  } else if (route.view === "compare") {
    await renderCompareView(container, client, route.runA, route.runB);
  } else {
    await renderRunBrowser(container, client, nav);
  }
}

export function startRouter(
  container: HTMLElement,
  client: Client,
  win: Window,
): void {
  const nav = makeNavigator(win);
  const rerender = () => {
    void renderRoute(container, client, parseHash(win.location.hash), nav);
  };
  win.addEventListener("hashchange", rerender);
  rerender();
}
