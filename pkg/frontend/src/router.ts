// Hash router. Routes: #/trends, #/scoreboard, #/data (dashboards with a
// ?collection= filter), #/evaluator (wizard, session in the query), and
// #/embed/<collection>/<chart> (standalone chart for iframes).

import { renderDashboard, renderEmbed } from "./dashboards.js";
import { renderEvaluator } from "./evaluator/index.js";
import { restoreSession } from "./evaluator/state.js";
import type { ChartId } from "./types.js";

const DASHBOARDS = new Set(["trends", "scoreboard", "data"]);

export function route(root: HTMLElement): void {
  const hash = window.location.hash || "#/trends";
  const [path, query = ""] = hash.replace(/^#\//, "").split("?", 2);
  const segments = path.split("/").filter(Boolean);
  const page = segments[0] ?? "trends";

  if (page === "embed" && segments.length === 3) {
    void renderEmbed(root, decodeURIComponent(segments[1]), segments[2] as ChartId);
    return;
  }
  if (page === "evaluator") {
    restoreSession(query);
    renderEvaluator(root);
    return;
  }
  if (DASHBOARDS.has(page)) {
    const params = new URLSearchParams(query);
    const collection = params.get("collection") ?? "all";
    void renderDashboard(root, page as "trends" | "scoreboard" | "data", collection);
    return;
  }
  root.innerHTML = "";
  const missing = document.createElement("p");
  missing.className = "error";
  missing.textContent = `no such page: ${page}`;
  root.appendChild(missing);
}

export function startRouter(root: HTMLElement, nav: HTMLElement | null): void {
  if (nav) renderNav(nav);
  window.addEventListener("hashchange", () => route(root));
  route(root);
}

function renderNav(nav: HTMLElement): void {
  nav.innerHTML = "";
  for (const [target, label] of [
    ["#/trends", "Trends"],
    ["#/scoreboard", "Scoreboard"],
    ["#/data", "Data"],
    ["#/evaluator", "Evaluator"],
  ]) {
    const link = document.createElement("a");
    link.href = target;
    link.textContent = label;
    nav.appendChild(link);
  }
}
