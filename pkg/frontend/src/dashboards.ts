// The three dashboard pages plus the standalone chart embed route. All pages
// are pure views over /v1/charts/* with a shared collection filter.

import { getChart, getCollections } from "./api.js";
import { renderChart } from "./charts.js";
import type { ChartId } from "./types.js";

const PAGE_CHARTS: Record<string, ChartId[]> = {
  trends: ["licenses", "types"],
  scoreboard: ["scoreboard"],
  data: ["completeness", "sources", "types"],
};

export async function renderDashboard(
  root: HTMLElement,
  page: "trends" | "scoreboard" | "data",
  collection: string
): Promise<void> {
  root.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = page[0].toUpperCase() + page.slice(1);
  root.appendChild(heading);

  root.appendChild(await collectionPicker(page, collection));

  const charts = document.createElement("div");
  charts.className = "charts";
  root.appendChild(charts);

  for (const chartId of PAGE_CHARTS[page]) {
    try {
      const payload = await getChart(collection, chartId);
      renderChart(charts, payload);
      charts.appendChild(embedLink(collection, chartId));
    } catch (error) {
      charts.appendChild(errorNote(`${chartId}: ${(error as Error).message}`));
    }
  }
}

async function collectionPicker(page: string, selected: string): Promise<HTMLElement> {
  const label = document.createElement("label");
  label.className = "collection-picker";
  label.textContent = "Collection ";
  const select = document.createElement("select");
  let names = ["all"];
  try {
    names = (await getCollections()).collections;
  } catch {
    // no snapshot yet; offer "all" only
  }
  if (!names.includes("all")) names.unshift("all");
  for (const name of names) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    option.selected = name === selected;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    window.location.hash = `#/${page}?collection=${encodeURIComponent(select.value)}`;
  });
  label.appendChild(select);
  return label;
}

function embedLink(collection: string, chartId: ChartId): HTMLElement {
  const link = document.createElement("a");
  link.className = "embed-link";
  link.href = `#/embed/${encodeURIComponent(collection)}/${chartId}`;
  link.textContent = "standalone view";
  return link;
}

function errorNote(message: string): HTMLElement {
  const note = document.createElement("p");
  note.className = "error";
  note.textContent = message;
  return note;
}

/** Renders one chart and nothing else: the iframe-embeddable route. */
export async function renderEmbed(
  root: HTMLElement,
  collection: string,
  chartId: ChartId
): Promise<void> {
  root.innerHTML = "";
  root.className = "embed";
  try {
    const payload = await getChart(collection, chartId);
    renderChart(root, payload);
  } catch (error) {
    root.appendChild(errorNote((error as Error).message));
  }
}
