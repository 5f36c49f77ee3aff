// Chart rendering. Bars are purely presentational; every number shown comes
// verbatim from the chart payload, and each chart carries a <table> fallback
// whose cells hold the exact payload values (also what the tests read).

import type { ChartPayload } from "./types.js";

export interface Series {
  title: string;
  entries: [string, number][];
}

export function chartSeries(payload: ChartPayload): Series[] {
  const data = payload.data as Record<string, unknown>;
  switch (payload.chart_id) {
    case "completeness":
      return [{ title: "Metadata completeness", entries: numberEntries(data) }];
    case "types":
      return [{ title: "Software types", entries: numberEntries(data) }];
    case "scoreboard":
      return [
        { title: "Indicators", entries: numberEntries(data.indicators) },
        { title: "Principles", entries: numberEntries(data.principles) },
      ];
    case "licenses":
      return [
        { title: "License groups", entries: numberEntries(data.groups) },
        { title: "License families", entries: numberEntries(data.families) },
      ];
    case "sources":
      return [
        { title: "Source combinations", entries: numberEntries(data.exact) },
        { title: "Per-source totals", entries: numberEntries(data.per_source) },
      ];
  }
}

function numberEntries(value: unknown): [string, number][] {
  if (value === null || typeof value !== "object") return [];
  return Object.entries(value as Record<string, number>).filter(
    ([, v]) => typeof v === "number"
  );
}

export function renderSeries(container: HTMLElement, series: Series): void {
  const section = document.createElement("section");
  section.className = "chart";

  const heading = document.createElement("h3");
  heading.textContent = series.title;
  section.appendChild(heading);

  const max = Math.max(1e-9, ...series.entries.map(([, v]) => v));
  const bars = document.createElement("div");
  bars.className = "bars";
  bars.setAttribute("aria-hidden", "true");
  for (const [label, value] of series.entries) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const name = document.createElement("span");
    name.className = "bar-label";
    name.textContent = label;
    const track = document.createElement("span");
    track.className = "bar-track";
    const fill = document.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${(value / max) * 100}%`;
    track.appendChild(fill);
    row.appendChild(name);
    row.appendChild(track);
    bars.appendChild(row);
  }
  section.appendChild(bars);

  // exact-value fallback table
  const table = document.createElement("table");
  table.className = "chart-table";
  const head = table.createTHead().insertRow();
  for (const text of ["item", "value"]) {
    const cell = document.createElement("th");
    cell.textContent = text;
    head.appendChild(cell);
  }
  const body = table.createTBody();
  for (const [label, value] of series.entries) {
    const row = body.insertRow();
    row.insertCell().textContent = label;
    const valueCell = row.insertCell();
    valueCell.textContent = String(value);
    valueCell.dataset.item = label;
  }
  section.appendChild(table);
  container.appendChild(section);
}

export function renderChart(container: HTMLElement, payload: ChartPayload): void {
  const wrapper = document.createElement("div");
  wrapper.className = "chart-group";
  wrapper.dataset.chartId = payload.chart_id;
  wrapper.dataset.collection = payload.collection;
  for (const series of chartSeries(payload)) {
    renderSeries(wrapper, series);
  }
  container.appendChild(wrapper);
}
