// Dashboards are pure views over /v1/charts/*: every rendered value equals
// the payload value, and each chart has a standalone embed route.

import { describe, expect, it } from "vitest";

import { route } from "../src/router.js";
import { mockFetch, waitFor } from "./helpers.js";

const SCOREBOARD = {
  collection: "all",
  chart_id: "scoreboard",
  snapshot_at: "2025-01-01T00:00:00Z",
  data: {
    indicators: { A1: 0.14, F1: 0.975, R2: 0.3170731707317073 },
    principles: { A: 0.22, F: 0.81, I: 0.4, R: 0.55 },
    overall: 0.495,
  },
};

const COMPLETENESS = {
  collection: "all",
  chart_id: "completeness",
  snapshot_at: "2025-01-01T00:00:00Z",
  data: { description: 0.9024390243902439, publication: 0.14634146341463414 },
};

const TYPES = {
  collection: "all",
  chart_id: "types",
  snapshot_at: "2025-01-01T00:00:00Z",
  data: { cmd: 28, web: 7, lib: 3 },
};

const SOURCES = {
  collection: "all",
  chart_id: "sources",
  snapshot_at: "2025-01-01T00:00:00Z",
  data: {
    exact: { biotools: 6, "bioconda+biotools": 3 },
    per_source: { biotools: 9, bioconda: 3 },
  },
};

const LICENSES = {
  collection: "all",
  chart_id: "licenses",
  snapshot_at: "2025-01-01T00:00:00Z",
  data: { groups: { GPL: 2, MIT: 1, none: 5 }, families: { copyleft: 2, permissive: 1, none: 5 } },
};

const CHARTS: Record<string, unknown> = {
  scoreboard: SCOREBOARD,
  completeness: COMPLETENESS,
  types: TYPES,
  sources: SOURCES,
  licenses: LICENSES,
};

function mockChartApi() {
  return mockFetch([
    {
      match: (path) => path.endsWith("/v1/collections"),
      respond: () => ({ json: { collections: ["all", "proteomics"] } }),
    },
    {
      match: (path) => path.includes("/v1/charts/"),
      respond: (path) => {
        const chartId = path.split("/").pop()!;
        return { json: CHARTS[chartId] };
      },
    },
  ]);
}

function cellValues(root: HTMLElement, title: string): Record<string, string> {
  const section = Array.from(root.querySelectorAll("section.chart")).find(
    (el) => el.querySelector("h3")?.textContent === title
  );
  expect(section, `chart section '${title}'`).toBeTruthy();
  const values: Record<string, string> = {};
  for (const cell of section!.querySelectorAll<HTMLElement>("td[data-item]")) {
    values[cell.dataset.item!] = cell.textContent ?? "";
  }
  return values;
}

describe("dashboards", () => {
  it("scoreboard renders exactly the served indicator and principle values", async () => {
    mockChartApi();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    window.location.hash = "#/scoreboard";
    route(root);
    await waitFor(() => root.querySelectorAll("section.chart").length >= 2);

    const indicators = cellValues(root, "Indicators");
    for (const [id, value] of Object.entries(SCOREBOARD.data.indicators)) {
      expect(indicators[id]).toBe(String(value));
    }
    const principles = cellValues(root, "Principles");
    for (const [id, value] of Object.entries(SCOREBOARD.data.principles)) {
      expect(principles[id]).toBe(String(value));
    }
  });

  it("data page renders completeness fractions verbatim", async () => {
    mockChartApi();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    window.location.hash = "#/data";
    route(root);
    await waitFor(() => root.querySelectorAll(".chart-group").length >= 3);

    const completeness = cellValues(root, "Metadata completeness");
    expect(completeness["description"]).toBe("0.9024390243902439");
    expect(completeness["publication"]).toBe("0.14634146341463414");
    const types = cellValues(root, "Software types");
    expect(types["cmd"]).toBe("28");
  });

  it("trends page renders license groups from the payload", async () => {
    mockChartApi();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    window.location.hash = "#/trends";
    route(root);
    await waitFor(() => root.querySelectorAll(".chart-group").length >= 2);
    const groups = cellValues(root, "License groups");
    expect(groups).toEqual({ GPL: "2", MIT: "1", none: "5" });
  });

  it("every chart has an embed link and the embed route renders standalone", async () => {
    mockChartApi();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    window.location.hash = "#/scoreboard";
    route(root);
    await waitFor(() => root.querySelector(".embed-link") !== null);
    const link = root.querySelector<HTMLAnchorElement>(".embed-link")!;
    expect(link.getAttribute("href")).toBe("#/embed/all/scoreboard");

    window.location.hash = "#/embed/all/scoreboard";
    route(root);
    await waitFor(() => root.querySelector(".chart-group") !== null);
    expect(root.className).toBe("embed");
    expect(root.querySelectorAll(".chart-group").length).toBe(1);
    expect(root.querySelector("h2")).toBeNull(); // no page chrome in embeds
    const indicators = cellValues(root, "Indicators");
    expect(indicators["A1"]).toBe("0.14");
  });

  it("collection filter drives the chart requests", async () => {
    const calls = mockChartApi();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    window.location.hash = "#/scoreboard?collection=proteomics";
    route(root);
    await waitFor(() =>
      calls.some(([path]) => path.includes("/v1/charts/proteomics/scoreboard"))
    );
  });
});
