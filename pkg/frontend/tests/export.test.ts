// Export parity: the UI download passes through the exporter's exact bytes
// (the fixture is the frozen output of the CLI export command), and the PR
// button is disabled for drafts without a repository URL.

import { beforeEach, describe, expect, it } from "vitest";

import { renderEvaluator } from "../src/evaluator/index.js";
import { newSession, session } from "../src/evaluator/state.js";
import { setDownloadHook } from "../src/evaluator/steps.js";
import { fixture, fixtureJson, mockFetch, waitFor } from "./helpers.js";

const CLI_CFF = fixture("seqkit.cff");
const EVALUATION = fixtureJson("evaluate_mit.json");

function setUpStepThree(repositories: string[]): HTMLElement {
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.getElementById("app")!;
  session.set({
    ...newSession(),
    draft: {
      ...newSession().draft,
      name: "seqkit",
      type: "cmd",
      authors: ["Wei Shen"],
      licenses: ["MIT"],
      repositories,
    },
    lastEvaluation: EVALUATION,
    step: 3,
  });
  renderEvaluator(root);
  return root;
}

describe("export step", () => {
  beforeEach(() => {
    session.set(newSession());
  });

  it("CFF download is byte-identical to the CLI export output", async () => {
    mockFetch([
      {
        match: (path) => path.endsWith("/v1/export/cff"),
        respond: () => ({ text: CLI_CFF }),
      },
    ]);
    const captured: { blob: Blob; filename: string }[] = [];
    setDownloadHook((blob, filename) => {
      captured.push({ blob, filename });
    });

    const root = setUpStepThree(["https://github.com/shenwei356/seqkit"]);
    root.querySelector<HTMLButtonElement>('button[data-export="cff"]')!.click();
    await waitFor(() => captured.length === 1);

    expect(captured[0].filename).toBe("CITATION.cff");
    expect(await captured[0].blob.text()).toBe(CLI_CFF);
  });

  it("PR button is disabled when the draft has no repository", () => {
    const root = setUpStepThree([]);
    const button = root.querySelector<HTMLButtonElement>('button[data-export="pr"]')!;
    expect(button.disabled).toBe(true);
    expect(root.textContent).toContain("Pull requests need a repository URL");
  });

  it("PR result shows the dry-run badge", async () => {
    mockFetch([
      {
        match: (path) => path.endsWith("/v1/pr"),
        respond: (_path, body) => ({
          json: {
            submitted: false,
            dry_run: true,
            change: {
              repo: "github.com/shenwei356/seqkit",
              branch: "observatory/metadata-update-seqkit-cmd",
              title: "Add CITATION.cff for seqkit",
            },
          },
        }),
      },
    ]);
    const root = setUpStepThree(["https://github.com/shenwei356/seqkit"]);
    const button = root.querySelector<HTMLButtonElement>('button[data-export="pr"]')!;
    expect(button.disabled).toBe(false);
    button.click();
    await waitFor(() => root.querySelector(".pr-result") !== null);
    expect(root.querySelector(".badge.dry-run")!.textContent).toBe("DRY RUN");
    expect(root.querySelector(".pr-result")!.textContent).toContain(
      "observatory/metadata-update-seqkit-cmd"
    );
  });

  it("masmp download keeps the payload bytes unchanged", async () => {
    const jsonld = '{\n  "@context": "https://schema.org",\n  "name": "seqkit"\n}\n';
    mockFetch([
      {
        match: (path) => path.endsWith("/v1/export/masmp"),
        respond: () => ({ text: jsonld }),
      },
    ]);
    const captured: { blob: Blob; filename: string }[] = [];
    setDownloadHook((blob, filename) => captured.push({ blob, filename }));

    const root = setUpStepThree(["https://github.com/shenwei356/seqkit"]);
    root.querySelector<HTMLButtonElement>('button[data-export="masmp"]')!.click();
    await waitFor(() => captured.length === 1);
    expect(captured[0].filename).toBe("masmp.jsonld");
    const text = await captured[0].blob.text();
    expect(text).toBe(jsonld);
    expect(JSON.parse(text)["@context"]).toBe("https://schema.org");
  });
});
