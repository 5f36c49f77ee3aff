// Evaluator loop: editing the draft triggers re-evaluation, the score panel
// shows exactly the API payload, and adding a license raises the R bar.
// The evaluation payloads are frozen responses of the real backend.

import { beforeEach, describe, expect, it } from "vitest";

import { renderEvaluator } from "../src/evaluator/index.js";
import { newSession, session } from "../src/evaluator/state.js";
import { fixtureJson, mockFetch, waitFor } from "./helpers.js";

const NO_LICENSE = fixtureJson("evaluate_nolicense.json");
const WITH_MIT = fixtureJson("evaluate_mit.json");

function mockEvaluate(): Array<[string, any]> {
  return mockFetch([
    {
      match: (path) => path.endsWith("/v1/evaluate"),
      respond: (_path, body) => ({
        json: body.licenses?.includes("MIT") ? WITH_MIT : NO_LICENSE,
      }),
    },
  ]);
}

function setUpStepTwo(): HTMLElement {
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.getElementById("app")!;
  session.set({
    ...newSession(),
    draft: {
      ...newSession().draft,
      name: "toolx",
      type: "cmd",
      description: "Example tool for testing.",
      authors: ["Jane Doe"],
      repositories: ["https://github.com/j/toolx"],
    },
    step: 2,
  });
  renderEvaluator(root);
  return root;
}

function principleValue(root: HTMLElement, principle: string): number {
  const row = root.querySelector<HTMLElement>(
    `.principle-row[data-principle="${principle}"]`
  );
  expect(row, `principle row ${principle}`).toBeTruthy();
  return Number(row!.dataset.value);
}

describe("evaluator loop", () => {
  beforeEach(() => {
    session.set(newSession());
  });

  it("renders exactly the indicator values of the evaluate payload", async () => {
    mockEvaluate();
    const root = setUpStepTwo();
    await waitFor(() => root.querySelector(".indicator") !== null);

    const indicators = NO_LICENSE.profile.indicators as Record<string, { value: number }>;
    for (const [id, score] of Object.entries(indicators)) {
      const item = root.querySelector<HTMLElement>(`.indicator[data-indicator="${id}"]`);
      expect(item, id).toBeTruthy();
      expect(item!.dataset.value).toBe(String(score.value));
      expect(item!.querySelector(".indicator-value")!.textContent).toBe(
        String(score.value)
      );
    }
    for (const [principle, value] of Object.entries(
      NO_LICENSE.profile.principles as Record<string, number>
    )) {
      expect(principleValue(root, principle)).toBe(value);
    }
    const overall = root.querySelector<HTMLElement>(".overall")!;
    expect(overall.dataset.value).toBe(String(NO_LICENSE.profile.overall));
  });

  it("shows every indicator's weight next to it", async () => {
    mockEvaluate();
    const root = setUpStepTwo();
    await waitFor(() => root.querySelector(".indicator") !== null);
    for (const [id, info] of Object.entries(
      NO_LICENSE.weights as Record<string, { weight: number }>
    )) {
      const badge = root.querySelector<HTMLElement>(
        `.indicator[data-indicator="${id}"] .indicator-weight`
      );
      expect(badge, id).toBeTruthy();
      expect(badge!.dataset.weight).toBe(String(info.weight));
    }
  });

  it("adding license MIT re-evaluates and strictly raises the R bar", async () => {
    const calls = mockEvaluate();
    const root = setUpStepTwo();
    await waitFor(() => root.querySelector(".indicator") !== null);

    const before = principleValue(root, "R");
    expect(before).toBe(NO_LICENSE.profile.principles.R);
    const evaluateCallsBefore = calls.filter(([p]) => p.endsWith("/v1/evaluate")).length;

    const licenses = root.querySelector<HTMLTextAreaElement>('textarea[name="licenses"]')!;
    licenses.value = "MIT";
    licenses.dispatchEvent(new Event("input"));

    await waitFor(
      () =>
        calls.filter(([p]) => p.endsWith("/v1/evaluate")).length > evaluateCallsBefore
    );
    await waitFor(() => principleValue(root, "R") !== before);

    const after = principleValue(root, "R");
    expect(after).toBe(WITH_MIT.profile.principles.R);
    expect(after).toBeGreaterThan(before);
    const r2 = root.querySelector<HTMLElement>('.indicator[data-indicator="R2"]')!;
    expect(r2.dataset.value).toBe(String(WITH_MIT.profile.indicators.R2.value));
  });

  it("guidance names the missing license before it is added", async () => {
    mockEvaluate();
    const root = setUpStepTwo();
    await waitFor(() => root.querySelector(".indicator") !== null);
    const r2 = root.querySelector<HTMLElement>('.indicator[data-indicator="R2"]')!;
    expect(r2.textContent).toContain("add a license (SPDX identifier preferred)");
  });

  it("clearing the name blocks evaluation instead of calling the API", async () => {
    const calls = mockEvaluate();
    const root = setUpStepTwo();
    await waitFor(() => root.querySelector(".indicator") !== null);
    const evaluateCalls = () => calls.filter(([p]) => p.endsWith("/v1/evaluate")).length;
    const before = evaluateCalls();

    const name = root.querySelector<HTMLInputElement>('input[name="name"]')!;
    name.value = "";
    name.dispatchEvent(new Event("input"));

    await new Promise((resolve) => setTimeout(resolve, 350));
    expect(evaluateCalls()).toBe(before);
    expect(root.querySelector(".error")!.textContent).toContain("name and type");
  });

  it("step 3 is unreachable until an evaluation succeeded", async () => {
    mockEvaluate();
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app")!;
    session.set({ ...newSession(), step: 1 });
    renderEvaluator(root);
    const step3 = root.querySelector<HTMLButtonElement>('button[data-step="3"]')!;
    expect(step3.disabled).toBe(true);
  });
});
