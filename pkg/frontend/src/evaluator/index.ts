// Wizard shell: (1) metadata review and completion, (2) assessment,
// (3) export. Later steps unlock only when reachable.

import { session, stepReachable } from "./state.js";
import { renderStep1, renderStep2, renderStep3 } from "./steps.js";

const STEPS: { id: 1 | 2 | 3; title: string; render: (root: HTMLElement) => void }[] = [
  { id: 1, title: "Load metadata", render: renderStep1 },
  { id: 2, title: "Review & assess", render: renderStep2 },
  { id: 3, title: "Export", render: renderStep3 },
];

let unsubscribe: (() => void) | null = null;

export function renderEvaluator(root: HTMLElement): void {
  if (unsubscribe) unsubscribe();

  const container = document.createElement("div");
  container.className = "wizard";
  const nav = document.createElement("nav");
  nav.className = "wizard-nav";
  const content = document.createElement("section");
  content.className = "wizard-content";

  root.innerHTML = "";
  root.appendChild(container);
  container.appendChild(nav);
  container.appendChild(content);

  function sync(): void {
    const state = session.get();
    nav.innerHTML = "";
    for (const step of STEPS) {
      const button = document.createElement("button");
      button.textContent = `${step.id}. ${step.title}`;
      button.dataset.step = String(step.id);
      button.disabled = !stepReachable(step.id);
      if (step.id === state.step) button.classList.add("active");
      button.addEventListener("click", () => {
        if (stepReachable(step.id)) session.set({ step: step.id });
      });
      nav.appendChild(button);
    }
    content.innerHTML = "";
    STEPS[state.step - 1].render(content);
  }

  sync();
  unsubscribe = session.subscribe(sync);
}
