// Live score panel: per-principle bars, per-indicator rows with weight,
// evidence, and guidance. Values are copied verbatim from the evaluation
// payload; bar widths are presentation only.

import type { EvaluationResponse } from "../types.js";

export function renderScorePanel(
  container: HTMLElement,
  evaluation: EvaluationResponse | null,
  evaluating: boolean
): void {
  container.innerHTML = "";
  container.className = "score-panel";
  if (evaluation === null) {
    const note = document.createElement("p");
    note.className = "muted";
    note.textContent = evaluating ? "evaluating..." : "no evaluation yet";
    container.appendChild(note);
    return;
  }

  const { profile, guidance } = evaluation;
  const guidanceByIndicator = new Map(guidance.map((g) => [g.indicator, g]));

  const principles = document.createElement("div");
  principles.className = "principles";
  for (const [principle, value] of Object.entries(profile.principles)) {
    const row = document.createElement("div");
    row.className = "principle-row";
    row.dataset.principle = principle;
    row.dataset.value = String(value);

    const label = document.createElement("span");
    label.className = "principle-label";
    label.textContent = principle;
    const track = document.createElement("span");
    track.className = "bar-track";
    const fill = document.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${value * 100}%`;
    track.appendChild(fill);
    const amount = document.createElement("span");
    amount.className = "principle-value";
    amount.textContent = String(value);

    row.appendChild(label);
    row.appendChild(track);
    row.appendChild(amount);
    principles.appendChild(row);
  }
  container.appendChild(principles);

  const overall = document.createElement("p");
  overall.className = "overall";
  overall.dataset.value = String(profile.overall);
  overall.textContent = `overall (mean of principles): ${profile.overall}`;
  container.appendChild(overall);

  const list = document.createElement("ul");
  list.className = "indicator-list";
  for (const indicatorId of Object.keys(profile.indicators).sort()) {
    const score = profile.indicators[indicatorId];
    const item = document.createElement("li");
    item.className = "indicator";
    item.dataset.indicator = indicatorId;
    item.dataset.value = String(score.value);

    const head = document.createElement("div");
    head.className = "indicator-head";
    const name = document.createElement("strong");
    name.textContent = indicatorId;
    head.appendChild(name);

    const value = document.createElement("span");
    value.className = "indicator-value";
    value.textContent = String(score.value);
    head.appendChild(value);

    const entry = guidanceByIndicator.get(indicatorId);
    // every indicator shows its weight: unequal contributions must be visible
    const weightInfo = evaluation.weights?.[indicatorId];
    const weight = document.createElement("span");
    weight.className = "indicator-weight";
    const weightValue = weightInfo?.weight ?? entry?.weight;
    weight.textContent = weightValue !== undefined ? `weight ${weightValue}` : "";
    if (weightValue !== undefined) weight.dataset.weight = String(weightValue);
    head.appendChild(weight);
    item.appendChild(head);

    if (score.evidence.length > 0) {
      const evidence = document.createElement("p");
      evidence.className = "evidence";
      evidence.textContent = score.evidence.join("; ");
      item.appendChild(evidence);
    }
    if (entry && entry.missing.length > 0) {
      const hints = document.createElement("ul");
      hints.className = "guidance";
      for (const hint of entry.missing) {
        const hintItem = document.createElement("li");
        hintItem.textContent = hint;
        hints.appendChild(hintItem);
      }
      item.appendChild(hints);
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}
