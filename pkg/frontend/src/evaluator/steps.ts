// The three wizard steps: load, edit+rescore, export.

import { exportDraft, fetchMetadata, openPullRequest } from "../api.js";
import type { Draft } from "../types.js";
import { emptyDraft } from "../types.js";
import { renderScorePanel } from "./score-panel.js";
import {
  editField,
  runEvaluation,
  session,
  sessionToHash,
} from "./state.js";

export function renderStep1(root: HTMLElement): void {
  const intro = document.createElement("p");
  intro.textContent =
    "Load software metadata from the observatory, a code repository, or an uploaded file; or start from scratch.";
  root.appendChild(intro);

  root.appendChild(
    loaderRow("observatory", "Tool id", "e.g. seqkit-cmd", async (ref) => {
      const result = await fetchMetadata({ kind: "observatory", ref });
      applyLoadedDraft(result.draft, result.origin);
    })
  );
  root.appendChild(
    loaderRow("repo", "Repository URL", "https://github.com/owner/repo", async (ref) => {
      const result = await fetchMetadata({ kind: "repo", ref });
      applyLoadedDraft(result.draft, result.origin);
    })
  );

  const uploadRow = document.createElement("div");
  uploadRow.className = "loader-row";
  const uploadLabel = document.createElement("label");
  uploadLabel.textContent = "Metadata file (CFF / JSON-LD / raw record) ";
  const file = document.createElement("input");
  file.type = "file";
  file.addEventListener("change", async () => {
    const chosen = file.files?.[0];
    if (!chosen) return;
    try {
      const result = await fetchMetadata({ kind: "upload", ref: await chosen.text() });
      applyLoadedDraft(result.draft, result.origin);
    } catch (error) {
      session.set({ error: (error as Error).message });
    }
  });
  uploadLabel.appendChild(file);
  uploadRow.appendChild(uploadLabel);
  root.appendChild(uploadRow);

  const scratch = document.createElement("button");
  scratch.textContent = "Start from scratch";
  scratch.addEventListener("click", () => {
    session.set({ draft: emptyDraft(), origin: "manual", step: 1 });
  });
  root.appendChild(scratch);

  const state = session.get();
  if (state.error) root.appendChild(errorNote(state.error));
  if (state.origin) {
    const note = document.createElement("p");
    note.className = "origin-note";
    note.textContent = `loaded from ${state.origin}; continue to review and complete the metadata`;
    root.appendChild(note);
  }
}

function loaderRow(
  kind: string,
  labelText: string,
  placeholder: string,
  load: (ref: string) => Promise<void>
): HTMLElement {
  const row = document.createElement("div");
  row.className = "loader-row";
  const label = document.createElement("label");
  label.textContent = `${labelText} `;
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = placeholder;
  input.dataset.loader = kind;
  label.appendChild(input);
  const button = document.createElement("button");
  button.textContent = "Load";
  button.addEventListener("click", async () => {
    if (!input.value.trim()) return;
    try {
      await load(input.value.trim());
    } catch (error) {
      session.set({ error: (error as Error).message });
    }
  });
  row.appendChild(label);
  row.appendChild(button);
  return row;
}

function applyLoadedDraft(partial: Partial<Draft>, origin: string): void {
  const draft = { ...emptyDraft(), ...partial };
  if (!draft.type) draft.type = "undefined";
  session.set({ draft, origin, error: null, dirtyFields: [] });
}

// --- step 2 --------------------------------------------------------------------

const TYPE_OPTIONS = [
  "cmd", "lib", "web", "rest", "sparql", "soap", "workbench", "suite",
  "workflow", "plugin", "script", "db", "undefined",
];

const LIST_FIELDS: [keyof Draft & string, string][] = [
  ["webpages", "Webpages"],
  ["repositories", "Repositories"],
  ["licenses", "Licenses"],
  ["input_formats", "Input formats"],
  ["output_formats", "Output formats"],
  ["authors", "Authors"],
  ["download_links", "Download links"],
  ["version_strings", "Versions"],
  ["dependencies", "Dependencies"],
  ["collections", "Collections"],
];

const ASSERTIONS: [keyof Draft & string, string][] = [
  ["tests_present", "Testing infrastructure is present"],
  ["registration_required", "Use requires registration"],
  ["dependencies_declared", "Dependencies are declared outside the registry"],
];

export function renderStep2(root: HTMLElement): void {
  const state = session.get();
  const layout = document.createElement("div");
  layout.className = "edit-layout";

  const form = document.createElement("form");
  form.className = "draft-form";
  form.addEventListener("submit", (event) => event.preventDefault());

  form.appendChild(textInput("name", "Name", state.draft.name, (value, field) =>
    editField(field, (draft) => (draft.name = value))
  ));

  const typeLabel = document.createElement("label");
  typeLabel.textContent = "Type ";
  const select = document.createElement("select");
  select.name = "type";
  for (const option of TYPE_OPTIONS) {
    const el = document.createElement("option");
    el.value = option;
    el.textContent = option;
    el.selected = option === state.draft.type;
    select.appendChild(el);
  }
  select.addEventListener("change", () =>
    editField("type", (draft) => (draft.type = select.value))
  );
  typeLabel.appendChild(select);
  form.appendChild(typeLabel);

  const description = document.createElement("label");
  description.textContent = "Description ";
  const descriptionBox = document.createElement("textarea");
  descriptionBox.name = "description";
  descriptionBox.value = state.draft.description ?? "";
  descriptionBox.addEventListener("input", () =>
    editField("description", (draft) => (draft.description = descriptionBox.value || null))
  );
  description.appendChild(descriptionBox);
  form.appendChild(description);

  for (const [field, labelText] of LIST_FIELDS) {
    form.appendChild(
      listInput(field, labelText, state.draft[field] as string[])
    );
  }

  const assertions = document.createElement("fieldset");
  const legend = document.createElement("legend");
  legend.textContent = "Facts the registries cannot know";
  assertions.appendChild(legend);
  for (const [field, labelText] of ASSERTIONS) {
    const label = document.createElement("label");
    label.className = "assertion";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.name = field;
    box.checked = Boolean(state.draft[field]);
    box.addEventListener("change", () =>
      editField(field, (draft) => {
        (draft as unknown as Record<string, boolean>)[field] = box.checked;
      })
    );
    label.appendChild(box);
    label.append(` ${labelText}`);
    assertions.appendChild(label);
  }
  form.appendChild(assertions);

  if (state.error) form.appendChild(errorNote(state.error));
  layout.appendChild(form);

  const panel = document.createElement("div");
  renderScorePanel(panel, state.lastEvaluation, state.evaluating);
  layout.appendChild(panel);
  root.appendChild(layout);

  if (state.lastEvaluation === null && !state.evaluating) {
    void runEvaluation();
  }
}

function textInput(
  field: string,
  labelText: string,
  value: string,
  onInput: (value: string, field: string) => void
): HTMLElement {
  const label = document.createElement("label");
  label.textContent = `${labelText} `;
  const input = document.createElement("input");
  input.type = "text";
  input.name = field;
  input.value = value;
  input.addEventListener("input", () => onInput(input.value, field));
  label.appendChild(input);
  return label;
}

function listInput(field: string, labelText: string, values: string[]): HTMLElement {
  const label = document.createElement("label");
  label.textContent = `${labelText} (one per line) `;
  const box = document.createElement("textarea");
  box.name = field;
  box.value = values.join("\n");
  box.addEventListener("input", () =>
    editField(field, (draft) => {
      (draft as unknown as Record<string, string[]>)[field] = box.value
        .split("\n")
        .map((line) => line.trim())
        .filter((line) => line.length > 0);
    })
  );
  label.appendChild(box);
  return label;
}

// --- step 3 --------------------------------------------------------------------

export function renderStep3(root: HTMLElement): void {
  const state = session.get();
  const intro = document.createElement("p");
  intro.textContent = "Export the reviewed metadata.";
  root.appendChild(intro);

  for (const format of ["cff", "masmp"] as const) {
    const button = document.createElement("button");
    button.dataset.export = format;
    button.textContent = format === "cff" ? "Download CITATION.cff" : "Download masmp.jsonld";
    button.addEventListener("click", async () => {
      try {
        const blob = await exportDraft(format, session.get().draft);
        downloadBlob(blob, format === "cff" ? "CITATION.cff" : "masmp.jsonld");
      } catch (error) {
        session.set({ error: (error as Error).message });
      }
    });
    root.appendChild(button);
  }

  const hasRepo = state.draft.repositories.length > 0;
  const prButton = document.createElement("button");
  prButton.dataset.export = "pr";
  prButton.textContent = "Open pull request (CITATION.cff)";
  prButton.disabled = !hasRepo;
  prButton.addEventListener("click", async () => {
    try {
      const result = await openPullRequest(
        session.get().draft, "cff", session.get().draft.repositories[0]
      );
      const note = document.createElement("p");
      note.className = "pr-result";
      note.textContent = result.dry_run
        ? `dry run: payload for ${result.change?.repo} on branch ${result.change?.branch}`
        : `submitted to ${result.change?.repo}`;
      if (result.dry_run) {
        const badge = document.createElement("span");
        badge.className = "badge dry-run";
        badge.textContent = "DRY RUN";
        note.prepend(badge);
      }
      root.appendChild(note);
    } catch (error) {
      session.set({ error: (error as Error).message });
    }
  });
  root.appendChild(prButton);
  if (!hasRepo) {
    const why = document.createElement("p");
    why.className = "muted";
    why.textContent = "Pull requests need a repository URL in the draft.";
    root.appendChild(why);
  }

  const share = document.createElement("p");
  share.className = "muted";
  share.textContent = `shareable session: ${sessionToHash()}`;
  root.appendChild(share);

  if (state.error) root.appendChild(errorNote(state.error));
}

// jsdom-friendly: capturable via a hook the tests can replace
export let downloadBlob = (blob: Blob, filename: string): void => {
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
};

export function setDownloadHook(hook: typeof downloadBlob): void {
  downloadBlob = hook;
}

function errorNote(message: string): HTMLElement {
  const note = document.createElement("p");
  note.className = "error";
  note.textContent = message;
  return note;
}
