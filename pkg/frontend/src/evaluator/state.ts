// Evaluator session state. Client-local and serializable into the URL hash,
// so a session can be shared as a link; the API stays stateless.

import { evaluateDraft } from "../api.js";
import { Store } from "../store.js";
import type { Draft, EvaluationResponse } from "../types.js";
import { emptyDraft } from "../types.js";

export interface EvaluatorSession {
  draft: Draft;
  lastEvaluation: EvaluationResponse | null;
  dirtyFields: string[];
  step: 1 | 2 | 3;
  origin: string | null;
  evaluating: boolean;
  error: string | null;
}

export function newSession(): EvaluatorSession {
  return {
    draft: emptyDraft(),
    lastEvaluation: null,
    dirtyFields: [],
    step: 1,
    origin: null,
    evaluating: false,
    error: null,
  };
}

export const session = new Store<EvaluatorSession>(newSession());

export function draftValid(draft: Draft): boolean {
  return draft.name.trim().length > 0 && draft.type.trim().length > 0;
}

export function stepReachable(step: 1 | 2 | 3): boolean {
  const state = session.get();
  if (step === 1) return true;
  if (step === 2) return draftValid(state.draft);
  return state.lastEvaluation !== null;
}

// In-flight evaluations carry monotonic ids; a stale response never
// overwrites a newer one.
let requestSeq = 0;
let debounceTimer: ReturnType<typeof setTimeout> | null = null;

export const EVALUATE_DEBOUNCE_MS = 250;

export function editField(field: string, apply: (draft: Draft) => void): void {
  const state = session.get();
  const draft = structuredClone(state.draft);
  apply(draft);
  const dirty = state.dirtyFields.includes(field)
    ? state.dirtyFields
    : [...state.dirtyFields, field];
  session.set({ draft, dirtyFields: dirty, error: null });
  if (!draftValid(draft)) {
    session.set({ error: "name and type are required" });
    return; // invalid drafts never reach the API
  }
  scheduleEvaluation();
}

export function scheduleEvaluation(): void {
  if (debounceTimer !== null) clearTimeout(debounceTimer);
  debounceTimer = setTimeout(() => {
    debounceTimer = null;
    void runEvaluation();
  }, EVALUATE_DEBOUNCE_MS);
}

export async function runEvaluation(): Promise<void> {
  const state = session.get();
  if (!draftValid(state.draft)) return;
  const id = ++requestSeq;
  session.set({ evaluating: true });
  try {
    const evaluation = await evaluateDraft(state.draft);
    if (id !== requestSeq) return; // superseded
    session.set({ lastEvaluation: evaluation, evaluating: false, error: null });
  } catch (error) {
    if (id !== requestSeq) return;
    // keep the previous profile on failure; surface the message
    session.set({ evaluating: false, error: (error as Error).message });
  }
}

// --- URL (de)serialization ----------------------------------------------------

export function sessionToHash(): string {
  const state = session.get();
  const packed = {
    draft: state.draft,
    step: state.step,
    origin: state.origin,
  };
  return `#/evaluator?session=${encodeURIComponent(JSON.stringify(packed))}`;
}

export function restoreSession(query: string): boolean {
  const params = new URLSearchParams(query);
  const packed = params.get("session");
  if (!packed) return false;
  try {
    const parsed = JSON.parse(decodeURIComponent(packed));
    session.set({
      ...newSession(),
      draft: { ...emptyDraft(), ...parsed.draft },
      step: parsed.step === 3 ? 2 : parsed.step ?? 1, // step 3 needs a fresh evaluation
      origin: parsed.origin ?? null,
    });
    return true;
  } catch {
    return false;
  }
}
