import type { ApiRecord, Status } from "./types.js";

export type Filter = Status | "all";

export interface Conflict {
  recordId: string;
  message: string;
}

/**
 * Whole-app state. Everything here is transient except `drafts`, which the
 * shell persists to localStorage so unsaved corrections survive a reload.
 */
export interface AppState {
  records: ApiRecord[];
  filter: Filter;
  selectedId: string | null;
  identity: string;
  banner: string | null;
  conflict: Conflict | null;
  drafts: Record<string, string>;
}

export const FILTERS: Filter[] = ["raw", "annotated", "crosschecked", "rejected", "all"];

export function initialState(drafts: Record<string, string> = {}): AppState {
  return {
    records: [],
    filter: "raw",
    selectedId: null,
    identity: "",
    banner: null,
    conflict: null,
    drafts,
  };
}

export function visibleQueue(state: AppState): ApiRecord[] {
  if (state.filter === "all") return state.records;
  return state.records.filter((r) => r.status === state.filter);
}

export function selectedRecord(state: AppState): ApiRecord | null {
  return state.records.find((r) => r.id === state.selectedId) ?? null;
}

function clampSelection(state: AppState): void {
  const queue = visibleQueue(state);
  if (!queue.some((r) => r.id === state.selectedId)) {
    state.selectedId = queue.length ? queue[0].id : null;
  }
}

export function setRecords(state: AppState, records: ApiRecord[]): void {
  state.records = records;
  clampSelection(state);
}

export function setFilter(state: AppState, filter: Filter): void {
  state.filter = filter;
  clampSelection(state);
}

export function cycleFilter(state: AppState): void {
  const at = FILTERS.indexOf(state.filter);
  setFilter(state, FILTERS[(at + 1) % FILTERS.length]);
}

export function selectStep(state: AppState, delta: 1 | -1): void {
  const queue = visibleQueue(state);
  if (!queue.length) {
    state.selectedId = null;
    return;
  }
  const at = queue.findIndex((r) => r.id === state.selectedId);
  const next = at < 0 ? 0 : Math.min(queue.length - 1, Math.max(0, at + delta));
  state.selectedId = queue[next].id;
}

export function draftFor(state: AppState, record: ApiRecord): string {
  return state.drafts[record.id] ?? record.lifted_nl;
}

export function setDraft(state: AppState, recordId: string, text: string): void {
  state.drafts[recordId] = text;
}

export function clearDraft(state: AppState, recordId: string): void {
  delete state.drafts[recordId];
}

/** Merge a mutated record back and advance to the next queue item. */
export function applyServerRecord(state: AppState, record: ApiRecord): void {
  const at = state.records.findIndex((r) => r.id === record.id);
  if (at >= 0) state.records[at] = record;
  else state.records.push(record);
  state.conflict = null;
  clampSelection(state);
}

export function raiseConflict(state: AppState, recordId: string, message: string): void {
  state.conflict = { recordId, message };
}

/** Self-review is blocked client-side; the server enforces it too. */
export function canCrosscheck(record: ApiRecord, identity: string): boolean {
  return (
    record.status === "annotated" &&
    identity.trim() !== "" &&
    record.annotator !== identity.trim()
  );
}

export function canAnnotate(record: ApiRecord, identity: string): boolean {
  return record.status === "raw" && identity.trim() !== "";
}

/** Raw text the annotated NL is diffed against in the crosscheck view. */
export function rawBaseline(record: ApiRecord): string {
  return record.history.length ? record.history[0].nl : record.lifted_nl;
}
