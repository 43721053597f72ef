import { ApiClient } from "./api.js";
import { handleKey } from "./keyboard.js";
import {
  applyServerRecord,
  canAnnotate,
  canCrosscheck,
  clearDraft,
  cycleFilter,
  draftFor,
  initialState,
  raiseConflict,
  selectStep,
  selectedRecord,
  setDraft,
  setFilter,
  setRecords,
} from "./state.js";
import type { Filter } from "./state.js";
import { renderAll } from "./ui.js";

const DRAFTS_KEY = "stlkit-annotate-drafts";

function loadDrafts(): Record<string, string> {
  try {
    return JSON.parse(localStorage.getItem(DRAFTS_KEY) ?? "{}");
  } catch {
    return {};
  }
}

function saveDrafts(drafts: Record<string, string>): void {
  localStorage.setItem(DRAFTS_KEY, JSON.stringify(drafts));
}

const api = new ApiClient("");
const state = initialState(loadDrafts());

function redraw(): void {
  renderAll(state);
}

async function refresh(): Promise<void> {
  const result = await api.listRecords(null);
  if (!result.ok) {
    state.banner =
      result.kind === "offline"
        ? "offline: cannot reach the annotation server"
        : `server error: ${result.message}`;
  } else {
    state.banner = null;
    setRecords(state, result.value);
  }
  redraw();
}

async function submitAnnotation(): Promise<void> {
  const record = selectedRecord(state);
  if (!record || !canAnnotate(record, state.identity)) return;
  const area = document.getElementById("draft") as HTMLTextAreaElement | null;
  const text = area ? area.value : draftFor(state, record);
  const result = await api.submitAnnotation(record.id, {
    nl: text,
    annotator: state.identity.trim(),
    version: record.version,
  });
  if (result.ok) {
    clearDraft(state, record.id);
    saveDrafts(state.drafts);
    applyServerRecord(state, result.value);
  } else if (result.kind === "conflict") {
    raiseConflict(state, record.id, result.message);
  } else {
    state.banner = result.kind === "offline" ? "offline: submit failed" : result.message;
  }
  redraw();
}

async function submitCrosscheck(verdict: "accept" | "reject"): Promise<void> {
  const record = selectedRecord(state);
  if (!record || !canCrosscheck(record, state.identity)) return;
  const result = await api.submitCrosscheck(record.id, {
    verdict,
    reviewer: state.identity.trim(),
    version: record.version,
  });
  if (result.ok) {
    applyServerRecord(state, result.value);
  } else if (result.kind === "conflict") {
    raiseConflict(state, record.id, result.message);
  } else {
    state.banner = result.kind === "offline" ? "offline: submit failed" : result.message;
  }
  redraw();
}

async function reloadConflicted(): Promise<void> {
  if (!state.conflict) return;
  const result = await api.getRecord(state.conflict.recordId);
  if (result.ok) {
    applyServerRecord(state, result.value);
  }
  state.conflict = null;
  redraw();
}

function focusEditor(): void {
  document.getElementById("draft")?.focus();
}

function boot(): void {
  const identity = document.getElementById("identity") as HTMLInputElement;
  identity.addEventListener("input", () => {
    state.identity = identity.value;
    redraw();
  });

  document.getElementById("filters")!.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const filter = target.dataset?.filter as Filter | undefined;
    if (filter) {
      setFilter(state, filter);
      redraw();
    }
  });

  document.getElementById("queue")!.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest("li");
    if (row?.dataset.id) {
      state.selectedId = row.dataset.id;
      redraw();
    }
  });

  const detail = document.getElementById("detail")!;
  detail.addEventListener("click", (event) => {
    const id = (event.target as HTMLElement).id;
    if (id === "submit-annotation") void submitAnnotation();
    if (id === "accept") void submitCrosscheck("accept");
    if (id === "reject") void submitCrosscheck("reject");
  });
  detail.addEventListener("input", (event) => {
    const target = event.target as HTMLTextAreaElement;
    if (target.id === "draft" && state.selectedId) {
      setDraft(state, state.selectedId, target.value);
      saveDrafts(state.drafts);
    }
  });

  document.getElementById("conflict-reload")!.addEventListener("click", () => {
    void reloadConflicted();
  });
  document.getElementById("refresh")!.addEventListener("click", () => {
    void refresh();
  });

  document.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement;
    const inEditor = target.tagName === "TEXTAREA" || target.tagName === "INPUT";
    const handled = handleKey(
      event,
      {
        next: () => {
          selectStep(state, 1);
          redraw();
        },
        prev: () => {
          selectStep(state, -1);
          redraw();
        },
        edit: focusEditor,
        submit: () => void submitAnnotation(),
        accept: () => void submitCrosscheck("accept"),
        reject: () => void submitCrosscheck("reject"),
        cycleFilter: () => {
          cycleFilter(state);
          redraw();
        },
        refresh: () => void refresh(),
      },
      inEditor,
    );
    if (handled) event.preventDefault();
  });

  window.addEventListener("offline", () => {
    state.banner = "offline: connection lost";
    redraw();
  });
  window.addEventListener("online", () => {
    state.banner = null;
    void refresh();
  });

  void refresh();
}

boot();
