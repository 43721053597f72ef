import { wordDiff } from "./diff.js";
import {
  AppState,
  FILTERS,
  canAnnotate,
  canCrosscheck,
  draftFor,
  rawBaseline,
  selectedRecord,
  visibleQueue,
} from "./state.js";
import type { ApiRecord } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function renderBanner(state: AppState): void {
  const banner = byId<HTMLDivElement>("banner");
  banner.textContent = state.banner ?? "";
  banner.classList.toggle("hidden", state.banner === null);
}

export function renderConflict(state: AppState): void {
  const box = byId<HTMLDivElement>("conflict");
  box.classList.toggle("hidden", state.conflict === null);
  if (state.conflict) {
    byId<HTMLSpanElement>("conflict-message").textContent = state.conflict.message;
  }
}

export function renderFilters(state: AppState): void {
  const bar = byId<HTMLDivElement>("filters");
  bar.replaceChildren(
    ...FILTERS.map((f) => {
      const button = el("button", f === state.filter ? "filter active" : "filter", f);
      button.dataset.filter = f;
      return button;
    }),
  );
}

export function renderQueue(state: AppState): void {
  const list = byId<HTMLUListElement>("queue");
  const items = visibleQueue(state).map((record) => {
    const item = el("li", record.id === state.selectedId ? "row selected" : "row");
    item.dataset.id = record.id;
    item.append(
      el("span", "row-id", record.id),
      el("span", `badge ${record.status}`, record.status),
      el("span", "row-nl", record.lifted_nl),
    );
    return item;
  });
  list.replaceChildren(...items);
  byId<HTMLSpanElement>("queue-count").textContent = String(items.length);
}

function renderHistory(record: ApiRecord): HTMLElement {
  const box = el("div", "history");
  if (!record.history.length) return box;
  box.append(el("h3", undefined, "history"));
  for (const entry of record.history) {
    box.append(
      el("div", "history-entry", `${entry.timestamp} ${entry.annotator ?? "(machine)"}: ${entry.nl}`),
    );
  }
  return box;
}

function renderDiff(before: string, after: string): HTMLElement {
  const box = el("p", "diff");
  for (const token of wordDiff(before, after)) {
    const span = el("span", `tok ${token.kind}`, token.text);
    box.append(span, document.createTextNode(" "));
  }
  return box;
}

export function renderDetail(state: AppState): void {
  const pane = byId<HTMLDivElement>("detail");
  const record = selectedRecord(state);
  if (!record) {
    pane.replaceChildren(el("p", "empty", "queue is empty"));
    return;
  }
  const head = el("div", "detail-head");
  head.append(
    el("span", "row-id", record.id),
    el("span", `badge ${record.status}`, record.status),
    el("span", "meta", `v${record.version} · ${record.provenance} · ${record.domain}`),
  );

  // STL strings come verbatim from the API; never re-serialized here
  const stl = el("div", "stl");
  const inOrder = el("pre", "stl-line");
  inOrder.textContent = record.lifted_stl["inorder_word"] ?? "";
  const preOrder = el("pre", "stl-line");
  preOrder.textContent = record.lifted_stl["preorder_symbol"] ?? "";
  stl.append(el("h3", undefined, "in-order / word"), inOrder);
  stl.append(el("h3", undefined, "pre-order / symbol"), preOrder);

  const nl = el("div", "nl");
  nl.append(el("h3", undefined, "sentence"), el("p", "nl-text", record.lifted_nl));

  pane.replaceChildren(head, stl, nl);

  if (record.status === "raw") {
    const editor = el("div", "editor");
    editor.append(el("h3", undefined, "corrected sentence"));
    const area = el("textarea");
    area.id = "draft";
    area.rows = 4;
    area.value = draftFor(state, record);
    const submit = el("button", "primary", "submit annotation (ctrl+enter)");
    submit.id = "submit-annotation";
    submit.disabled = !canAnnotate(record, state.identity);
    editor.append(area, submit);
    if (!state.identity.trim()) {
      editor.append(el("p", "hint", "enter your name above to annotate"));
    }
    pane.append(editor);
  }

  if (record.status === "annotated") {
    const check = el("div", "crosscheck");
    check.append(el("h3", undefined, `crosscheck (annotated by ${record.annotator ?? "?"})`));
    check.append(renderDiff(rawBaseline(record), record.lifted_nl));
    const accept = el("button", "primary", "accept (a)");
    accept.id = "accept";
    const reject = el("button", "danger", "reject (r)");
    reject.id = "reject";
    const allowed = canCrosscheck(record, state.identity);
    accept.disabled = !allowed;
    reject.disabled = !allowed;
    check.append(accept, reject);
    if (record.annotator === state.identity.trim()) {
      check.append(el("p", "hint", "self-review is not allowed"));
    }
    pane.append(check);
  }

  pane.append(renderHistory(record));
}

export function renderAll(state: AppState): void {
  renderBanner(state);
  renderConflict(state);
  renderFilters(state);
  renderQueue(state);
  renderDetail(state);
}
