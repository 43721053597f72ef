/**
 * Keyboard-only path for every queue action:
 *   j / ArrowDown   next record          k / ArrowUp   previous record
 *   e               focus the editor     Escape        leave the editor
 *   Ctrl+Enter      submit annotation (also from inside the editor)
 *   a / r           crosscheck accept / reject
 *   f               cycle the status filter
 *   g               refresh from the server
 */
export interface KeyActions {
  next(): void;
  prev(): void;
  edit(): void;
  submit(): void;
  accept(): void;
  reject(): void;
  cycleFilter(): void;
  refresh(): void;
}

export function handleKey(event: KeyboardEvent, actions: KeyActions, inEditor: boolean): boolean {
  if (event.ctrlKey && event.key === "Enter") {
    actions.submit();
    return true;
  }
  if (inEditor) {
    if (event.key === "Escape") {
      (event.target as HTMLElement | null)?.blur();
      return true;
    }
    return false; // let typing through
  }
  switch (event.key) {
    case "j":
    case "ArrowDown":
      actions.next();
      return true;
    case "k":
    case "ArrowUp":
      actions.prev();
      return true;
    case "e":
      actions.edit();
      return true;
    case "a":
      actions.accept();
      return true;
    case "r":
      actions.reject();
      return true;
    case "f":
      actions.cycleFilter();
      return true;
    case "g":
      actions.refresh();
      return true;
    default:
      return false;
  }
}
