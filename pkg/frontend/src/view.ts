import { provenanceColor, TreeViewModel } from "./model";
import type { InspireSource, TreeNode } from "./types";

export interface NodeHandlers {
  onSelect(nodeId: string): void;
  onToggleCollapse(nodeId: string): void;
  onInspire(nodeId: string, source: InspireSource): void;
  onDelete(nodeId: string): void;
  onTrace(nodeId: string): void;
}

/** Rebuild the leveled tree inside `container` from the view model. */
export function renderTree(
  container: HTMLElement,
  vm: TreeViewModel,
  handlers: NodeHandlers,
): void {
  container.textContent = "";
  container.appendChild(buildNode(vm.doc.root, vm, handlers));
}

function buildNode(
  node: TreeNode,
  vm: TreeViewModel,
  handlers: NodeHandlers,
): HTMLElement {
  const doc = document;
  const wrapper = doc.createElement("div");
  wrapper.className = `tree-node level-${node.level}`;
  wrapper.dataset.nodeId = node.node_id;

  const row = doc.createElement("div");
  row.className = "node-row";
  if (vm.selectedId === node.node_id) row.classList.add("selected");
  if (vm.pendingInspire.has(node.node_id)) row.classList.add("pending");

  if (node.children.length > 0) {
    const caret = doc.createElement("button");
    caret.className = "caret";
    caret.textContent = vm.collapsed.has(node.node_id) ? "+" : "-";
    caret.addEventListener("click", () =>
      handlers.onToggleCollapse(node.node_id),
    );
    row.appendChild(caret);
  }

  const chip = doc.createElement("span");
  chip.className = `chip provenance-${node.provenance}`;
  chip.style.backgroundColor = provenanceColor(node.provenance);
  chip.textContent = node["sub-feature"];
  chip.title = node.description;
  chip.addEventListener("click", () => handlers.onSelect(node.node_id));
  row.appendChild(chip);

  if (node.error) {
    const badge = doc.createElement("span");
    badge.className = "error-badge";
    badge.textContent = `failed: ${node.error}`;
    row.appendChild(badge);
  }

  const pending = vm.pendingInspire.has(node.node_id);
  if (vm.canInspire(node)) {
    for (const source of ["llm", "appstore"] as const) {
      const button = doc.createElement("button");
      button.className = `inspire-${source}`;
      button.textContent =
        source === "llm" ? "Inspire from LLM" : "Inspire from AppStore";
      button.disabled = vm.readOnly || pending;
      button.addEventListener("click", () =>
        handlers.onInspire(node.node_id, source),
      );
      row.appendChild(button);
    }
  }
  if (pending) {
    const spinner = doc.createElement("span");
    spinner.className = "spinner";
    spinner.textContent = "…";
    row.appendChild(spinner);
  }

  if (node.level > 0) {
    const trace = doc.createElement("button");
    trace.className = "trace-btn";
    trace.textContent = "Source";
    trace.disabled = node.provenance !== "appstore" || vm.readOnly;
    trace.title =
      node.provenance === "appstore"
        ? `Show the description of ${node["source-app-id"] ?? "?"}`
        : "Only grounded nodes have a source app";
    trace.addEventListener("click", () => handlers.onTrace(node.node_id));
    row.appendChild(trace);

    const remove = doc.createElement("button");
    remove.className = "delete-btn";
    remove.textContent = "Delete";
    remove.disabled = vm.readOnly || pending;
    remove.addEventListener("click", () => handlers.onDelete(node.node_id));
    row.appendChild(remove);
  }

  const message = vm.nodeMessages.get(node.node_id);
  if (message) {
    const note = doc.createElement("div");
    note.className = "node-message";
    note.textContent = message;
    row.appendChild(note);
  }

  wrapper.appendChild(row);

  const childBox = doc.createElement("div");
  childBox.className = "children";
  if (vm.collapsed.has(node.node_id)) childBox.classList.add("hidden");
  for (const child of node.children) {
    childBox.appendChild(buildNode(child, vm, handlers));
  }
  wrapper.appendChild(childBox);
  return wrapper;
}

/** Description text with every word of the feature name marked. */
export function highlightMatches(description: string, name: string): string {
  const words = name
    .split(/\s+/)
    .map((w) => w.replace(/[^\p{L}\p{N}]/gu, ""))
    .filter((w) => w.length >= 4);
  const escaped = escapeHtml(description);
  if (words.length === 0) return escaped;
  // single pass so inserted tags are never re-matched
  const pattern = new RegExp(
    `(${words.map((w) => escapeRegExp(escapeHtml(w))).join("|")})`,
    "gi",
  );
  return escaped.replace(pattern, "<mark>$1</mark>");
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}
