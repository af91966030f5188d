import type { Provenance, TreeDoc, TreeNode } from "./types";

/** Node color is a pure function of provenance. */
export function provenanceColor(provenance: Provenance): string {
  switch (provenance) {
    case "llm":
      return "#7c4dff"; // purple
    case "appstore":
      return "#ffc107"; // yellow
    default:
      return "#9e9e9e";
  }
}

/**
 * Tree document plus UI-only state.  All feature data comes from the API;
 * the view model never invents nodes.
 */
export class TreeViewModel {
  doc: TreeDoc;
  selectedId: string | null = null;
  collapsed = new Set<string>();
  pendingInspire = new Set<string>();
  nodeMessages = new Map<string, string>();
  readOnly = false;

  constructor(doc: TreeDoc) {
    this.doc = doc;
  }

  /** Swap in a fresh document from the API, keeping compatible UI state. */
  replaceDoc(doc: TreeDoc): void {
    this.doc = doc;
    const ids = new Set<string>();
    for (const node of walk(doc.root)) {
      ids.add(node.node_id);
    }
    if (this.selectedId !== null && !ids.has(this.selectedId)) {
      this.selectedId = null;
    }
    for (const id of [...this.collapsed]) {
      if (!ids.has(id)) this.collapsed.delete(id);
    }
    for (const id of [...this.pendingInspire]) {
      if (!ids.has(id)) this.pendingInspire.delete(id);
    }
  }

  find(nodeId: string): TreeNode | null {
    for (const node of walk(this.doc.root)) {
      if (node.node_id === nodeId) return node;
    }
    return null;
  }

  /** Nodes that may still be refined (their children stay within depth). */
  canInspire(node: TreeNode): boolean {
    return node.level < this.doc.config.depth;
  }
}

export function* walk(node: TreeNode): Generator<TreeNode> {
  yield node;
  for (const child of node.children ?? []) {
    yield* walk(child);
  }
}

export function nodeCount(doc: TreeDoc): number {
  let count = -1;
  for (const _ of walk(doc.root)) count += 1;
  return count;
}
