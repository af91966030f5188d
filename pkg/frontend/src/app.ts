import { ApiClient, ApiError } from "./api";
import { TreeViewModel } from "./model";
import { highlightMatches, renderTree } from "./view";
import type { InspireMode, InspireSource, TreeNode } from "./types";

export interface AppOptions {
  /** Replace-vs-append decision when re-inspiring a node that has children. */
  chooseMode?: (node: TreeNode) => InspireMode | null;
  /** Called on a version conflict before the tree is reloaded. */
  onConflict?: (message: string) => void;
}

function defaultChooseMode(): InspireMode | null {
  const replace = window.confirm(
    "This node already has children.\nOK replaces them, Cancel appends the new ones.",
  );
  return replace ? "replace" : "append";
}

/**
 * Analyst-in-the-loop tree editor.  Every node mutation round-trips through
 * the HTTP API; the UI never fabricates feature data locally.
 */
export class App {
  vm: TreeViewModel | null = null;
  lastExport: string | null = null;

  private readonly treeBox: HTMLElement;
  private readonly detailBox: HTMLElement;
  private readonly bannerBox: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly options: AppOptions = {},
  ) {
    root.innerHTML = `
      <div class="banner hidden"></div>
      <div class="panes">
        <div class="tree-pane"></div>
        <div class="detail-pane"></div>
      </div>`;
    this.bannerBox = root.querySelector(".banner") as HTMLElement;
    this.treeBox = root.querySelector(".tree-pane") as HTMLElement;
    this.detailBox = root.querySelector(".detail-pane") as HTMLElement;
  }

  async loadTree(treeId: string): Promise<void> {
    try {
      const doc = await this.api.getTree(treeId);
      if (this.vm && this.vm.doc.tree_id === treeId) {
        this.vm.replaceDoc(doc);
        this.vm.readOnly = false;
      } else {
        this.vm = new TreeViewModel(doc);
      }
      this.clearBanner();
    } catch (error) {
      this.handleFailure(error, () => this.loadTree(treeId));
    }
    this.render();
  }

  render(): void {
    if (!this.vm) return;
    renderTree(this.treeBox, this.vm, {
      onSelect: (nodeId) => {
        this.vm!.selectedId = nodeId;
        this.render();
      },
      onToggleCollapse: (nodeId) => {
        const collapsed = this.vm!.collapsed;
        if (collapsed.has(nodeId)) {
          collapsed.delete(nodeId);
        } else {
          collapsed.add(nodeId);
        }
        this.render();
      },
      onInspire: (nodeId, source) => void this.inspire(nodeId, source),
      onDelete: (nodeId) => void this.removeNode(nodeId),
      onTrace: (nodeId) => void this.showTrace(nodeId),
    });
    this.renderDetail();
  }

  private renderDetail(): void {
    const vm = this.vm!;
    const selected = vm.selectedId ? vm.find(vm.selectedId) : null;
    this.detailBox.innerHTML = `
      <div class="toolbar">
        <button class="export-btn">Export JSON</button>
        <span class="tree-meta">${vm.doc.tree_id} · v${vm.doc.version}</span>
      </div>
      <div class="editor ${selected ? "" : "hidden"}">
        <label>Name <input class="edit-name" /></label>
        <label>Description <textarea class="edit-desc"></textarea></label>
        <button class="save-btn">Save</button>
        <label>Feedback for the next inspire on this node
          <textarea class="feedback" placeholder="e.g. This sub-feature is not relevant because..."></textarea>
        </label>
      </div>
      <div class="trace-panel hidden"></div>`;
    const exportBtn = this.detailBox.querySelector(
      ".export-btn",
    ) as HTMLButtonElement;
    exportBtn.addEventListener("click", () => void this.exportTree());
    if (selected) {
      const name = this.detailBox.querySelector(".edit-name") as HTMLInputElement;
      const desc = this.detailBox.querySelector(
        ".edit-desc",
      ) as HTMLTextAreaElement;
      name.value = selected["sub-feature"];
      desc.value = selected.description;
      name.disabled = desc.disabled = vm.readOnly;
      const save = this.detailBox.querySelector(".save-btn") as HTMLButtonElement;
      save.disabled = vm.readOnly;
      save.addEventListener("click", () =>
        void this.saveEdit(selected.node_id, name.value, desc.value),
      );
    }
  }

  feedbackFor(nodeId: string): string | undefined {
    if (this.vm?.selectedId !== nodeId) return undefined;
    const box = this.detailBox.querySelector(".feedback") as
      | HTMLTextAreaElement
      | null;
    const text = box?.value.trim();
    return text ? text : undefined;
  }

  async inspire(nodeId: string, source: InspireSource): Promise<void> {
    const vm = this.vm;
    if (!vm || vm.readOnly) return;
    if (vm.pendingInspire.has(nodeId)) return; // a request is already running
    const node = vm.find(nodeId);
    if (!node) return;

    let mode: InspireMode = "replace";
    if (node.children.length > 0) {
      const choice = (this.options.chooseMode ?? defaultChooseMode)(node);
      if (choice === null) return;
      mode = choice;
    }
    const feedback = this.feedbackFor(nodeId);

    vm.pendingInspire.add(nodeId);
    vm.nodeMessages.delete(nodeId);
    this.render();
    try {
      const updated = await this.api.inspire(vm.doc.tree_id, nodeId, source, {
        mode,
        feedback,
        if_version: vm.doc.version,
      });
      vm.replaceDoc(updated);
      this.clearBanner();
    } catch (error) {
      await this.handleMutationError(error, nodeId, source);
    } finally {
      vm.pendingInspire.delete(nodeId);
      this.render();
    }
  }

  async saveEdit(nodeId: string, name: string, description: string): Promise<void> {
    const vm = this.vm;
    if (!vm || vm.readOnly) return;
    const node = vm.find(nodeId);
    if (!node) return;
    // optimistic: show the edit immediately, reconcile with the server copy
    node["sub-feature"] = name;
    node.description = description;
    this.render();
    try {
      const updated = await this.api.patchNode(vm.doc.tree_id, nodeId, {
        name,
        description,
        if_version: vm.doc.version,
      });
      vm.replaceDoc(updated);
    } catch (error) {
      await this.handleMutationError(error, nodeId);
      await this.loadTree(vm.doc.tree_id); // roll back to the server's truth
    }
    this.render();
  }

  async removeNode(nodeId: string): Promise<void> {
    const vm = this.vm;
    if (!vm || vm.readOnly) return;
    try {
      const updated = await this.api.deleteNode(
        vm.doc.tree_id,
        nodeId,
        vm.doc.version,
      );
      vm.replaceDoc(updated);
    } catch (error) {
      await this.handleMutationError(error, nodeId);
    }
    this.render();
  }

  async showTrace(nodeId: string): Promise<void> {
    const vm = this.vm;
    if (!vm) return;
    const node = vm.find(nodeId);
    if (!node || node.provenance !== "appstore") return;
    const panel = this.detailBox.querySelector(".trace-panel") as HTMLElement;
    panel.classList.remove("hidden");
    const sourceId = node["source-app-id"];
    if (!sourceId) {
      panel.innerHTML = `<span class="badge-unavailable">source unavailable</span>`;
      return;
    }
    try {
      const app = await this.api.getApp(sourceId);
      panel.innerHTML = `
        <h3>${app.title} <code>${app.app_id}</code></h3>
        <p class="trace-description">${highlightMatches(
          app.description,
          node["sub-feature"],
        )}</p>`;
    } catch (error) {
      if (error instanceof ApiError && error.body.code === "not_found") {
        panel.innerHTML = `<span class="badge-unavailable">source unavailable</span>
          <p>${sourceId} is no longer in the corpus.</p>`;
        return;
      }
      this.handleFailure(error, () => this.showTrace(nodeId));
    }
  }

  /** Byte-exact copy of GET /v1/trees/{id}; also offered as a download. */
  async exportTree(): Promise<string | null> {
    const vm = this.vm;
    if (!vm) return null;
    try {
      const text = await this.api.getTreeText(vm.doc.tree_id);
      this.lastExport = text;
      this.offerDownload(`${vm.doc.tree_id}.json`, text);
      return text;
    } catch (error) {
      this.handleFailure(error, () => this.exportTree());
      return null;
    }
  }

  private offerDownload(filename: string, text: string): void {
    if (typeof URL.createObjectURL !== "function") return; // test environments
    const url = URL.createObjectURL(
      new Blob([text], { type: "application/json" }),
    );
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = filename;
    anchor.click();
    URL.revokeObjectURL(url);
  }

  private async handleMutationError(
    error: unknown,
    nodeId: string,
    source?: InspireSource,
  ): Promise<void> {
    if (error instanceof ApiError) {
      if (error.body.code === "empty_retrieval" && source === "appstore") {
        this.vm?.nodeMessages.set(
          nodeId,
          "No matching descriptions in the corpus — try Inspire from LLM instead.",
        );
        return;
      }
      if (error.body.code === "conflict") {
        (this.options.onConflict ?? ((message: string) => window.alert(message)))(
          "Someone else changed this tree. Reloading the latest version.",
        );
        await this.loadTree(this.vm!.doc.tree_id);
        return;
      }
      this.showBanner(`${error.body.code}: ${error.body.message}`, null);
      return;
    }
    this.handleFailure(error, null);
  }

  private handleFailure(error: unknown, retry: (() => unknown) | null): void {
    if (this.vm) this.vm.readOnly = true; // stale tree stays visible, read-only
    const message =
      error instanceof Error ? error.message : "the API is unreachable";
    this.showBanner(`API unreachable (${message})`, retry);
  }

  private showBanner(text: string, retry: (() => unknown) | null): void {
    this.bannerBox.classList.remove("hidden");
    this.bannerBox.textContent = text;
    if (retry) {
      const button = document.createElement("button");
      button.className = "retry-btn";
      button.textContent = "Retry";
      button.addEventListener("click", () => {
        if (this.vm) this.vm.readOnly = false;
        void retry();
      });
      this.bannerBox.appendChild(button);
    }
  }

  private clearBanner(): void {
    this.bannerBox.classList.add("hidden");
    this.bannerBox.textContent = "";
    if (this.vm) this.vm.readOnly = false;
  }
}
