import { ApiClient } from "./api";
import { App } from "./app";

declare global {
  interface Window {
    FEATREE_API_BASE?: string;
  }
}

window.addEventListener("DOMContentLoaded", () => {
  const container = document.querySelector("#app") as HTMLElement | null;
  if (!container) return;
  const base = window.FEATREE_API_BASE ?? window.location.origin;
  const api = new ApiClient(base);
  const app = new App(container, api);

  const params = new URLSearchParams(window.location.search);
  const treeId = params.get("tree");
  if (treeId) {
    void app.loadTree(treeId);
    return;
  }

  // no tree selected: offer the list
  void api.listTrees().then(({ trees }) => {
    const list = document.createElement("ul");
    list.className = "tree-list";
    for (const tree of trees) {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = `?tree=${encodeURIComponent(tree.tree_id)}`;
      link.textContent = `${tree.name} (${tree.tree_id}, v${tree.version})`;
      item.appendChild(link);
      list.appendChild(item);
    }
    container.appendChild(list);
  });
});
