import { describe, expect, it } from "vitest";

import { nodeCount, provenanceColor, TreeViewModel, walk } from "../src/model";
import { highlightMatches } from "../src/view";
import { llmTree, mixedTree, node, treeDoc } from "./helpers";

describe("provenanceColor", () => {
  it("is a pure mapping of provenance", () => {
    expect(provenanceColor("llm")).toBe("#7c4dff");
    expect(provenanceColor("appstore")).toBe("#ffc107");
    expect(provenanceColor("root")).not.toBe(provenanceColor("llm"));
    expect(provenanceColor("llm")).toBe(provenanceColor("llm"));
  });
});

describe("TreeViewModel", () => {
  it("walks and counts nodes", () => {
    const doc = llmTree(4);
    expect([...walk(doc.root)]).toHaveLength(5);
    expect(nodeCount(doc)).toBe(4);
  });

  it("drops UI state for nodes that vanished after a replace", () => {
    const vm = new TreeViewModel(llmTree(3));
    vm.selectedId = "0.3";
    vm.collapsed.add("0.3");
    vm.pendingInspire.add("0.2");
    const smaller = { ...llmTree(1), tree_id: vm.doc.tree_id };
    vm.replaceDoc(smaller);
    expect(vm.selectedId).toBeNull();
    expect(vm.collapsed.has("0.3")).toBe(false);
    expect(vm.pendingInspire.has("0.2")).toBe(false);
  });

  it("caps inspiration at the configured depth", () => {
    const vm = new TreeViewModel(mixedTree());
    expect(vm.canInspire(vm.doc.root)).toBe(true);
    expect(vm.canInspire(vm.find("0.1")!)).toBe(true);
    const leaf = node("x", "Leaf", 2, "llm");
    expect(vm.canInspire(leaf)).toBe(false);
  });

  it("finds nodes by id", () => {
    const vm = new TreeViewModel(treeDoc(node("0", "Root", 0, "root")));
    expect(vm.find("0")?.["sub-feature"]).toBe("Root");
    expect(vm.find("0.9")).toBeNull();
  });
});

describe("highlightMatches", () => {
  it("marks every name word of four letters or more", () => {
    const html = highlightMatches(
      "Track sleep nightly; sleep tracking is the core.",
      "Sleep Tracking",
    );
    expect(html.match(/<mark>/g)?.length).toBe(3);
    expect(html).toContain("<mark>sleep</mark>");
  });

  it("escapes markup in the description", () => {
    const html = highlightMatches("<script>alert(1)</script> sleep", "Sleep");
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("ignores short and symbol-only words", () => {
    const html = highlightMatches("go to the app now", "Go & To");
    expect(html).not.toContain("<mark>");
  });
});
