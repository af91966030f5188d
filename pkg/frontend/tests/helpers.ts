import { vi } from "vitest";
import type { Provenance, TreeDoc, TreeNode } from "../src/types";

let ordinal = 0;

export function node(
  nodeId: string,
  name: string,
  level: number,
  provenance: Provenance,
  children: TreeNode[] = [],
  sourceAppId?: string,
): TreeNode {
  const built: TreeNode = {
    node_id: nodeId,
    "sub-feature": name,
    description: `${name} description`,
    level,
    provenance,
    children,
  };
  if (sourceAppId) built["source-app-id"] = sourceAppId;
  return built;
}

export function treeDoc(root: TreeNode, version = 0): TreeDoc {
  ordinal += 1;
  return {
    format_version: "1.0",
    tree_id: `fixture-${ordinal}`,
    approach: "llm",
    config: { k: 3, n: 5, depth: 2 },
    created_at: "2024-02-01T00:00:00Z",
    transcript_refs: [],
    root,
    version,
  };
}

export function llmTree(childCount = 5): TreeDoc {
  const children = Array.from({ length: childCount }, (_, i) =>
    node(`0.${i + 1}`, `Feature ${i + 1}`, 1, "llm"),
  );
  return treeDoc(node("0", "Root", 0, "root", children));
}

export function mixedTree(): TreeDoc {
  const children = [
    node("0.1", "Direct Idea", 1, "llm"),
    node("0.2", "Grounded Idea", 1, "appstore", [], "com.source"),
  ];
  return treeDoc(node("0", "Root", 0, "root", children));
}

export interface FetchStub {
  calls: { url: string; init?: RequestInit }[];
  fn: typeof fetch;
}

/** jsdom reports inline styles as rgb(...); convert a #rrggbb for asserts. */
export function asRgb(hex: string): string {
  const value = parseInt(hex.slice(1), 16);
  return `rgb(${(value >> 16) & 255}, ${(value >> 8) & 255}, ${value & 255})`;
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function textResponse(text: string, status = 200): Response {
  return new Response(text, {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Install a fetch stub routing by (method, url-suffix) to queued responses. */
export function stubFetch(
  routes: Array<[string, string, () => Response | Promise<Response>]>,
): FetchStub {
  const calls: { url: string; init?: RequestInit }[] = [];
  const handler = async (
    input: RequestInfo | URL,
    init?: RequestInit,
  ): Promise<Response> => {
    const url = String(input);
    calls.push({ url, init });
    const method = (init?.method ?? "GET").toUpperCase();
    for (const [routeMethod, fragment, make] of routes) {
      if (routeMethod.toUpperCase() === method && url.includes(fragment)) {
        return make();
      }
    }
    throw new Error(`no stubbed route for ${method} ${url}`);
  };
  const fn = vi.fn(handler) as unknown as typeof fetch;
  vi.stubGlobal("fetch", fn);
  return { calls, fn };
}

export function inspiredDoc(
  base: TreeDoc,
  nodeId: string,
  source: "llm" | "appstore",
  names: string[],
): TreeDoc {
  const clone = JSON.parse(JSON.stringify(base)) as TreeDoc;
  const find = (current: TreeNode): TreeNode | null => {
    if (current.node_id === nodeId) return current;
    for (const child of current.children) {
      const hit = find(child);
      if (hit) return hit;
    }
    return null;
  };
  const target = find(clone.root);
  if (!target) throw new Error(`no node ${nodeId} in fixture`);
  target.children = names.map((name, i) =>
    node(
      `${nodeId}.${i + 1}`,
      name,
      target.level + 1,
      source,
      [],
      source === "appstore" ? "com.source" : undefined,
    ),
  );
  clone.version = base.version + 1;
  return clone;
}
