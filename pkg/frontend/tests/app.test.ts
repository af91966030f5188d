import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/app";
import { provenanceColor } from "../src/model";
import {
  asRgb,
  inspiredDoc,
  jsonResponse,
  llmTree,
  mixedTree,
  node,
  stubFetch,
  textResponse,
  treeDoc,
} from "./helpers";

function makeApp(options = {}) {
  const container = document.createElement("div");
  document.body.appendChild(container);
  return new App(container, new ApiClient("http://api.test"), options);
}

function chips(app: App): HTMLElement[] {
  return [...app.root.querySelectorAll<HTMLElement>(".chip")];
}

function nodeRow(app: App, nodeId: string): HTMLElement {
  const el = app.root.querySelector<HTMLElement>(
    `[data-node-id="${nodeId.replace(/\./g, "\\.")}"] .node-row`,
  );
  if (!el) throw new Error(`no rendered node ${nodeId}`);
  return el;
}

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("rendering", () => {
  it("shows five purple level-1 nodes under the root", async () => {
    const doc = llmTree(5);
    stubFetch([["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)]]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const llmChips = [...app.root.querySelectorAll(".chip.provenance-llm")];
    expect(llmChips).toHaveLength(5);
    for (const chip of llmChips) {
      expect((chip as HTMLElement).style.backgroundColor).toBe(
        asRgb(provenanceColor("llm")),
      );
    }
  });

  it("colors grounded nodes yellow in a mixed tree", async () => {
    const doc = mixedTree();
    stubFetch([["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)]]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const grounded = app.root.querySelector(
      ".chip.provenance-appstore",
    ) as HTMLElement;
    expect(grounded.style.backgroundColor).toBe(asRgb(provenanceColor("appstore")));
    const direct = app.root.querySelector(
      ".chip.provenance-llm",
    ) as HTMLElement;
    expect(direct.style.backgroundColor).toBe(asRgb(provenanceColor("llm")));
  });

  it("renders a root-only tree with both inspire buttons", async () => {
    const doc = treeDoc(node("0", "Root", 0, "root"));
    stubFetch([["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)]]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    expect(chips(app)).toHaveLength(1);
    expect(nodeRow(app, "0").querySelector(".inspire-llm")).toBeTruthy();
    expect(nodeRow(app, "0").querySelector(".inspire-appstore")).toBeTruthy();
  });

  it("creates zero nodes without a matching API response", async () => {
    const doc = llmTree(3);
    const stub = stubFetch([
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    // one GET to load; every rendered node appears in that response
    expect(stub.calls).toHaveLength(1);
    expect(chips(app)).toHaveLength(4); // root + 3 children, nothing invented
  });

  it("omits inspire buttons at maximum depth", async () => {
    const leaf = node("0.1.1", "Leaf", 2, "llm");
    const mid = node("0.1", "Mid", 1, "llm", [leaf]);
    const doc = treeDoc(node("0", "Root", 0, "root", [mid]));
    stubFetch([["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)]]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    expect(nodeRow(app, "0.1").querySelector(".inspire-llm")).toBeTruthy();
    expect(nodeRow(app, "0.1.1").querySelector(".inspire-llm")).toBeNull();
  });
});

describe("inspire actions", () => {
  it("issues exactly one request per click and renders the children", async () => {
    const doc = treeDoc(node("0", "Root", 0, "root"));
    const updated = inspiredDoc(doc, "0", "appstore", ["G1", "G2", "G3"]);
    const stub = stubFetch([
      ["POST", "/inspire", () => jsonResponse(updated)],
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    (nodeRow(app, "0").querySelector(".inspire-appstore") as HTMLElement).click();
    await vi.waitFor(() =>
      expect(app.root.querySelectorAll(".chip.provenance-appstore")).toHaveLength(3),
    );

    const inspireCalls = stub.calls.filter((c) => c.url.includes("/inspire"));
    expect(inspireCalls).toHaveLength(1);
    expect(inspireCalls[0].url).toContain("source=appstore");
    for (const chip of app.root.querySelectorAll<HTMLElement>(
      ".chip.provenance-appstore",
    )) {
      expect(chip.style.backgroundColor).toBe(asRgb(provenanceColor("appstore")));
    }
  });

  it("sends the feedback text with the request body", async () => {
    const doc = llmTree(1);
    const updated = inspiredDoc(doc, "0.1", "llm", ["R1"]);
    const stub = stubFetch([
      ["POST", "/inspire", () => jsonResponse(updated)],
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    (chips(app)[1] as HTMLElement).click(); // select node 0.1
    const feedback = app.root.querySelector(".feedback") as HTMLTextAreaElement;
    feedback.value = "This sub-feature is not relevant because it is off-scope";
    (nodeRow(app, "0.1").querySelector(".inspire-llm") as HTMLElement).click();
    // exactly one request, and the returned child renders purple
    await vi.waitFor(() =>
      expect(app.root.querySelectorAll("[data-node-id='0\\.1\\.1']")).toHaveLength(1),
    );
    const child = app.root.querySelector(
      "[data-node-id='0\\.1\\.1'] .chip",
    ) as HTMLElement;
    expect(child.classList.contains("provenance-llm")).toBe(true);
    expect(child.style.backgroundColor).toBe(asRgb(provenanceColor("llm")));

    const inspireCalls = stub.calls.filter((c) => c.url.includes("/inspire"));
    expect(inspireCalls).toHaveLength(1);
    const body = JSON.parse(String(inspireCalls[0].init?.body));
    expect(body.feedback).toBe(
      "This sub-feature is not relevant because it is off-scope",
    );
    expect(body.if_version).toBe(doc.version);
  });

  it("suppresses a second click while a request is pending", async () => {
    const doc = treeDoc(node("0", "Root", 0, "root"));
    const updated = inspiredDoc(doc, "0", "llm", ["A"]);
    let release: (value: Response) => void = () => {};
    const gate = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const stub = stubFetch([
      ["POST", "/inspire", () => gate],
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const button = nodeRow(app, "0").querySelector(".inspire-llm") as HTMLButtonElement;
    button.click();
    button.click(); // still pending: must not fire again
    void app.inspire("0", "llm"); // neither may a programmatic retrigger
    release(jsonResponse(updated));
    await vi.waitFor(() =>
      expect(app.root.querySelectorAll(".chip.provenance-llm")).toHaveLength(1),
    );

    expect(stub.calls.filter((c) => c.url.includes("/inspire"))).toHaveLength(1);
  });

  it("asks replace-or-append when the node already has children", async () => {
    const doc = llmTree(2);
    const updated = inspiredDoc(doc, "0", "llm", ["N1", "N2"]);
    const stub = stubFetch([
      ["POST", "/inspire", () => jsonResponse(updated)],
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const chooseMode = vi.fn(() => "append" as const);
    const app = makeApp({ chooseMode });
    await app.loadTree(doc.tree_id);

    (nodeRow(app, "0").querySelector(".inspire-llm") as HTMLElement).click();
    await vi.waitFor(() =>
      expect(stub.calls.some((c) => c.url.includes("/inspire"))).toBe(true),
    );

    expect(chooseMode).toHaveBeenCalledOnce();
    const call = stub.calls.find((c) => c.url.includes("/inspire"))!;
    expect(JSON.parse(String(call.init?.body)).mode).toBe("append");
  });

  it("suggests the direct route when grounded retrieval finds nothing", async () => {
    const doc = treeDoc(node("0", "Root", 0, "root"));
    stubFetch([
      [
        "POST",
        "/inspire",
        () =>
          jsonResponse(
            {
              code: "empty_retrieval",
              message: "the vector index has not been built yet",
              correlation_id: "x",
            },
            422,
          ),
      ],
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    (nodeRow(app, "0").querySelector(".inspire-appstore") as HTMLElement).click();
    await vi.waitFor(() =>
      expect(app.root.querySelector(".node-message")).toBeTruthy(),
    );
    expect(app.root.querySelector(".node-message")!.textContent).toContain(
      "Inspire from LLM",
    );
  });

  it("reloads the tree after a version conflict", async () => {
    const doc = llmTree(1);
    const fresh = { ...llmTree(1), tree_id: doc.tree_id, version: 7 };
    let gets = 0;
    const stub = stubFetch([
      [
        "POST",
        "/inspire",
        () =>
          jsonResponse(
            { code: "conflict", message: "stale", correlation_id: "x" },
            409,
          ),
      ],
      [
        "GET",
        `/v1/trees/${doc.tree_id}`,
        () => jsonResponse(gets++ === 0 ? doc : fresh),
      ],
    ]);
    const onConflict = vi.fn();
    const app = makeApp({ onConflict });
    await app.loadTree(doc.tree_id);

    (nodeRow(app, "0").querySelector(".inspire-llm") as HTMLElement).click();
    await vi.waitFor(() => expect(onConflict).toHaveBeenCalledOnce());
    await vi.waitFor(() => expect(app.vm!.doc.version).toBe(7));
    expect(stub.calls.filter((c) => (c.init?.method ?? "GET") === "GET")).toHaveLength(2);
  });
});

describe("traceability panel", () => {
  it("opens the source description with matches highlighted", async () => {
    const doc = mixedTree();
    stubFetch([
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
      [
        "GET",
        "/v1/apps/com.source",
        () =>
          jsonResponse({
            app_id: "com.source",
            title: "Source App",
            description:
              "A grounded idea lives here; the grounded description mentions it twice.",
            category: "TOOLS",
          }),
      ],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const trace = nodeRow(app, "0.2").querySelector(".trace-btn") as HTMLButtonElement;
    expect(trace.disabled).toBe(false);
    trace.click();
    await vi.waitFor(() =>
      expect(app.root.querySelector(".trace-panel mark")).toBeTruthy(),
    );
    const marks = [...app.root.querySelectorAll(".trace-panel mark")].map(
      (m) => m.textContent?.toLowerCase(),
    );
    expect(marks).toContain("grounded");
  });

  it("disables the panel action for direct-route nodes", async () => {
    const doc = mixedTree();
    const stub = stubFetch([
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const trace = nodeRow(app, "0.1").querySelector(".trace-btn") as HTMLButtonElement;
    expect(trace.disabled).toBe(true);
    await app.showTrace("0.1"); // even called directly it must not fetch
    expect(stub.calls.filter((c) => c.url.includes("/v1/apps/"))).toHaveLength(0);
  });

  it("marks a delisted source as unavailable", async () => {
    const doc = mixedTree();
    stubFetch([
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
      [
        "GET",
        "/v1/apps/com.source",
        () =>
          jsonResponse(
            { code: "not_found", message: "gone", correlation_id: "x" },
            404,
          ),
      ],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    (nodeRow(app, "0.2").querySelector(".trace-btn") as HTMLElement).click();
    await vi.waitFor(() =>
      expect(app.root.querySelector(".badge-unavailable")).toBeTruthy(),
    );
    expect(app.root.querySelector(".badge-unavailable")!.textContent).toBe(
      "source unavailable",
    );
  });
});

describe("editing and export", () => {
  it("patches the node and reconciles with the server document", async () => {
    const doc = llmTree(1);
    const patched = JSON.parse(JSON.stringify(doc));
    patched.root.children[0]["sub-feature"] = "Server Name";
    patched.version = 1;
    const stub = stubFetch([
      ["GET", `/v1/trees/${doc.tree_id}`, () => jsonResponse(doc)],
      ["PATCH", "/nodes/0.1", () => jsonResponse(patched)],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    (chips(app)[1] as HTMLElement).click();
    const name = app.root.querySelector(".edit-name") as HTMLInputElement;
    name.value = "Client Name";
    (app.root.querySelector(".save-btn") as HTMLElement).click();
    await vi.waitFor(() => expect(app.vm!.doc.version).toBe(1));

    const call = stub.calls.find((c) => c.init?.method === "PATCH")!;
    expect(JSON.parse(String(call.init?.body)).name).toBe("Client Name");
    expect(chips(app)[1].textContent).toBe("Server Name"); // server wins
  });

  it("exports the byte-exact GET body", async () => {
    const doc = llmTree(2);
    const exact = `${JSON.stringify(doc, null, 2)}\n`;
    stubFetch([["GET", `/v1/trees/${doc.tree_id}`, () => textResponse(exact)]]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);

    const exported = await app.exportTree();
    expect(exported).toBe(exact);
    expect(app.lastExport).toBe(exact);
  });

  it("keeps the stale tree read-only when the API is unreachable", async () => {
    const doc = llmTree(2);
    let healthy = true;
    stubFetch([
      [
        "GET",
        `/v1/trees/${doc.tree_id}`,
        () => {
          if (!healthy) throw new TypeError("network down");
          return jsonResponse(doc);
        },
      ],
      [
        "POST",
        "/inspire",
        () => {
          throw new TypeError("network down");
        },
      ],
    ]);
    const app = makeApp();
    await app.loadTree(doc.tree_id);
    healthy = false;

    await app.inspire("0.1", "llm");
    expect(app.vm!.readOnly).toBe(true);
    expect(app.root.querySelector(".banner")!.classList.contains("hidden")).toBe(false);
    expect(chips(app)).toHaveLength(3); // stale tree still visible
    const button = nodeRow(app, "0.1").querySelector(
      ".inspire-llm",
    ) as HTMLButtonElement;
    expect(button.disabled).toBe(true);
  });
});
