import type {
  ApiErrorBody,
  AppRecord,
  InspireRequest,
  InspireSource,
  TreeDoc,
  TreeSummary,
} from "./types";

export class ApiError extends Error {
  readonly body: ApiErrorBody;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.body = body;
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = {
      code: "validation",
      message: `HTTP ${response.status}`,
      correlation_id: "-",
    };
  }
  throw new ApiError(response.status, body);
}

/** Thin typed client for the /v1 HTTP API; the UI's only data source. */
export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  listTrees(): Promise<{ trees: TreeSummary[] }> {
    return this.request("/v1/trees");
  }

  createTree(name: string, description: string): Promise<TreeDoc> {
    return this.request("/v1/trees", {
      method: "POST",
      body: JSON.stringify({ name, description }),
    });
  }

  getTree(treeId: string): Promise<TreeDoc> {
    return this.request(`/v1/trees/${encodeURIComponent(treeId)}`);
  }

  /** Raw body of GET /v1/trees/{id}; exports must stay byte-equal to it. */
  async getTreeText(treeId: string): Promise<string> {
    const response = await fetch(
      `${this.baseUrl}/v1/trees/${encodeURIComponent(treeId)}`,
    );
    if (!response.ok) {
      await parseError(response);
    }
    return response.text();
  }

  inspire(
    treeId: string,
    nodeId: string,
    source: InspireSource,
    body: InspireRequest,
  ): Promise<TreeDoc> {
    const path =
      `/v1/trees/${encodeURIComponent(treeId)}/nodes/` +
      `${encodeURIComponent(nodeId)}/inspire?source=${source}`;
    return this.request(path, { method: "POST", body: JSON.stringify(body) });
  }

  patchNode(
    treeId: string,
    nodeId: string,
    patch: { name?: string; description?: string; if_version?: number },
  ): Promise<TreeDoc> {
    const path =
      `/v1/trees/${encodeURIComponent(treeId)}/nodes/` +
      encodeURIComponent(nodeId);
    return this.request(path, { method: "PATCH", body: JSON.stringify(patch) });
  }

  deleteNode(
    treeId: string,
    nodeId: string,
    ifVersion?: number,
  ): Promise<TreeDoc> {
    const suffix = ifVersion === undefined ? "" : `?if_version=${ifVersion}`;
    const path =
      `/v1/trees/${encodeURIComponent(treeId)}/nodes/` +
      encodeURIComponent(nodeId) +
      suffix;
    return this.request(path, { method: "DELETE" });
  }

  getApp(appId: string): Promise<AppRecord> {
    return this.request(`/v1/apps/${encodeURIComponent(appId)}`);
  }
}
