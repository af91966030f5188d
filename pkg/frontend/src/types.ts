export type Provenance = "root" | "llm" | "appstore";

export interface TreeNode {
  node_id: string;
  "sub-feature": string;
  description: string;
  "source-app-id"?: string;
  level: number;
  provenance: Provenance;
  error?: string;
  children: TreeNode[];
}

export interface TreeDoc {
  format_version: string;
  tree_id: string;
  approach: string;
  config: { k: number; n: number; depth: number };
  created_at: string;
  transcript_refs: string[];
  root: TreeNode;
  version: number;
}

export interface TreeSummary {
  tree_id: string;
  name: string;
  approach: string;
  version: number;
}

export interface AppRecord {
  app_id: string;
  title: string;
  description: string;
  category: string;
  language?: string;
}

export interface ApiErrorBody {
  code:
    | "not_found"
    | "validation"
    | "provider_failure"
    | "empty_retrieval"
    | "conflict";
  message: string;
  correlation_id: string;
}

export type InspireSource = "llm" | "appstore";
export type InspireMode = "replace" | "append";

export interface InspireRequest {
  feedback?: string;
  mode?: InspireMode;
  n?: number;
  if_version?: number;
}
