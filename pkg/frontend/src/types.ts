export interface ContextItem {
  text: string;
  cosine_score: number | null;
}

export interface AskResponse {
  answer: string;
  provenance: string;
  generated_query: string | null;
  contexts: ContextItem[];
  diagnostics: string[];
  timing: { total_ms: number };
}

export interface HealthResponse {
  status: string;
  store_loaded: boolean;
  embedder_kind: string;
  llm_kind: string;
}

export interface StatsResponse {
  total_nodes: number;
  total_relationships: number;
  unique_path_count: number;
}
