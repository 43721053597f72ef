export type Status = "raw" | "annotated" | "crosschecked" | "rejected";

export interface ApEntry {
  index: number;
  span: string;
  name: string;
  start: number;
  end: number;
}

export interface HistoryEntry {
  nl: string;
  annotator: string | null;
  timestamp: string;
}

/** Record as served by the annotation API; STL strings are verbatim. */
export interface ApiRecord {
  id: string;
  domain: string;
  lifted_nl: string;
  lifted_stl: Record<string, string>;
  ap_map: ApEntry[] | null;
  provenance: string;
  status: Status;
  annotator: string | null;
  reviewer: string | null;
  version: number;
  created_at: string;
  updated_at: string;
  history: HistoryEntry[];
  metadata: Record<string, unknown>;
}

export interface ApiStats {
  records: number;
  by_status: Record<string, number>;
  corpus: unknown;
}

export interface ApiError {
  error: string;
  message: string;
}
