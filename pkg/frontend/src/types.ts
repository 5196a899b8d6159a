// Payload shapes of the HTTP API, field for field.

export interface RetrievedHit {
  chunk_id: string;
  doc_id: string;
  citation_key: string;
  score: number;
  text: string;
}

export interface RetrievedContext {
  hits: RetrievedHit[];
  total_token_estimate: number;
}

export interface CitationReport {
  detected: string[];
  grounded: string[];
  ungrounded: string[];
}

export interface ChatTurnData {
  user_query: string;
  standalone_question: string;
  retrieved: RetrievedContext;
  answer: string;
  citation_report: CitationReport;
}

export interface TranscriptData {
  session_id: string;
  turns: ChatTurnData[];
}

export interface DocumentInfo {
  doc_id: string;
  citation_key: string;
  title: string;
  source_kind: string;
}

export interface HealthData {
  status: string;
  mock_mode: boolean;
}

export interface DistillationReportData {
  original_doc_id: string;
  distilled_doc_id: string;
  per_paragraph_ratios: number[];
  overall_ratio: number;
  structure_preserved: boolean;
  accepted: boolean;
  citations_before: number;
  citations_after: number;
}
