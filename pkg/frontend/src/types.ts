/** Wire shapes returned by the /v1 API, field for field. */

export type SessionStatus = "Drafting" | "AwaitingFeedback" | "Approved" | "Analyzed";

export interface PointView {
  x: number;
  y: number;
}

export interface AllocationView {
  unit_id: number;
  unit_type: string;
  alliance: string;
  position: PointView;
  command: string;
}

export interface CoaView {
  coa_id: string;
  name: string;
  overview: string;
  task_allocation: AllocationView[];
  warnings: string[];
}

export interface HistoryEntryView {
  feedback: string | null;
  coas: CoaView[];
}

export interface MissionView {
  objective_text: string;
  terrain_text: string;
  has_image: boolean;
}

export interface SummaryView {
  metric: string;
  mean: number;
  std: number;
  n: number;
}

export interface RowView {
  coa_id: string;
  seed: number | null;
  total_reward: number;
  friendly_casualties: number;
  threat_casualties: number;
  objective_seized: boolean;
}

export interface ReportView {
  variant: string;
  note: string;
  base_seed: number | null;
  config_digest: string | null;
  pooled: SummaryView[];
  per_coa: Record<string, SummaryView[]>;
  rows: RowView[];
}

export interface SessionView {
  session_id: string;
  status: SessionStatus;
  mission: MissionView;
  model: Record<string, unknown>;
  history: HistoryEntryView[];
  approved_coa_id: string | null;
  report: ReportView | null;
}

export interface ModelSpecBody {
  backend: string;
  model_id: string;
  temperature?: number;
  max_output_tokens?: number;
  supports_images?: boolean;
  fixture_path?: string | null;
  record_path?: string | null;
}

export interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    detail: unknown;
  };
}
