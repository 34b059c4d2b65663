/** JSON contract with the dosepick service (/v1). Mirrors the server's
 * serialization; the UI performs no statistical computation of its own. */

export interface GoalInputs {
  p_high: number;
  delta: number;
  alpha_low: number;
  alpha_high: number;
  ratio?: number;
  omega?: number | null;
  method?: string;
  stage?: string;
}

export interface DesignResult {
  stage: "One" | "Two";
  method: string;
  lambda: number;
  n_low: number;
  n_high: number;
  lambda1?: number;
  n1_low?: number;
  n1_high?: number;
  omega?: number;
  achieved_pcs_low: number | null;
  achieved_pcs_high: number | null;
  lambda_interval?: [number, number];
  goal: GoalInputs;
}

export interface Envelope<T> {
  kind: string;
  engine_version: string;
  inputs: Record<string, unknown>;
  result: T;
}

export interface ProblemDocument {
  type: string;
  title: string;
  status: number;
  detail: string;
}

export interface ExactOC {
  pcs_low: number;
  pcs_high: number;
  pet_low: number;
  pet_high: number;
  en_low: number;
  en_high: number;
}

export interface OcResult {
  design: DesignResult;
  oc: ExactOC;
}

export interface DecisionBody {
  kind: "SelectLow" | "SelectHigh" | "ContinueToStageTwo";
  observed_diff: number;
  boundary: number;
}

export interface ArmCounts {
  enrolled: number;
  responses: number;
}

export interface StageCounts {
  low: ArmCounts;
  high: ArmCounts;
}

export interface TrialDocument {
  schema: string;
  trial_id: string;
  version: number;
  status: "Enrolling" | "InterimDone" | "Closed";
  design: DesignResult;
  stage1: StageCounts;
  stage2: StageCounts | null;
  decision_log: Array<{
    timestamp: string;
    decision: DecisionBody;
    inputs: Record<string, unknown>;
  }>;
}

export interface DecisionResult {
  decision: DecisionBody;
  trial: TrialDocument;
}
