/** Typed fetch client for the dosepick service. */

import type {
  DecisionResult,
  DesignResult,
  Envelope,
  GoalInputs,
  OcResult,
  ProblemDocument,
  TrialDocument,
} from "./types.js";

export class ApiError extends Error {
  constructor(public problem: ProblemDocument) {
    super(`${problem.title}: ${problem.detail}`);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async call<T>(path: string, init?: RequestInit): Promise<Envelope<T>> {
    const res = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await res.json();
    if (!res.ok) {
      throw new ApiError(body as ProblemDocument);
    }
    return body as Envelope<T>;
  }

  design(goal: GoalInputs): Promise<Envelope<DesignResult>> {
    return this.call("/v1/design", { method: "POST", body: JSON.stringify(goal) });
  }

  ocExact(goal: GoalInputs, pLow: number, pHigh: number): Promise<Envelope<OcResult>> {
    return this.call("/v1/oc/exact", {
      method: "POST",
      body: JSON.stringify({ design: goal, p_low: pLow, p_high: pHigh }),
    });
  }

  createTrial(trialId: string, goal: GoalInputs): Promise<Envelope<TrialDocument>> {
    return this.call("/v1/trials", {
      method: "POST",
      body: JSON.stringify({ trial_id: trialId, design: goal }),
    });
  }

  getTrial(trialId: string): Promise<Envelope<TrialDocument>> {
    return this.call(`/v1/trials/${encodeURIComponent(trialId)}`);
  }

  recordResponses(
    trialId: string,
    update: { stage: number; arm: "low" | "high"; enrolled_delta: number; responses_delta: number; version?: number },
  ): Promise<Envelope<TrialDocument>> {
    return this.call(`/v1/trials/${encodeURIComponent(trialId)}/responses`, {
      method: "POST",
      body: JSON.stringify(update),
    });
  }

  decide(
    trialId: string,
    analysis: "interim" | "final",
    force = false,
  ): Promise<Envelope<DecisionResult>> {
    return this.call(`/v1/trials/${encodeURIComponent(trialId)}/decision`, {
      method: "POST",
      body: JSON.stringify({ analysis, force }),
    });
  }
}
