/** Conduct panel: enter observed per-arm counts for a persisted trial and
 * apply the interim/final decision rules through the service.
 *
 * Decisions, observed differences, and boundaries all come back from the
 * service; the panel renders them and nothing else. */

import { ApiClient, ApiError } from "./api.js";
import { fmtBoundary, fmtCount } from "./format.js";
import type { DecisionBody, StageCounts, TrialDocument } from "./types.js";


function addRow(table: HTMLTableElement): HTMLTableRowElement {
  const tr = document.createElement("tr");
  table.appendChild(tr);
  return tr;
}

function addCell(tr: HTMLTableRowElement, text: string): HTMLTableCellElement {
  const td = document.createElement("td");
  td.textContent = text;
  tr.appendChild(td);
  return td;
}

export function decisionLabel(decision: DecisionBody): string {
  switch (decision.kind) {
    case "SelectHigh":
      return "Select high dose (early stop)";
    case "SelectLow":
      return "Select low dose";
    default:
      return "Continue to stage 2";
  }
}

export function renderDecision(container: HTMLElement, decision: DecisionBody): void {
  container.textContent = "";
  const headline = document.createElement("div");
  headline.className = `decision ${decision.kind}`;
  headline.textContent = decisionLabel(decision);
  container.appendChild(headline);

  const detail = document.createElement("div");
  detail.className = "decision-detail";
  const diff = document.createElement("span");
  diff.dataset.field = "observed_diff";
  diff.textContent = String(decision.observed_diff);
  const bound = document.createElement("span");
  bound.dataset.field = "boundary";
  bound.textContent = String(decision.boundary);
  detail.append("observed difference ", diff, " vs boundary ", bound);
  container.appendChild(detail);

  // visual: two markers on a shared scale (placement only; labels verbatim)
  const gauge = document.createElement("div");
  gauge.className = "gauge";
  const span = Math.max(Math.abs(decision.observed_diff), Math.abs(decision.boundary), 0.01) * 1.4;
  for (const [cls, value] of [["marker-boundary", decision.boundary],
                              ["marker-observed", decision.observed_diff]] as const) {
    const marker = document.createElement("div");
    marker.className = `marker ${cls}`;
    marker.style.left = `${50 + (value / span) * 50}%`;
    marker.title = String(value);
    gauge.appendChild(marker);
  }
  container.appendChild(gauge);
}

export function renderCounts(container: HTMLElement, trial: TrialDocument): void {
  container.textContent = "";
  const status = document.createElement("div");
  status.className = `trial-status ${trial.status}`;
  status.textContent = `trial ${trial.trial_id}: ${trial.status} (v${trial.version})`;
  container.appendChild(status);
  const table = document.createElement("table");
  table.className = "counts-table";
  const head = addRow(table);
  for (const h of ["stage", "arm", "enrolled", "responses"]) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  const addStage = (label: string, counts: StageCounts | null) => {
    if (!counts) return;
    for (const arm of ["low", "high"] as const) {
      const tr = addRow(table);
      addCell(tr, label);
      addCell(tr, arm);
      addCell(tr, fmtCount(counts[arm].enrolled));
      addCell(tr, fmtCount(counts[arm].responses));
    }
  };
  addStage("1", trial.stage1);
  addStage("2", trial.stage2);
  container.appendChild(table);
  const plan = document.createElement("div");
  plan.className = "plan";
  plan.textContent =
    trial.design.stage === "Two"
      ? `plan: stage 1 ${fmtCount(trial.design.n1_low)} / ${fmtCount(trial.design.n1_high)}, ` +
        `total ${fmtCount(trial.design.n_low)} / ${fmtCount(trial.design.n_high)}, ` +
        `boundaries ${fmtBoundary(trial.design.lambda1)} then ${fmtBoundary(trial.design.lambda)}`
      : `plan: ${fmtCount(trial.design.n_low)} / ${fmtCount(trial.design.n_high)} per arm, ` +
        `boundary ${fmtBoundary(trial.design.lambda)}`;
  container.appendChild(plan);
}

export function renderLog(container: HTMLElement, trial: TrialDocument): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = "decision log";
  container.appendChild(heading);
  const list = document.createElement("ol");
  list.className = "decision-log";
  for (const entry of trial.decision_log) {
    const li = document.createElement("li");
    const when = document.createElement("time");
    when.textContent = entry.timestamp;
    li.append(when, ` ${decisionLabel(entry.decision)} `);
    const nums = document.createElement("span");
    nums.textContent = `(diff ${entry.decision.observed_diff} vs ${entry.decision.boundary})`;
    li.appendChild(nums);
    list.appendChild(li);
  }
  container.appendChild(list);
}

export function renderConflict(container: HTMLElement, message: string): void {
  const banner = document.createElement("div");
  banner.className = "banner conflict";
  banner.textContent = `Update conflict: ${message} - reload the trial and retry.`;
  container.prepend(banner);
}

export class ConductView {
  private trial: TrialDocument | null = null;

  constructor(private root: HTMLElement, private api: ApiClient) {}

  mount(): void {
    this.root.innerHTML = `
      <section class="banners"></section>
      <form class="load-form">
        <input name="trial_id" placeholder="trial id" required>
        <button type="submit">load</button>
      </form>
      <section class="counts"></section>
      <form class="record-form">
        <select name="stage"><option value="1">stage 1</option><option value="2">stage 2</option></select>
        <select name="arm"><option value="low">low</option><option value="high">high</option></select>
        <input name="enrolled" type="number" min="0" value="0"> enrolled
        <input name="responses" type="number" min="0" value="0"> responses
        <button type="submit">record</button>
      </form>
      <section class="decision-controls">
        <button id="decide-interim">interim analysis</button>
        <button id="decide-final">final analysis</button>
      </section>
      <section class="decision-output"></section>
      <section class="log"></section>
    `;
    this.root.querySelector(".load-form")!.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const id = (this.root.querySelector("[name=trial_id]") as HTMLInputElement).value;
      void this.load(id);
    });
    this.root.querySelector(".record-form")!.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.record();
    });
    this.root.querySelector("#decide-interim")!.addEventListener("click", () => void this.decide("interim"));
    this.root.querySelector("#decide-final")!.addEventListener("click", () => void this.decide("final"));
  }

  show(trial: TrialDocument): void {
    this.trial = trial;
    renderCounts(this.root.querySelector(".counts") as HTMLElement, trial);
    renderLog(this.root.querySelector(".log") as HTMLElement, trial);
  }

  async load(trialId: string): Promise<void> {
    try {
      const env = await this.api.getTrial(trialId);
      (this.root.querySelector(".banners") as HTMLElement).textContent = "";
      this.show(env.result);
    } catch (err) {
      this.banner(err);
    }
  }

  async record(): Promise<void> {
    if (!this.trial) return;
    const val = (name: string) =>
      (this.root.querySelector(`.record-form [name=${name}]`) as HTMLInputElement).value;
    try {
      const env = await this.api.recordResponses(this.trial.trial_id, {
        stage: Number(val("stage")),
        arm: val("arm") as "low" | "high",
        enrolled_delta: Number(val("enrolled")),
        responses_delta: Number(val("responses")),
        version: this.trial.version,
      });
      this.show(env.result);
    } catch (err) {
      this.banner(err);
    }
  }

  async decide(analysis: "interim" | "final"): Promise<void> {
    if (!this.trial) return;
    try {
      const env = await this.api.decide(this.trial.trial_id, analysis);
      renderDecision(this.root.querySelector(".decision-output") as HTMLElement,
                     env.result.decision);
      this.show(env.result.trial);
    } catch (err) {
      this.banner(err);
    }
  }

  private banner(err: unknown): void {
    const target = this.root.querySelector(".banners") as HTMLElement;
    if (err instanceof ApiError && err.problem.status === 409) {
      renderConflict(target, err.problem.detail);
    } else if (err instanceof ApiError) {
      const div = document.createElement("div");
      div.className = "banner error";
      div.textContent = `${err.problem.title}: ${err.problem.detail}`;
      target.prepend(div);
    } else {
      const div = document.createElement("div");
      div.className = "banner error";
      div.textContent = String(err);
      target.prepend(div);
    }
  }
}
