/** Calibration panel: iterate on goal parameters, see the resulting design
 * live, sweep the margin over a grid, and pin designs for comparison.
 *
 * Every displayed figure is taken from a service response; this module
 * renders and requests, nothing more. */

import { ApiClient, ApiError } from "./api.js";
import { renderChart, Series } from "./chart.js";
import { fmtBoundary, fmtCount, fmtEn, fmtProb } from "./format.js";
import { CalibrationSession, HistoryEntry, MAX_PINS } from "./session.js";
import type { DesignResult, ExactOC, GoalInputs } from "./types.js";


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

export interface SweepRow {
  delta: number;
  design: DesignResult;
  oc?: ExactOC;
}

const FIELDS: Array<{
  key: keyof GoalInputs & string;
  label: string;
  min: number;
  max: number;
  step: number;
  value: number;
}> = [
  { key: "p_high", label: "anticipated high-dose response rate", min: 0.05, max: 0.95, step: 0.05, value: 0.3 },
  { key: "delta", label: "margin", min: 0.05, max: 0.3, step: 0.01, value: 0.1 },
  { key: "alpha_low", label: "accuracy selecting low dose", min: 0.55, max: 0.95, step: 0.05, value: 0.6 },
  { key: "alpha_high", label: "accuracy selecting high dose", min: 0.55, max: 0.95, step: 0.05, value: 0.6 },
  { key: "ratio", label: "allocation ratio high:low", min: 0.5, max: 3, step: 0.5, value: 1 },
  { key: "omega", label: "interim information fraction", min: 0.2, max: 0.8, step: 0.1, value: 0.5 },
];

export function designSummaryTable(design: DesignResult): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "design-summary";
  const rows: Array<[string, string]> = [["method", design.method]];
  if (design.stage === "Two") {
    rows.push(
      ["interim boundary", fmtBoundary(design.lambda1)],
      ["stage-1 n (low / high)", `${fmtCount(design.n1_low)} / ${fmtCount(design.n1_high)}`],
    );
  }
  rows.push(
    ["final boundary", fmtBoundary(design.lambda)],
    ["n per arm (low / high)", `${fmtCount(design.n_low)} / ${fmtCount(design.n_high)}`],
    ["achieved PCS (low)", fmtProb(design.achieved_pcs_low)],
    ["achieved PCS (high)", fmtProb(design.achieved_pcs_high)],
  );
  for (const [k, v] of rows) {
    const tr = addRow(table);
    addCell(tr, k);
    addCell(tr, v).dataset.field = k;
  }
  return table;
}

export function renderDesignPanel(
  container: HTMLElement,
  design: DesignResult | null,
  problem?: { title: string; detail: string },
): void {
  container.textContent = "";
  if (problem) {
    const badge = document.createElement("div");
    badge.className = "badge infeasible";
    badge.textContent = `${problem.title}: ${problem.detail}`;
    container.appendChild(badge);
    return;
  }
  if (!design) return;
  container.appendChild(designSummaryTable(design));
}

export function renderSweep(container: HTMLElement, rows: SweepRow[]): void {
  container.textContent = "";
  if (rows.length === 0) return;
  const nSeries: Series = {
    label: "n per arm",
    color: "#2563eb",
    points: rows.map((r) => ({ x: r.delta, y: r.design.n_low })),
  };
  container.appendChild(renderChart("sample size vs margin", [nSeries]));
  const pcsSeries: Series[] = [
    {
      label: "PCS low",
      color: "#059669",
      points: rows
        .filter((r) => r.design.achieved_pcs_low !== null)
        .map((r) => ({ x: r.delta, y: r.design.achieved_pcs_low as number })),
    },
    {
      label: "PCS high",
      color: "#d97706",
      points: rows
        .filter((r) => r.design.achieved_pcs_high !== null)
        .map((r) => ({ x: r.delta, y: r.design.achieved_pcs_high as number })),
    },
  ];
  container.appendChild(renderChart("achieved PCS vs margin", pcsSeries));
  const table = document.createElement("table");
  table.className = "sweep-table";
  const head = addRow(table);
  for (const h of ["margin", "boundary", "n per arm", "PCS low", "PCS high", "PET", "EN"]) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = addRow(table);
    addCell(tr, String(r.delta));
    addCell(tr, fmtBoundary(r.design.lambda));
    addCell(tr, fmtCount(r.design.n_low));
    addCell(tr, fmtProb(r.oc ? r.oc.pcs_low : r.design.achieved_pcs_low));
    addCell(tr, fmtProb(r.oc ? r.oc.pcs_high : r.design.achieved_pcs_high));
    addCell(tr, r.oc ? fmtProb(r.oc.pet_high) : "-");
    addCell(tr, r.oc ? fmtEn(r.oc.en_low) : "-");
  }
  container.appendChild(table);
}

export function renderPins(container: HTMLElement, session: CalibrationSession,
                           onUnpin?: (index: number) => void): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `pinned designs (${session.pinned.length}/${MAX_PINS})`;
  container.appendChild(heading);
  if (session.pinned.length === 0) return;
  const table = document.createElement("table");
  table.className = "pin-table";
  const metrics: Array<[string, (e: HistoryEntry) => string]> = [
    ["method", (e) => e.design.method],
    ["stage", (e) => e.design.stage],
    ["interim boundary", (e) => fmtBoundary(e.design.lambda1)],
    ["final boundary", (e) => fmtBoundary(e.design.lambda)],
    ["n per arm", (e) => fmtCount(e.design.n_low)],
    ["PCS low", (e) => fmtProb(e.oc ? e.oc.pcs_low : e.design.achieved_pcs_low)],
    ["PCS high", (e) => fmtProb(e.oc ? e.oc.pcs_high : e.design.achieved_pcs_high)],
  ];
  const head = addRow(table);
  head.appendChild(document.createElement("th"));
  session.pinned.forEach((_, i) => {
    const th = document.createElement("th");
    const btn = document.createElement("button");
    btn.textContent = `unpin #${i + 1}`;
    btn.addEventListener("click", () => onUnpin?.(i));
    th.appendChild(btn);
    head.appendChild(th);
  });
  for (const [label, get] of metrics) {
    const tr = addRow(table);
    addCell(tr, label);
    for (const entry of session.pinned) {
      addCell(tr, get(entry));
    }
  }
  container.appendChild(table);
}

export class CalibrationView {
  readonly session = new CalibrationSession();
  private current: HistoryEntry | null = null;

  constructor(private root: HTMLElement, private api: ApiClient) {}

  mount(): void {
    this.root.innerHTML = `
      <section class="goal-inputs"></section>
      <section class="design-output"></section>
      <section class="pin-controls">
        <button id="pin-design">pin current design</button>
        <label><input type="checkbox" id="two-stage-toggle" checked> interim look</label>
        <select id="method-select">
          <option value="normal">normal approximation</option>
          <option value="exact">exact binomial</option>
          <option value="exact-global-min">exact, global minimum</option>
        </select>
      </section>
      <section class="pins"></section>
      <section class="sweep"></section>
    `;
    const inputs = this.root.querySelector(".goal-inputs") as HTMLElement;
    for (const f of FIELDS) {
      const wrap = document.createElement("label");
      wrap.className = "slider";
      const value = document.createElement("output");
      value.textContent = String(f.value);
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = String(f.min);
      slider.max = String(f.max);
      slider.step = String(f.step);
      slider.value = String(f.value);
      slider.dataset.goalField = f.key;
      slider.addEventListener("input", () => {
        value.textContent = slider.value;
        void this.refresh();
      });
      wrap.append(`${f.label}: `, value, slider);
      inputs.appendChild(wrap);
    }
    this.root.querySelector("#pin-design")!.addEventListener("click", () => {
      if (this.current) {
        this.session.pin(this.current);
        this.renderPinned();
      }
    });
    this.root.querySelector("#two-stage-toggle")!.addEventListener("change", () => void this.refresh());
    this.root.querySelector("#method-select")!.addEventListener("change", () => void this.refresh());
    void this.refresh();
  }

  goalFromInputs(): GoalInputs {
    const read = (key: string) =>
      Number((this.root.querySelector(`[data-goal-field="${key}"]`) as HTMLInputElement).value);
    const twoStage = (this.root.querySelector("#two-stage-toggle") as HTMLInputElement).checked;
    const method = (this.root.querySelector("#method-select") as HTMLSelectElement).value;
    const goal: GoalInputs = {
      p_high: read("p_high"),
      delta: read("delta"),
      alpha_low: read("alpha_low"),
      alpha_high: read("alpha_high"),
      ratio: read("ratio"),
      method,
    };
    if (twoStage) goal.omega = read("omega");
    return goal;
  }

  async refresh(): Promise<void> {
    const out = this.root.querySelector(".design-output") as HTMLElement;
    const goal = this.goalFromInputs();
    try {
      const env = await this.api.design(goal);
      this.current = { request: goal, design: env.result };
      this.session.record(this.current);
      renderDesignPanel(out, env.result);
      void this.refreshSweep(goal);
    } catch (err) {
      this.current = null;
      if (err instanceof ApiError) {
        renderDesignPanel(out, null, err.problem);
      } else {
        renderDesignPanel(out, null, { title: "Request failed", detail: String(err) });
      }
    }
  }

  async refreshSweep(goal: GoalInputs): Promise<void> {
    const sweepEl = this.root.querySelector(".sweep") as HTMLElement;
    const grid = [0.05, 0.1, 0.15].filter((d) => d < goal.p_high);
    const rows: SweepRow[] = [];
    for (const delta of grid) {
      try {
        const env = await this.api.design({ ...goal, delta });
        let oc: ExactOC | undefined;
        if ((goal.ratio ?? 1) === 1) {
          const ocEnv = await this.api.ocExact(
            { ...goal, delta }, goal.p_high - delta, goal.p_high);
          oc = ocEnv.result.oc;
        }
        rows.push({ delta, design: env.result, oc });
      } catch {
        // infeasible sweep points are simply omitted from the chart
      }
    }
    renderSweep(sweepEl, rows);
  }

  renderPinned(): void {
    const el = this.root.querySelector(".pins") as HTMLElement;
    renderPins(el, this.session, (i) => {
      this.session.unpin(i);
      this.renderPinned();
    });
  }
}
