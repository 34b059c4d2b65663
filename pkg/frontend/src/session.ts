/** In-memory calibration session: an append-only history of explored
 * designs and up to four pinned ones for side-by-side comparison. */

import type { DesignResult, ExactOC, GoalInputs } from "./types.js";

export interface HistoryEntry {
  request: GoalInputs;
  design: DesignResult;
  oc?: ExactOC;
}

export const MAX_PINS = 4;

export class CalibrationSession {
  private _history: HistoryEntry[] = [];
  private _pinned: HistoryEntry[] = [];

  get history(): readonly HistoryEntry[] {
    return this._history;
  }

  get pinned(): readonly HistoryEntry[] {
    return this._pinned;
  }

  record(entry: HistoryEntry): void {
    this._history.push(entry);
  }

  pin(entry: HistoryEntry): boolean {
    if (this._pinned.length >= MAX_PINS) return false;
    this._pinned.push(entry);
    return true;
  }

  unpin(index: number): void {
    this._pinned.splice(index, 1);
  }
}
