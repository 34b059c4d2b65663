/** Display formatting only. Values shown to the user round-trip from
 * service responses; nothing here derives a new statistical quantity. */

export function fmtBoundary(x: number | undefined | null): string {
  if (x === undefined || x === null) return "-";
  return x.toFixed(3);
}

export function fmtProb(x: number | undefined | null): string {
  if (x === undefined || x === null) return "-";
  return x.toFixed(4);
}

export function fmtCount(x: number | undefined | null): string {
  if (x === undefined || x === null) return "-";
  return String(x);
}

export function fmtEn(x: number | undefined | null): string {
  if (x === undefined || x === null) return "-";
  return x.toFixed(1);
}
