import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export interface Recorded<T> {
  status: number;
  body: T;
}

export function fixture<T = any>(name: string): Recorded<T> {
  const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf-8");
  return JSON.parse(raw) as Recorded<T>;
}

/** fetch stub that serves recorded responses keyed by `METHOD path`. */
export function stubFetch(routes: Record<string, Recorded<unknown>>): void {
  globalThis.fetch = (async (input: any, init?: any) => {
    const url = typeof input === "string" ? input : input.url;
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    const recorded = routes[key];
    if (!recorded) {
      throw new Error(`no recorded response for ${key}`);
    }
    return {
      ok: recorded.status < 400,
      status: recorded.status,
      json: async () => recorded.body,
    } as Response;
  }) as typeof fetch;
}
