import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { vi } from "vitest";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture(name: string): string {
  return readFileSync(join(here, "fixtures", name), "utf-8");
}

export function fixtureJson(name: string): any {
  return JSON.parse(fixture(name));
}

export interface MockRoute {
  match: (path: string, body: any) => boolean;
  respond: (path: string, body: any) => { status?: number; json?: unknown; text?: string };
}

/** Installs a fetch mock; returns the call log [path, parsed body]. */
export function mockFetch(routes: MockRoute[]): Array<[string, any]> {
  const calls: Array<[string, any]> = [];
  globalThis.fetch = vi.fn(async (input: any, init?: any) => {
    const path = String(input);
    const body = init?.body ? JSON.parse(init.body) : null;
    calls.push([path, body]);
    for (const route of routes) {
      if (!route.match(path, body)) continue;
      const result = route.respond(path, body);
      const status = result.status ?? 200;
      const payload = result.text ?? JSON.stringify(result.json ?? {});
      return {
        ok: status >= 200 && status < 300,
        status,
        json: async () => JSON.parse(payload),
        text: async () => payload,
        blob: async () => new Blob([payload]),
      } as unknown as Response;
    }
    return {
      ok: false,
      status: 404,
      json: async () => ({ code: "not_found", message: `no mock for ${path}` }),
    } as unknown as Response;
  }) as unknown as typeof fetch;
  return calls;
}

export async function waitFor(check: () => boolean, timeoutMs = 2000): Promise<void> {
  const start = Date.now();
  while (!check()) {
    if (Date.now() - start > timeoutMs) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}
