// Contract tests against a real mock-mode service. The suite spawns
// `fmea-rag serve` with an empty data dir, so no network beyond
// localhost and no hosted models are involved.

import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ask, health, stats, ServiceError, NO_STORE_STATUS } from "../src/api";
import { renderAnswer, renderNoStoreNotice } from "../src/render";

const PORT = 8912;
const ADDRESS = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workDir: string;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      await health(ADDRESS);
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "fmea-ui-"));
  server = spawn(
    "fmea-rag",
    ["--data-dir", join(workDir, "store"), "serve", "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForService();
}, 30000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("before any ingest", () => {
  it("asking yields the no-store notice", async () => {
    let caught: unknown;
    try {
      await ask(ADDRESS, "How many failure modes are there?", 3);
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(ServiceError);
    const error = caught as ServiceError;
    expect(error.status).toBe(NO_STORE_STATUS);
    const html = renderNoStoreNotice(error.detail);
    expect(html).toContain("no FMEA loaded");
    expect(html).toContain("no store ingested yet");
  });

  it("health reports the store as missing", async () => {
    const body = await health(ADDRESS);
    expect(body.status).toBe("ok");
    expect(body.store_loaded).toBe(false);
  });
});

describe("after ingesting the sample table", () => {
  beforeAll(async () => {
    // provisioning step, not part of the UI surface
    const csv = execFileSync("python3", [
      "-c",
      "from fmea_rag.fixtures import battery_module_csv; import sys; sys.stdout.write(battery_module_csv())",
    ]).toString();
    const response = await fetch(`${ADDRESS}/ingest`, { method: "POST", body: csv });
    expect(response.status).toBe(200);
  }, 30000);

  it("a graph-query answer renders the query and zero score badges", async () => {
    const response = await ask(ADDRESS, "How many failure modes are there?", 3);
    expect(response.provenance).toBe("graph-query");
    const html = renderAnswer(response);
    expect(html).toContain("MATCH (m:FailureMode) RETURN count(m)");
    expect(html).not.toContain("score-badge");
    expect(html).toContain("count(m): 3");
  });

  it("a vector answer renders k score badges rounded to 3 decimals", async () => {
    const k = 2;
    const response = await ask(ADDRESS, "tell me about separator tears", k);
    expect(response.provenance).toBe("vector-search");
    expect(response.contexts).toHaveLength(k);
    const html = renderAnswer(response);
    expect(html.match(/score-badge/g)).toHaveLength(k);
    for (const context of response.contexts) {
      expect(html).toContain(`>${(context.cosine_score as number).toFixed(3)}<`);
    }
  });

  it("stats feed the status line", async () => {
    const body = await stats(ADDRESS);
    expect(body.total_nodes).toBe(14);
    expect(body.total_relationships).toBe(12);
  });

  it("k is forwarded per request", async () => {
    const five = await ask(ADDRESS, "anything about busbars", 5);
    expect(five.contexts.length).toBeLessThanOrEqual(5);
    const one = await ask(ADDRESS, "anything about busbars", 1);
    expect(one.contexts).toHaveLength(1);
  });
});
