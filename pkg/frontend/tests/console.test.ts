/**
 * Integration tests against a real label-service instance.
 *
 * Each scenario boots the Python API with a fixed task backlog, drives the
 * console controller the way a keyboard-and-mouse session would, and checks
 * the on-disk audit log and server state. The round-trip test asserts that
 * a console session leaves exactly the same audit records as raw HTTP calls.
 */

import { afterEach, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient, ConnectivityError, StaleVersionError } from "../src/api.js";
import { ConsoleController, View } from "../src/console.js";

const FIXTURE = join(fileURLToPath(new URL(".", import.meta.url)), "serve_fixture.py");

interface Server {
  url: string;
  stateDir: string;
  proc: ChildProcess;
}

let running: Server[] = [];
let nextPort = 8931;

async function startServer(): Promise<Server> {
  const port = nextPort++;
  const stateDir = mkdtempSync(join(tmpdir(), "console-state-"));
  const proc = spawn("python3", [
    FIXTURE,
    "--state-dir",
    stateDir,
    "--port",
    String(port),
  ]);
  const server = { url: `http://127.0.0.1:${port}`, stateDir, proc };
  running.push(server);
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const resp = await fetch(`${server.url}/health`);
      if (resp.ok) return server;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("label service did not come up");
}

afterEach(() => {
  for (const server of running) {
    server.proc.kill();
    rmSync(server.stateDir, { recursive: true, force: true });
  }
  running = [];
});

function auditRecords(server: Server): string {
  try {
    return readFileSync(join(server.stateDir, "audit.jsonl"), "utf-8");
  } catch {
    return "";
  }
}

/** View stub that records what the controller asked it to show. */
class FakeView implements View {
  rendered: Array<{ queueLength: number; current: number }> = [];
  banner: string | null = null;
  stalePrompts = 0;
  prefilled: string[] = [];
  dashboard: unknown = null;

  renderQueue(tasks: { id: string }[], current: number): void {
    this.rendered.push({ queueLength: tasks.length, current });
  }
  renderDashboard(progress: unknown, mislabels: unknown): void {
    this.dashboard = { progress, mislabels };
  }
  prefillFlagForm(gram: string): void {
    this.prefilled.push(gram);
  }
  showBanner(message: string): void {
    this.banner = message;
  }
  clearBanner(): void {
    this.banner = null;
  }
  showStalePrompt(): void {
    this.stalePrompts++;
  }
}

function makeConsole(server: Server): {
  controller: ConsoleController;
  view: FakeView;
  api: ApiClient;
} {
  const api = new ApiClient(server.url);
  const view = new FakeView();
  return { controller: new ConsoleController(api, view), view, api };
}

describe("console round-trip", () => {
  it("writes the same audit records as direct API calls", async () => {
    // session A: through the console controller (UI path)
    const serverA = await startServer();
    const { controller, view } = makeConsole(serverA);
    await controller.loadQueue("cluster_label");
    await controller.handleKey("2"); // label first cluster Verification
    await controller.handleKey("s"); // skip the next cluster
    await controller.loadQueue("keyword_flag");
    await controller.submitFlag("Zalo", "Communications");
    expect(view.banner).toBeNull();

    // session B: the same four resolutions as raw HTTP requests
    const serverB = await startServer();
    const api = new ApiClient(serverB.url);
    const clusters = await api.tasks("cluster_label");
    await api.resolve(clusters[0].id, {
      action: "label",
      purpose: "verification",
    });
    await api.resolve(clusters[1].id, { action: "skip" });
    const keywords = await api.tasks("keyword_flag");
    await api.resolve(keywords[0].id, {
      action: "flag",
      service: "Zalo",
      category: "Communications",
    });

    const auditA = auditRecords(serverA);
    expect(auditA).not.toBe("");
    expect(auditA).toBe(auditRecords(serverB));
  });

  it("lists cluster tasks in member_count order", async () => {
    const server = await startServer();
    const api = new ApiClient(server.url);
    const tasks = await api.tasks("cluster_label");
    const counts = tasks.map((t) => Number(t.context.member_count));
    expect(counts).toEqual([...counts].sort((a, b) => b - a));
  });
});

describe("stale-version guard", () => {
  it("blocks writes from a console that trails the server", async () => {
    const server = await startServer();
    const stale = makeConsole(server);
    await stale.controller.loadQueue("cluster_label");

    // another session advances the server state behind our back
    const other = new ApiClient(server.url);
    const tasks = await other.tasks("keyword_flag");
    await other.resolve(tasks[0].id, { action: "skip" });

    const target = stale.controller.currentTask()!;
    await stale.controller.handleKey("2");
    expect(stale.view.stalePrompts).toBe(1);
    expect(stale.controller.current).toBe(0); // card did not advance

    // the server never applied the stale write
    const untouched = await other.task(target.id);
    expect(untouched.status).toBe("pending");

    // raw client surfaces the same refusal as a typed error
    const raw = new ApiClient(server.url);
    raw.stateVersion = 0; // deliberately behind
    await expect(
      raw.resolve(target.id, { action: "skip" }),
    ).rejects.toBeInstanceOf(StaleVersionError);
  });
});

describe("connectivity handling", () => {
  it("shows a banner and mutates nothing when the service is down", async () => {
    const dead: Server = {
      url: "http://127.0.0.1:59999",
      stateDir: "",
      proc: null as unknown as ChildProcess,
    };
    const api = new ApiClient(dead.url);
    const view = new FakeView();
    const controller = new ConsoleController(api, view);
    await controller.loadQueue("cluster_label");
    expect(view.banner).toMatch(/unreachable/);
    expect(controller.queue).toEqual([]);
    await expect(api.health()).rejects.toBeInstanceOf(ConnectivityError);
  });
});

describe("dashboard", () => {
  it("surfaces progress and mislabels and navigates into flag tasks", async () => {
    const server = await startServer();
    const { controller, view } = makeConsole(server);
    await controller.refreshDashboard();
    const dash = view.dashboard as {
      progress: { done: number; pending: number };
      mislabels: { total: number; offending_grams: string[] };
    };
    expect(dash.progress.done).toBe(0);
    expect(dash.progress.pending).toBeGreaterThan(0);
    expect(dash.mislabels.total).toBe(2);
    controller.openGram(dash.mislabels.offending_grams[0] ?? "zalo");
    expect(view.prefilled.length).toBe(1);
  });
});
