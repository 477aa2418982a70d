// End-to-end console flow against the real service on the sim backend.
// Spawns `deltapad serve`, then drives the same code paths the page uses:
// guide from /patterns, TrialFlow through a full 40-trial stretch session,
// heatmap from the report, live view from the WS stream.

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ApiClient } from "../src/api.js";
import { buildGuideModel } from "../src/guide.js";
import { LiveModel } from "../src/live.js";
import { heatmapModel } from "../src/results.js";
import { TrialFlow } from "../src/trial.js";
import { Snapshot, StreamEvent } from "../src/types.js";

const PORT = 8600 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let dataDir: string;
const client = new ApiClient(BASE);

async function waitForService(ms: number): Promise<void> {
  const deadline = Date.now() + ms;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/patterns`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 100));
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "deltapad-ui-"));
  server = spawn(
    "python3",
    ["-m", "deltapad.cli", "serve", "--host", "127.0.0.1",
     "--port", String(PORT), "--data-dir", dataDir, "--no-realtime"],
    { cwd: join(import.meta.dirname ?? __dirname, "..", ".."), stdio: "ignore" },
  );
  await waitForService(30000);
}, 40000);

afterAll(async () => {
  server?.kill("SIGTERM");
  await new Promise((r) => setTimeout(r, 300));
  server?.kill("SIGKILL");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("console against the sim service", () => {
  it("renders the guide from the live pattern catalog", async () => {
    const doc = await client.patterns();
    const m = buildGuideModel(doc);
    expect(m.dots).toHaveLength(9);
    expect(m.arrows).toHaveLength(8);
  }, 15000);

  it("completes a 40-trial stretch session, heatmap diagonal-only", async () => {
    const sid = await client.createSession({
      mode: "stretch", subject_id: "ui01", rng_seed: 7,
    });
    const flow = new TrialFlow(client, sid);
    await flow.resume();
    expect(flow.state).toBe("idle");
    expect(flow.total).toBe(40);

    for (let i = 0; i < 40; i++) {
      await flow.present();
      // no stream hooked to this flow; use the duration fallback directly
      flow.stimulusDone();
      expect(flow.state).toBe("respond");
      const truth = flow.pattern!;
      await flow.submit(truth, 5);
      expect(flow.error).toBeNull();
    }
    expect(flow.state).toBe("done");
    expect(flow.answered).toBe(40);

    const report = await client.report(sid);
    expect(report.total_trials).toBe(40);
    expect(report.mean_rate).toBe(1.0);
    const heat = heatmapModel(report);
    expect(heat.diagonalOnly).toBe(true);
    expect(heat.patterns).toHaveLength(8);
  }, 60000);

  it("resumes mid-session from server state after a reload", async () => {
    const sid = await client.createSession({
      mode: "contact", subject_id: "ui02", rng_seed: 11,
    });
    const first = new TrialFlow(client, sid);
    await first.resume();
    await first.present();
    // page reload: fresh flow object, same session id
    const second = new TrialFlow(client, sid);
    await second.resume();
    expect(second.state).toBe("respond");
    expect(second.trial).toBe(0);
    await second.submit(second.pattern!, 4);
    expect(second.answered).toBe(1);
  }, 15000);

  it("streams snapshots that cross from hover to the contact plane", async () => {
    const doc = await client.patterns();
    const live = new LiveModel(doc);
    const sid = await client.createSession({
      mode: "contact", subject_id: "ui03", rng_seed: 3,
    });

    const ws = new WebSocket(client.streamUrl());
    const events: StreamEvent[] = [];
    let sawOurStart = false;
    // a previous test's playback may still be draining on the device loop,
    // so only our own session's lifecycle events count
    const finished = new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("no trial_finished")), 20000);
      ws.on("message", (raw: Buffer) => {
        const ev = StreamEvent.parse(JSON.parse(raw.toString()));
        const sess = (ev as { session_id?: string }).session_id;
        if (ev.type === "snapshot") {
          if (sawOurStart) {
            events.push(ev);
            live.push(ev as Snapshot);
          }
        } else if (sess === sid) {
          events.push(ev);
          if (ev.type === "trial_started") sawOurStart = true;
          if (ev.type === "trial_finished") {
            clearTimeout(timer);
            resolve();
          }
        }
      });
      ws.on("error", reject);
    });
    await new Promise<void>((resolve) => ws.on("open", () => resolve()));
    await client.present(sid);
    await finished;
    ws.close();

    expect(events.some((e) => e.type === "trial_started")).toBe(true);
    const zs = events
      .filter((e): e is Snapshot => e.type === "snapshot")
      .map((s) => s.pose[2]);
    expect(zs.length).toBeGreaterThan(5);
    expect(Math.min(...zs)).toBeLessThanOrEqual(22.1);
    expect(Math.max(...zs)).toBeGreaterThanOrEqual(26.9);
    // live model scaled everything into the disc and gauge range
    expect(live.trail.length).toBeGreaterThan(0);
    expect(live.trail.every((p) => p.zFrac >= 0 && p.zFrac <= 1)).toBe(true);

    // tidy up so the server is not left with a pending trial
    const st = await client.getSession(sid);
    if (st.presented_index !== null) {
      await client.respond(sid, st.presented_index, "C", 3);
    }
  }, 30000);
});
