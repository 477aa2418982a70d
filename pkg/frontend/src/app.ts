// Page wiring. All authoritative state lives on the server; this file just
// moves JSON between the API and the DOM. Reloading mid-session is safe:
// paste the session id and the flow resumes from GET /sessions/{id}.

import { ApiClient } from "./api.js";
import { buildGuideModel, renderGuideSvg } from "./guide.js";
import { LiveModel, renderLiveSvg } from "./live.js";
import { heatmapModel, rateBars, renderHeatmapHtml, renderRateBarsHtml } from "./results.js";
import { describeError, displayPattern, TrialFlow } from "./trial.js";
import { PatternsDoc, Snapshot, StreamEvent } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const client = new ApiClient(
  (window as { DELTAPAD_URL?: string }).DELTAPAD_URL ?? "http://127.0.0.1:8431",
);

let patternsDoc: PatternsDoc | null = null;
let flow: TrialFlow | null = null;
let live: LiveModel | null = null;
let mode: "contact" | "stretch" = "contact";

function patternIds(): string[] {
  if (!patternsDoc) return [];
  return mode === "contact"
    ? (patternsDoc.contact ?? []).map((c) => c.id)
    : (patternsDoc.stretch ?? []).map((s) => s.id);
}

function renderGuide(highlight?: string) {
  if (!patternsDoc) return;
  const doc = {
    ...patternsDoc,
    contact: mode === "contact" ? patternsDoc.contact : [],
    stretch: mode === "stretch" ? patternsDoc.stretch : [],
  };
  $("guide").innerHTML = renderGuideSvg(buildGuideModel(doc));
  if (highlight) {
    $("guide").innerHTML = renderGuideSvg(buildGuideModel(doc), highlight);
  }
}

function renderResponseGrid(enabled: boolean) {
  const grid = $("response-grid");
  grid.innerHTML = patternIds()
    .map((id) => `<button class="answer" data-id="${id}" ${enabled ? "" : "disabled"}>${id}</button>`)
    .join("");
  for (const btn of Array.from(grid.querySelectorAll("button"))) {
    btn.addEventListener("click", () => {
      for (const b of Array.from(grid.querySelectorAll("button"))) {
        b.classList.toggle("selected", b === btn);
      }
    });
  }
}

function selectedAnswer(): string | null {
  const el = $("response-grid").querySelector("button.selected");
  return el ? (el as HTMLButtonElement).dataset.id ?? null : null;
}

function confidence(): number | null {
  const v = ($("confidence") as HTMLSelectElement).value;
  return v ? Number(v) : null;
}

function refreshTrialPanel() {
  if (!flow) return;
  const s = flow.snapshot();
  $("progress").textContent = `${s.answered} / ${s.total} answered`;
  $("present").toggleAttribute("disabled", s.state !== "idle");
  $("submit").toggleAttribute("disabled", s.state !== "respond");
  renderResponseGrid(s.state === "respond");
  const hidden = ($("hide-truth") as HTMLInputElement).checked;
  $("truth").textContent = displayPattern(s.pattern, hidden);
  $("flow-state").textContent = s.state;
  $("error").textContent = s.error ?? "";
  if (s.lastCorrect !== null) {
    $("error").textContent = s.lastCorrect ? "correct" : "incorrect";
  }
  if (s.state === "done") {
    $("flow-state").textContent = "session complete";
    void showReport();
  }
}

async function showReport() {
  if (!flow) return;
  try {
    const report = await client.report(flow.sessionId);
    $("heatmap").innerHTML = renderHeatmapHtml(heatmapModel(report));
    $("rates").innerHTML = renderRateBarsHtml(rateBars(report));
    $("mean-rate").textContent =
      `mean rate ${(report.mean_rate * 100).toFixed(1)}%`;
  } catch (e) {
    $("error").textContent = describeError(e);
  }
}

function connectStream() {
  const ws = new WebSocket(client.streamUrl());
  ws.onmessage = (msg) => {
    let ev: StreamEvent;
    try {
      ev = StreamEvent.parse(JSON.parse(msg.data as string));
    } catch {
      return;
    }
    if (ev.type === "snapshot" && live) {
      live.push(ev as Snapshot);
      $("live").innerHTML = renderLiveSvg(live);
    } else {
      flow?.handleEvent(ev);
    }
  };
  ws.onclose = () => setTimeout(connectStream, 2000);
}

async function startSession() {
  mode = ($("mode") as HTMLSelectElement).value as "contact" | "stretch";
  const subject = ($("subject") as HTMLInputElement).value || "anon";
  const seed = Number(($("seed") as HTMLInputElement).value) || 1;
  try {
    const sid = await client.createSession({
      mode,
      subject_id: subject,
      rng_seed: seed,
    });
    ($("session-id") as HTMLInputElement).value = sid;
    attachFlow(sid);
  } catch (e) {
    $("error").textContent = describeError(e);
  }
}

async function resumeSession() {
  const sid = ($("session-id") as HTMLInputElement).value.trim();
  if (!sid) return;
  try {
    const st = await client.getSession(sid);
    mode = st.spec.mode;
    ($("mode") as HTMLSelectElement).value = mode;
    attachFlow(sid);
  } catch (e) {
    $("error").textContent = describeError(e);
  }
}

function attachFlow(sid: string) {
  flow = new TrialFlow(client, sid, refreshTrialPanel);
  renderGuide();
  void flow.resume();
}

export async function boot() {
  patternsDoc = await client.patterns();
  live = new LiveModel(patternsDoc);
  renderGuide();
  renderResponseGrid(false);
  connectStream();
  $("start").addEventListener("click", () => void startSession());
  $("resume").addEventListener("click", () => void resumeSession());
  $("present").addEventListener("click", () => void flow?.present());
  $("submit").addEventListener("click", () => {
    const answer = selectedAnswer();
    if (!answer) {
      $("error").textContent = "pick a pattern first";
      return;
    }
    void flow?.submit(answer, confidence());
  });
  $("hide-truth").addEventListener("change", refreshTrialPanel);
  ($("mode") as HTMLSelectElement).addEventListener("change", () => {
    mode = ($("mode") as HTMLSelectElement).value as "contact" | "stretch";
    renderGuide();
    renderResponseGrid(false);
  });
}

if (typeof document !== "undefined" && document.getElementById("start")) {
  void boot();
}
