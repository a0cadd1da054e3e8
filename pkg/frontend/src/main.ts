/** Page wiring: one event loop, one in-flight request, server-owned state. */

import { Client, ServiceError } from "./api.js";
import type { CandidateDoc } from "./api.js";
import {
  advancePlayback,
  applyCandidates,
  applyMetrics,
  beginSubmit,
  candidateById,
  finishSubmit,
  initialState,
  selectCandidate,
  selectWaypoint,
  setCamera,
  ViewState,
} from "./state.js";
import { defaultCamera, drawTrace, drawWorkspace } from "./render.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let state: ViewState = initialState();
let client = new Client("http://127.0.0.1:8000");

function setState(next: ViewState): void {
  state = next;
  render();
}

async function refresh(): Promise<void> {
  if (state.sessionId === null) return;
  const [page, metrics] = await Promise.all([
    client.candidates(state.sessionId),
    client.metrics(state.sessionId),
  ]);
  setState(applyMetrics(applyCandidates(state, page), metrics));
}

async function submitFeedback(body: Parameters<Client["feedback"]>[1]): Promise<void> {
  const started = beginSubmit(state);
  if (started === null || state.sessionId === null) return;
  setState(started);
  try {
    await client.feedback(state.sessionId, body);
    setState(finishSubmit(state));
    await refresh();
  } catch (err) {
    if (err instanceof ServiceError) {
      setState(finishSubmit(state, err.body.message));
    } else {
      setState(finishSubmit(state, String(err)));
    }
  }
}

async function createSession(): Promise<void> {
  const taskId = ($("task-select") as HTMLSelectElement).value;
  const seed = Number(($("seed-input") as HTMLInputElement).value) || 0;
  try {
    const doc = await client.createSession(taskId, seed, 8);
    window.location.hash = doc.id;
    setState({ ...initialState(), sessionId: doc.id, camera: state.camera });
    await refresh();
  } catch (err) {
    setState(finishSubmit(state, err instanceof ServiceError ? err.body.message : String(err)));
  }
}

function renderCandidateList(): void {
  const list = $("candidates");
  list.innerHTML = "";
  state.candidates.forEach((cand, rank) => {
    const row = document.createElement("div");
    row.className = "cand" + (cand.id === state.selected ? " selected" : "");
    const label = document.createElement("span");
    label.textContent = `#${rank + 1}  ${cand.id}  (${cand.score.toFixed(3)})`;
    row.appendChild(label);
    const prefer = document.createElement("button");
    prefer.textContent = "prefer";
    prefer.disabled = state.inflight;
    prefer.onclick = (ev) => {
      ev.stopPropagation();
      void submitFeedback({ kind: "rerank", selected: cand.id });
    };
    row.appendChild(prefer);
    row.onclick = () => {
      setState(selectCandidate(state, cand.id));
      syncJogPanel();
    };
    list.appendChild(row);
  });
}

function jogSliders(): HTMLInputElement[] {
  return Array.from($("jog-sliders").querySelectorAll("input"));
}

function syncJogPanel(): void {
  const cand = candidateById(state, state.selected);
  const holder = $("jog-sliders");
  holder.innerHTML = "";
  if (cand === null) return;
  const joints = cand.waypoints[state.selectedWaypoint];
  joints.forEach((value, i) => {
    const wrap = document.createElement("label");
    wrap.textContent = `j${i}`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "-3.2";
    slider.max = "3.2";
    slider.step = "0.01";
    slider.value = String(value);
    wrap.appendChild(slider);
    holder.appendChild(wrap);
  });
  const wp = $("waypoint-input") as HTMLInputElement;
  wp.max = String(cand.waypoints.length - 2);
  wp.value = String(state.selectedWaypoint);
}

function render(): void {
  $("session-label").textContent = state.sessionId ?? "no session";
  const banner = $("banner");
  banner.textContent = state.banner ?? "";
  banner.style.display = state.banner ? "block" : "none";

  renderCandidateList();

  const canvas = $("workspace") as HTMLCanvasElement;
  const g = canvas.getContext("2d");
  if (g) {
    const cam = defaultCamera(state.camera, canvas.width, canvas.height);
    const cand: CandidateDoc | null =
      candidateById(state, state.selected) ?? state.candidates[0] ?? null;
    const frame = cand ? (state.playback[cand.id] ?? 0) : 0;
    drawWorkspace(g, state.scene, cand, frame, cam);
  }

  const traceCanvas = $("trace") as HTMLCanvasElement;
  const tg = traceCanvas.getContext("2d");
  if (tg) drawTrace(tg, state.metrics?.top_score_trace ?? [], traceCanvas.width, traceCanvas.height);

  $("feedback-count").textContent = String(state.metrics?.feedback_count ?? 0);
  ($("zero-g-submit") as HTMLButtonElement).disabled = state.inflight || state.selected === null;
  ($("resample") as HTMLButtonElement).disabled = state.inflight || state.sessionId === null;
}

async function boot(): Promise<void> {
  client = new Client(($("base-url") as HTMLInputElement).value);
  const { tasks } = await client.tasks();
  const select = $("task-select") as HTMLSelectElement;
  select.innerHTML = "";
  for (const task of tasks) {
    const opt = document.createElement("option");
    opt.value = task.id;
    opt.textContent = `${task.id}: ${task.title}`;
    select.appendChild(opt);
  }
  // a reload restores the session straight from the server
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) {
    setState({ ...initialState(), sessionId: fromHash });
    await refresh();
  }
}

function wire(): void {
  $("connect").onclick = () => void boot().catch((err) => setState(finishSubmit(state, String(err))));
  $("new-session").onclick = () => void createSession();
  $("camera-top").onclick = () => setState(setCamera(state, "top"));
  $("camera-side").onclick = () => setState(setCamera(state, "side"));
  ($("waypoint-input") as HTMLInputElement).onchange = (ev) => {
    setState(selectWaypoint(state, Number((ev.target as HTMLInputElement).value)));
    syncJogPanel();
  };
  $("zero-g-submit").onclick = () => {
    if (state.selected === null) return;
    const joints = jogSliders().map((s) => Number(s.value));
    void submitFeedback({
      kind: "zero_g",
      trajectory: state.selected,
      waypoint: state.selectedWaypoint,
      joints,
    });
  };
  $("resample").onclick = async () => {
    const started = beginSubmit(state);
    if (started === null || state.sessionId === null) return;
    setState(started);
    try {
      await client.resample(state.sessionId);
      setState(finishSubmit(state));
      await refresh();
    } catch (err) {
      setState(finishSubmit(state, err instanceof ServiceError ? err.body.message : String(err)));
    }
  };

  window.setInterval(() => {
    const cand = candidateById(state, state.selected) ?? state.candidates[0] ?? null;
    if (cand !== null) setState(advancePlayback(state, cand.id));
  }, 350);

  void boot().catch(() => {
    setState(finishSubmit(state, "service unreachable; check the base URL and connect"));
  });
}

wire();
