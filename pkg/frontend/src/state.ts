/** View state and its pure transition helpers.
 *
 * Everything the page shows derives from (last server responses, local
 * interaction state); these helpers keep the two invariants the UI relies
 * on: the selection always refers to a candidate in the last fetched
 * ranking, and playback indices stay inside their trajectory.
 */

import type { CandidateDoc, CandidatesPage, MetricsDoc, SceneDoc } from "./api.js";

export type CameraMode = "top" | "side";

export interface ViewState {
  sessionId: string | null;
  taskId: string | null;
  scene: SceneDoc | null;
  candidates: CandidateDoc[];
  /** playback frame per candidate id */
  playback: Record<string, number>;
  selected: string | null;
  selectedWaypoint: number;
  camera: CameraMode;
  metrics: MetricsDoc | null;
  /** at most one feedback request in flight */
  inflight: boolean;
  banner: string | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    taskId: null,
    scene: null,
    candidates: [],
    playback: {},
    selected: null,
    selectedWaypoint: 1,
    camera: "top",
    metrics: null,
    inflight: false,
    banner: null,
  };
}

export function candidateById(state: ViewState, id: string | null): CandidateDoc | null {
  if (id === null) return null;
  return state.candidates.find((c) => c.id === id) ?? null;
}

/** Fold a fresh candidates page into the state.
 *
 * Selection survives only if the id is still present; playback indices are
 * clamped to the new trajectory lengths; unknown playback entries drop.
 */
export function applyCandidates(state: ViewState, page: CandidatesPage): ViewState {
  const playback: Record<string, number> = {};
  for (const cand of page.candidates) {
    const prev = state.playback[cand.id] ?? 0;
    playback[cand.id] = Math.min(Math.max(prev, 0), cand.waypoints.length - 1);
  }
  const ids = new Set(page.candidates.map((c) => c.id));
  const selected = state.selected !== null && ids.has(state.selected) ? state.selected : null;
  const next: ViewState = {
    ...state,
    sessionId: page.session,
    taskId: page.task_id,
    scene: page.scene,
    candidates: page.candidates,
    playback,
    selected,
  };
  return clampWaypoint(next);
}

export function applyMetrics(state: ViewState, metrics: MetricsDoc): ViewState {
  return { ...state, metrics };
}

/** Select a candidate; ids outside the current ranking are ignored. */
export function selectCandidate(state: ViewState, id: string): ViewState {
  if (!state.candidates.some((c) => c.id === id)) return state;
  return clampWaypoint({ ...state, selected: id });
}

function clampWaypoint(state: ViewState): ViewState {
  const cand = candidateById(state, state.selected);
  if (cand === null) return state;
  const last = cand.waypoints.length - 2; // interior waypoints only
  const j = Math.min(Math.max(state.selectedWaypoint, 1), Math.max(last, 1));
  return { ...state, selectedWaypoint: j };
}

export function selectWaypoint(state: ViewState, j: number): ViewState {
  return clampWaypoint({ ...state, selectedWaypoint: Math.round(j) });
}

export function setPlayback(state: ViewState, id: string, t: number): ViewState {
  const cand = candidateById(state, id);
  if (cand === null) return state;
  const frame = Math.min(Math.max(Math.round(t), 0), cand.waypoints.length - 1);
  return { ...state, playback: { ...state.playback, [id]: frame } };
}

export function advancePlayback(state: ViewState, id: string): ViewState {
  const cand = candidateById(state, id);
  if (cand === null) return state;
  const frame = ((state.playback[id] ?? 0) + 1) % cand.waypoints.length;
  return { ...state, playback: { ...state.playback, [id]: frame } };
}

export function setCamera(state: ViewState, camera: CameraMode): ViewState {
  return { ...state, camera };
}

/** Start a feedback submission; null means one is already in flight. */
export function beginSubmit(state: ViewState): ViewState | null {
  if (state.inflight) return null;
  return { ...state, inflight: true, banner: null };
}

export function finishSubmit(state: ViewState, banner: string | null = null): ViewState {
  return { ...state, inflight: false, banner };
}
