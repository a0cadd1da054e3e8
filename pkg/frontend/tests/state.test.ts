import { describe, expect, it } from "vitest";

import type { CandidateDoc, CandidatesPage, SceneDoc } from "../src/api.js";
import {
  advancePlayback,
  applyCandidates,
  beginSubmit,
  finishSubmit,
  initialState,
  selectCandidate,
  selectWaypoint,
  setPlayback,
} from "../src/state.js";

const scene: SceneDoc = {
  id: "manip-eggs",
  properties: ["heavy", "fragile"],
  objects: [],
  surfaces: [],
  human_regions: [],
  manipulated_id: "held",
};

function candidate(id: string, frames: number): CandidateDoc {
  const waypoints = Array.from({ length: frames }, (_, i) => [i, 0, 0, 0, 0, 0]);
  return {
    id,
    score: 0,
    waypoints,
    arm_points: waypoints.map(() => [[0, 0, 0], [0, 0, 1], [0, 0, 2], [0, 0, 3]]),
    object_poses: waypoints.map(() => ({ position: [0, 0, 0], orientation: [1, 0, 0, 0] })),
  };
}

function page(ids: string[], frames = 9): CandidatesPage {
  return {
    session: "s1",
    task_id: "manip-eggs",
    scene,
    candidates: ids.map((id) => candidate(id, frames)),
    feedback_count: 0,
  };
}

describe("state transitions", () => {
  it("selection only ever points into the fetched ranking", () => {
    let s = applyCandidates(initialState(), page(["a", "b", "c"]));
    s = selectCandidate(s, "b");
    expect(s.selected).toBe("b");

    s = selectCandidate(s, "ghost");
    expect(s.selected).toBe("b");

    s = applyCandidates(s, page(["a", "c"]));
    expect(s.selected).toBeNull();
  });

  it("playback stays inside the trajectory", () => {
    let s = applyCandidates(initialState(), page(["a"], 9));
    s = setPlayback(s, "a", 42);
    expect(s.playback["a"]).toBe(8);
    s = setPlayback(s, "a", -3);
    expect(s.playback["a"]).toBe(0);

    s = setPlayback(s, "a", 8);
    s = applyCandidates(s, page(["a"], 5));
    expect(s.playback["a"]).toBe(4);
  });

  it("playback advance wraps around", () => {
    let s = applyCandidates(initialState(), page(["a"], 3));
    s = setPlayback(s, "a", 2);
    s = advancePlayback(s, "a");
    expect(s.playback["a"]).toBe(0);
  });

  it("waypoint selection clamps to interior indices", () => {
    let s = applyCandidates(initialState(), page(["a"], 9));
    s = selectCandidate(s, "a");
    s = selectWaypoint(s, 0);
    expect(s.selectedWaypoint).toBe(1);
    s = selectWaypoint(s, 99);
    expect(s.selectedWaypoint).toBe(7);
  });

  it("only one submission can be in flight", () => {
    const s0 = applyCandidates(initialState(), page(["a"]));
    const s1 = beginSubmit(s0);
    expect(s1).not.toBeNull();
    expect(beginSubmit(s1!)).toBeNull();

    const done = finishSubmit(s1!, "waypoint 2 collides with the scene");
    expect(done.inflight).toBe(false);
    expect(done.banner).toContain("collides");
    expect(beginSubmit(done)).not.toBeNull();
  });

  it("starting a submission clears the previous banner", () => {
    const s = finishSubmit(applyCandidates(initialState(), page(["a"])), "old message");
    const next = beginSubmit(s);
    expect(next!.banner).toBeNull();
  });
});
