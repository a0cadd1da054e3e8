import { describe, expect, it } from "vitest";

import type { CandidateDoc, SceneDoc, SceneObject } from "../src/api.js";
import {
  colorFor,
  defaultCamera,
  drawTrace,
  drawWorkspace,
  project,
  PROPERTY_COLORS,
  type Draw2D,
} from "../src/render.js";

class RecordingDraw implements Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;
  ops: unknown[][] = [];

  clearRect(...args: number[]) { this.ops.push(["clearRect", ...args]); }
  fillRect(...args: number[]) { this.ops.push(["fillRect", this.fillStyle, ...args]); }
  strokeRect(...args: number[]) { this.ops.push(["strokeRect", ...args]); }
  beginPath() { this.ops.push(["beginPath"]); }
  moveTo(x: number, y: number) { this.ops.push(["moveTo", x, y]); }
  lineTo(x: number, y: number) { this.ops.push(["lineTo", x, y]); }
  arc(...args: number[]) { this.ops.push(["arc", ...args]); }
  setLineDash(segments: number[]) { this.ops.push(["setLineDash", ...segments]); }
  stroke() { this.ops.push(["stroke", this.strokeStyle]); }
  fill() { this.ops.push(["fill", this.fillStyle]); }
  fillText(text: string, x: number, y: number) { this.ops.push(["fillText", text, x, y]); }
}

const heldObject: SceneObject = {
  id: "held",
  labels: [0, 1],
  shape: { kind: "sphere", radius: 0.04 },
  pose: { position: [0.5, 0, 0.6], orientation: [1, 0, 0, 0] },
};

const scene: SceneDoc = {
  id: "manip-eggs",
  properties: ["heavy", "fragile"],
  objects: [
    heldObject,
    {
      id: "crate",
      labels: [1, 0],
      shape: { kind: "box", half_extents: [0.05, 0.05, 0.08] },
      pose: { position: [0.7, 0.2, 0.55], orientation: [1, 0, 0, 0] },
    },
  ],
  surfaces: [{ id: "table", kind: "table", center: [0.55, 0, 0.5], half_extents: [0.4, 0.6] }],
  human_regions: [{ id: "person", center: [0.8, 0.3, 0.8], radius: 0.15 }],
  manipulated_id: "held",
};

const candidate: CandidateDoc = {
  id: "t0",
  score: 0.25,
  waypoints: [
    [0, 0, 0, 0, 0, 0],
    [0.1, 0, 0, 0, 0, 0],
    [0.2, 0, 0, 0, 0, 0],
  ],
  arm_points: [0, 1, 2].map((i) => [
    [0, 0, 0.75],
    [0.2, 0.1 * i, 0.8],
    [0.4, 0.1 * i, 0.7],
    [0.5, 0.1 * i, 0.65],
  ]),
  object_poses: [0, 1, 2].map((i) => ({
    position: [0.5, 0.1 * i, 0.6],
    orientation: [1, 0, 0, 0],
  })),
};

describe("projection", () => {
  const cam = defaultCamera("top", 400, 300);

  it("top view is a plan: world y moves horizontally, z is ignored", () => {
    const a = project([0.55, 0.0, 0.6], cam);
    expect(a).toEqual([200, 150]);
    const b = project([0.55, 0.1, 1.6], cam);
    expect(b[0]).toBeCloseTo(200 + 0.1 * cam.scale);
    expect(b[1]).toBeCloseTo(150);
  });

  it("side view shows heights: world z moves up, y is ignored", () => {
    const side = defaultCamera("side", 400, 300);
    const p = project([0.55, 0.4, 0.7], side);
    expect(p[0]).toBeCloseTo(200);
    expect(p[1]).toBeCloseTo(150 - 0.1 * side.scale);
  });
});

describe("attribute colors", () => {
  it("first active property picks the color", () => {
    expect(colorFor(heldObject, scene.properties)).toBe(PROPERTY_COLORS.fragile);
    expect(colorFor(scene.objects[1], scene.properties)).toBe(PROPERTY_COLORS.heavy);
  });

  it("unlabeled objects fall back to gray", () => {
    const plain = { ...heldObject, labels: [0, 0] };
    expect(colorFor(plain, scene.properties)).toBe("#9c9c9c");
  });
});

describe("workspace frames", () => {
  it("missing geometry draws the placeholder banner", () => {
    const g = new RecordingDraw();
    drawWorkspace(g, null, null, 0, defaultCamera("top", 400, 300));
    const texts = g.ops.filter((op) => op[0] === "fillText");
    expect(texts.length).toBe(1);
    expect(String(texts[0][1])).toContain("geometry unavailable");
  });

  it("a frame is deterministic in its inputs", () => {
    const a = new RecordingDraw();
    const b = new RecordingDraw();
    const cam = defaultCamera("side", 400, 300);
    drawWorkspace(a, scene, candidate, 1, cam);
    drawWorkspace(b, scene, candidate, 1, cam);
    expect(a.ops).toEqual(b.ops);
    expect(a.ops.length).toBeGreaterThan(10);
  });

  it("the arm polyline starts at the shoulder of the playback frame", () => {
    const g = new RecordingDraw();
    const cam = defaultCamera("top", 400, 300);
    drawWorkspace(g, scene, candidate, 2, cam);
    const shoulder = project(candidate.arm_points[2][0], cam);
    const moves = g.ops.filter((op) => op[0] === "moveTo");
    expect(moves).toContainEqual(["moveTo", shoulder[0], shoulder[1]]);
  });

  it("playback frames beyond the end clamp to the last pose", () => {
    const a = new RecordingDraw();
    const b = new RecordingDraw();
    const cam = defaultCamera("top", 400, 300);
    drawWorkspace(a, scene, candidate, 2, cam);
    drawWorkspace(b, scene, candidate, 99, cam);
    expect(b.ops).toEqual(a.ops);
  });
});

describe("score trace", () => {
  it("draws one point per feedback", () => {
    const g = new RecordingDraw();
    drawTrace(g, [0.1, 0.3, 0.2], 300, 100);
    const dots = g.ops.filter((op) => op[0] === "fill");
    expect(dots.length).toBe(3);
  });

  it("empty trace explains itself instead of drawing", () => {
    const g = new RecordingDraw();
    drawTrace(g, [], 300, 100);
    const texts = g.ops.filter((op) => op[0] === "fillText");
    expect(texts.length).toBe(1);
  });
});
