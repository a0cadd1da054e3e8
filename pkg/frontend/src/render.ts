/** Canvas drawing for the workspace and the score trace.
 *
 * Two orthographic projections: "top" looks down the z axis (table plan),
 * "side" looks along y (heights are visible). Drawing is a pure function of
 * its arguments so a frame can be replayed or asserted in tests.
 */

import type { CandidateDoc, SceneDoc, SceneObject } from "./api.js";
import type { CameraMode } from "./state.js";

/** The subset of CanvasRenderingContext2D the renderer touches. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  setLineDash(segments: number[]): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Camera {
  mode: CameraMode;
  width: number;
  height: number;
  /** pixels per meter */
  scale: number;
  /** world point mapped to the canvas center */
  center: [number, number, number];
}

export function defaultCamera(mode: CameraMode, width: number, height: number): Camera {
  return { mode, width, height, scale: 240, center: [0.55, 0.0, 0.6] };
}

/** World (x, y, z) to canvas pixels under the camera's projection. */
export function project(p: number[], cam: Camera): [number, number] {
  const dx = p[0] - cam.center[0];
  const horiz = cam.mode === "top" ? p[1] - cam.center[1] : dx;
  const vert = cam.mode === "top" ? -dx : -(p[2] - cam.center[2]);
  return [cam.width / 2 + horiz * cam.scale, cam.height / 2 + vert * cam.scale];
}

export const PROPERTY_COLORS: Record<string, string> = {
  heavy: "#6b705c",
  fragile: "#2a9d8f",
  sharp: "#e63946",
  hot: "#f4a261",
  liquid: "#457b9d",
  electronic: "#7d5ba6",
};

const NEUTRAL_OBJECT = "#9c9c9c";

/** Color for an object: the first active property wins, gray otherwise. */
export function colorFor(obj: SceneObject, properties: string[]): string {
  for (let i = 0; i < properties.length; i++) {
    if (obj.labels[i] > 0 && PROPERTY_COLORS[properties[i]]) {
      return PROPERTY_COLORS[properties[i]];
    }
  }
  return NEUTRAL_OBJECT;
}

function objectRadius(obj: SceneObject): number {
  const s = obj.shape;
  if (s.kind === "sphere" || s.kind === "cylinder") return s.radius ?? 0.03;
  const he = s.half_extents ?? [0.03, 0.03, 0.03];
  return Math.max(...he);
}

function drawDisc(g: Draw2D, at: [number, number], r: number, color: string, dashed = false): void {
  g.beginPath();
  g.setLineDash(dashed ? [4, 3] : []);
  g.arc(at[0], at[1], r, 0, Math.PI * 2);
  if (dashed) {
    g.strokeStyle = color;
    g.stroke();
  } else {
    g.fillStyle = color;
    g.fill();
  }
  g.setLineDash([]);
}

function drawSurface(g: Draw2D, cam: Camera, center: number[], he: number[]): void {
  g.fillStyle = "#e8e2d0";
  g.strokeStyle = "#b8b2a0";
  g.lineWidth = 1;
  if (cam.mode === "top") {
    const a = project([center[0] - he[0], center[1] - he[1], center[2]], cam);
    const b = project([center[0] + he[0], center[1] + he[1], center[2]], cam);
    const x = Math.min(a[0], b[0]);
    const y = Math.min(a[1], b[1]);
    g.fillRect(x, y, Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1]));
    g.strokeRect(x, y, Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1]));
  } else {
    const a = project([center[0] - he[0], center[1], center[2]], cam);
    const b = project([center[0] + he[0], center[1], center[2]], cam);
    g.fillRect(Math.min(a[0], b[0]), a[1], Math.abs(b[0] - a[0]), 4);
  }
}

function drawBanner(g: Draw2D, cam: Camera, message: string): void {
  g.fillStyle = "#fdf3f3";
  g.fillRect(0, 0, cam.width, cam.height);
  g.fillStyle = "#b02a2a";
  g.font = "14px sans-serif";
  g.fillText(message, 16, cam.height / 2);
}

/** Draw one frame: scene, end-effector path, arm pose and carried object. */
export function drawWorkspace(
  g: Draw2D,
  scene: SceneDoc | null,
  candidate: CandidateDoc | null,
  frame: number,
  cam: Camera,
): void {
  g.clearRect(0, 0, cam.width, cam.height);
  if (scene === null) {
    drawBanner(g, cam, "geometry unavailable");
    return;
  }
  g.fillStyle = "#fbfaf7";
  g.fillRect(0, 0, cam.width, cam.height);

  for (const surf of scene.surfaces) {
    drawSurface(g, cam, surf.center, surf.half_extents);
  }
  for (const region of scene.human_regions) {
    const at = project(region.center, cam);
    drawDisc(g, at, region.radius * cam.scale, "#c64f7f", true);
  }
  for (const obj of scene.objects) {
    if (obj.id === scene.manipulated_id) continue; // drawn at its trajectory pose
    const at = project(obj.pose.position, cam);
    drawDisc(g, at, Math.max(objectRadius(obj) * cam.scale, 3), colorFor(obj, scene.properties));
  }

  if (candidate === null) return;
  const t = Math.min(Math.max(frame, 0), candidate.arm_points.length - 1);

  // end-effector path, faint, full length
  g.globalAlpha = 0.45;
  g.strokeStyle = "#7a8ca0";
  g.lineWidth = 1;
  g.beginPath();
  candidate.arm_points.forEach((links, i) => {
    const ee = project(links[3], cam);
    if (i === 0) g.moveTo(ee[0], ee[1]);
    else g.lineTo(ee[0], ee[1]);
  });
  g.stroke();
  g.globalAlpha = 1;

  // arm segments shoulder -> elbow -> wrist -> end effector
  const links = candidate.arm_points[t];
  g.strokeStyle = "#37474f";
  g.lineWidth = 3;
  g.beginPath();
  links.forEach((p, i) => {
    const q = project(p, cam);
    if (i === 0) g.moveTo(q[0], q[1]);
    else g.lineTo(q[0], q[1]);
  });
  g.stroke();
  for (const p of links) {
    drawDisc(g, project(p, cam), 3, "#37474f");
  }

  // carried object at this frame
  const held = scene.objects.find((o) => o.id === scene.manipulated_id);
  const pose = candidate.object_poses[Math.min(t, candidate.object_poses.length - 1)];
  if (held && pose) {
    drawDisc(
      g,
      project(pose.position, cam),
      Math.max(objectRadius(held) * cam.scale, 4),
      colorFor(held, scene.properties),
    );
  }

  // waypoint markers along the end-effector path
  g.fillStyle = "#37474f";
  candidate.arm_points.forEach((pts, i) => {
    if (i === 0 || i === candidate.arm_points.length - 1) {
      drawDisc(g, project(pts[3], cam), 4, i === 0 ? "#2e7d32" : "#c62828");
    }
  });
}

/** Score trace chart: one polyline over the feedback rounds so far. */
export function drawTrace(g: Draw2D, values: number[], width: number, height: number): void {
  g.clearRect(0, 0, width, height);
  g.fillStyle = "#fbfaf7";
  g.fillRect(0, 0, width, height);
  if (values.length === 0) {
    g.fillStyle = "#888";
    g.font = "12px sans-serif";
    g.fillText("no feedback yet", 10, height / 2);
    return;
  }
  const lo = Math.min(...values, 0);
  const hi = Math.max(...values, 1e-9);
  const span = hi - lo || 1;
  const px = (i: number) => 12 + (i * (width - 24)) / Math.max(values.length - 1, 1);
  const py = (v: number) => height - 10 - ((v - lo) / span) * (height - 20);
  g.strokeStyle = "#2a9d8f";
  g.lineWidth = 2;
  g.beginPath();
  values.forEach((v, i) => {
    if (i === 0) g.moveTo(px(i), py(v));
    else g.lineTo(px(i), py(v));
  });
  g.stroke();
  g.fillStyle = "#2a9d8f";
  values.forEach((v, i) => {
    g.beginPath();
    g.arc(px(i), py(v), 3, 0, Math.PI * 2);
    g.fill();
  });
}
