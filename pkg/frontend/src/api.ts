/** Typed client for the session service HTTP API. */

export interface TaskInfo {
  id: string;
  family: string;
  title: string;
}

export interface PoseDoc {
  position: number[];
  orientation: number[];
}

export interface ShapeDoc {
  kind: string;
  radius?: number;
  half_extents?: number[];
  half_height?: number;
}

export interface SceneObject {
  id: string;
  labels: number[];
  shape: ShapeDoc;
  pose: PoseDoc;
}

export interface SurfaceDoc {
  id: string;
  kind: string;
  center: number[];
  half_extents: number[];
}

export interface HumanRegion {
  id: string;
  center: number[];
  radius: number;
}

export interface SceneDoc {
  id: string;
  properties: string[];
  objects: SceneObject[];
  surfaces: SurfaceDoc[];
  human_regions: HumanRegion[];
  manipulated_id: string;
}

export interface CandidateDoc {
  id: string;
  score: number;
  waypoints: number[][];
  arm_points: number[][][];
  object_poses: PoseDoc[];
}

export interface CandidatesPage {
  session: string;
  task_id: string;
  scene: SceneDoc;
  candidates: CandidateDoc[];
  feedback_count: number;
}

export interface SessionDoc {
  id: string;
  task_id: string;
  seed: number;
  n_candidates: number;
  ranking: string[];
  scores: number[];
  feedback_count: number;
}

export interface FeedbackResponse {
  event: { kind: string; presented: string; improved: string; round: number };
  ranking: string[];
  scores: number[];
  feedback_count: number;
}

export interface MetricsDoc {
  session: string;
  feedback_count: number;
  top_score_trace: number[];
  realized_alpha: number[];
  xi: number[];
}

export type FeedbackBody =
  | { kind: "rerank"; selected: string }
  | { kind: "zero_g"; trajectory: string; waypoint: number; joints: number[] };

/** Error body the service returns for every non-2xx response. */
export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message || `service error ${status}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const text = await resp.text();
  const doc = text ? JSON.parse(text) : {};
  if (!resp.ok) {
    const body: ApiErrorBody =
      doc && typeof doc.code === "string"
        ? doc
        : { code: "unknown", message: text || resp.statusText };
    throw new ServiceError(resp.status, body);
  }
  return doc as T;
}

export class Client {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  health(): Promise<{ status: string }> {
    return request(this.url("/healthz"));
  }

  tasks(): Promise<{ tasks: TaskInfo[] }> {
    return request(this.url("/api/tasks"));
  }

  createSession(taskId: string, seed: number, nCandidates: number): Promise<SessionDoc> {
    return request(this.url("/api/sessions"), {
      method: "POST",
      body: JSON.stringify({ task_id: taskId, seed, n_candidates: nCandidates }),
    });
  }

  candidates(sessionId: string, k?: number): Promise<CandidatesPage> {
    const query = k === undefined ? "" : `?k=${k}`;
    return request(this.url(`/api/sessions/${sessionId}/candidates${query}`));
  }

  feedback(sessionId: string, body: FeedbackBody): Promise<FeedbackResponse> {
    return request(this.url(`/api/sessions/${sessionId}/feedback`), {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  resample(sessionId: string, seed?: number): Promise<FeedbackResponse> {
    return request(this.url(`/api/sessions/${sessionId}/resample`), {
      method: "POST",
      body: JSON.stringify(seed === undefined ? {} : { seed }),
    });
  }

  metrics(sessionId: string): Promise<MetricsDoc> {
    return request(this.url(`/api/sessions/${sessionId}/metrics`));
  }
}
