/**
 * Typed client for the unbend session service.
 *
 * All rig mutations go through these endpoints; the client never does
 * deformation math of its own. Every mutation response carries the new
 * rig version, and image responses echo the version they were rendered
 * from in the X-Rig-Version header.
 */

export type Vec3 = [number, number, number];

export interface KeyframeJson {
  e: Vec3;
  R: [Vec3, Vec3, Vec3];
  extent: [number, number];
}

export interface RigJson {
  keyframes: KeyframeJson[];
}

export interface RigResponse {
  rig: RigJson;
  version: number;
  total_arclength: number;
}

export interface SliceResponse {
  bytes: Uint8Array;
  version: number;
}

export interface PreviewResponse {
  x: Uint8Array;
  y: Uint8Array;
  z: Uint8Array;
  version: number;
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

function b64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, init?: Parameters<FetchLike>[1]): Promise<Response> {
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        detail = body.detail ?? body.error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return res;
  }

  private async post(path: string, payload: unknown): Promise<number> {
    const res = await this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    const body = await res.json();
    return body.version as number;
  }

  async getRig(): Promise<RigResponse> {
    const res = await this.request("/rig");
    return (await res.json()) as RigResponse;
  }

  async getSlice(t: number, w = 256, h = 256): Promise<SliceResponse> {
    const res = await this.request(`/slice?t=${t}&w=${w}&h=${h}`);
    const bytes = new Uint8Array(await res.arrayBuffer());
    const version = Number(res.headers.get("X-Rig-Version") ?? "-1");
    return { bytes, version };
  }

  async getPreview(): Promise<PreviewResponse> {
    const res = await this.request("/preview");
    const body = await res.json();
    return {
      x: b64ToBytes(body.x),
      y: b64ToBytes(body.y),
      z: b64ToBytes(body.z),
      version: body.version as number,
    };
  }

  async getCurve(): Promise<{ keyframes: KeyframeJson[]; skeleton: unknown }> {
    const res = await this.request("/curve");
    return (await res.json()) as { keyframes: KeyframeJson[]; skeleton: unknown };
  }

  insertKeyframe(t: number): Promise<number> {
    return this.post("/keyframe/insert", { t });
  }

  removeKeyframe(i: number): Promise<number> {
    return this.post("/keyframe/remove", { i });
  }

  rotateKeyframe(i: number, angle: number): Promise<number> {
    return this.post("/keyframe/rotate", { i, angle });
  }

  centerKeyframe(i: number, dx: number, dy: number): Promise<number> {
    return this.post("/keyframe/center", { i, dx, dy });
  }

  extentKeyframe(i: number, rx: number, ry: number): Promise<number> {
    return this.post("/keyframe/extent", { i, rx, ry });
  }

  setEndpoints(points: Vec3[]): Promise<number> {
    return this.post("/endpoints", { points });
  }

  async saveSession(path: string): Promise<void> {
    await this.request("/save", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ path }),
    });
  }

  async exportVolume(pathPrefix: string): Promise<{ data_path: string; meta_path: string }> {
    const res = await this.request(`/export?path=${encodeURIComponent(pathPrefix)}`);
    return (await res.json()) as { data_path: string; meta_path: string };
  }
}
