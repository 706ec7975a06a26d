/**
 * Editor view state: the scrubber parameter, the selected keyframe, the
 * latest slice/preview images, and a local mirror of the server's rig.
 *
 * Invariants enforced here:
 *  - at most one slice request in flight; rapid scrubs coalesce to the
 *    latest requested parameter,
 *  - a stale image (older rig version than the one displayed) is never
 *    accepted after a newer one arrived,
 *  - mutations run strictly one at a time and the rig mirror is refreshed
 *    from GET /rig after each, so overlay state never diverges,
 *  - any gesture at a non-keyframe parameter first inserts a keyframe
 *    there (insert-on-edit).
 */

import { ApiClient, KeyframeJson, PreviewResponse, RigJson, SliceResponse } from "./api.js";

export type DragMode = "none" | "center" | "rotate" | "extent-corner";

const KEYFRAME_SNAP_EPS = 1e-6;

/** Chord lengths accumulated over keyframe positions (overlay geometry). */
export function cumulativeArclengths(rig: RigJson): number[] {
  const d: number[] = [0];
  const kfs = rig.keyframes;
  for (let i = 1; i < kfs.length; i++) {
    const a = kfs[i - 1]!.e;
    const b = kfs[i]!.e;
    const seg = Math.hypot(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
    d.push(d[i - 1]! + seg);
  }
  return d;
}

export class EditorState {
  t = 0;
  selected: number | null = null;
  dragMode: DragMode = "none";
  slice: SliceResponse | null = null;
  preview: PreviewResponse | null = null;
  rig: RigJson | null = null;
  rigVersion = -1;
  totalArclength = 0;
  lastError: string | null = null;

  readonly sliceSize: { w: number; h: number };

  private pendingSliceT: number | null = null;
  private sliceInFlight = false;
  private sliceSettled: Promise<void> = Promise.resolve();
  private resolveSettled: (() => void) | null = null;
  private mutationChain: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly api: ApiClient,
    options?: { sliceWidth?: number; sliceHeight?: number },
  ) {
    this.sliceSize = {
      w: options?.sliceWidth ?? 256,
      h: options?.sliceHeight ?? 256,
    };
  }

  /** Pull the rig mirror (and arclength range) from the server. */
  async refresh(): Promise<void> {
    const res = await this.api.getRig();
    this.rig = res.rig;
    this.rigVersion = res.version;
    this.totalArclength = res.total_arclength;
  }

  // ------------------------------------------------------------------
  // scrubbing

  /**
   * Move the parameter slider. The value is clamped to the curve range;
   * slice fetches are coalesced so only one request is in flight.
   * Returns a promise that resolves once the displayed slice is current.
   */
  scrub(t: number): Promise<void> {
    this.t = Math.min(Math.max(t, 0), this.totalArclength);
    this.queueSliceFetch();
    return this.sliceSettled;
  }

  /** Snap to the nearest keyframe parameter in the given direction. */
  jumpToKeyframe(direction: -1 | 1): Promise<void> {
    if (!this.rig) return Promise.resolve();
    const d = cumulativeArclengths(this.rig);
    const eps = 1e-9 * Math.max(1, this.totalArclength);
    const candidates =
      direction > 0 ? d.filter((x) => x > this.t + eps) : d.filter((x) => x < this.t - eps);
    if (candidates.length === 0) return this.sliceSettled;
    const target = direction > 0 ? Math.min(...candidates) : Math.max(...candidates);
    return this.scrub(target);
  }

  private queueSliceFetch(): void {
    this.pendingSliceT = this.t;
    if (this.sliceInFlight) return;
    if (!this.resolveSettled) {
      this.sliceSettled = new Promise((resolve) => {
        this.resolveSettled = resolve;
      });
    }
    void this.drainSliceQueue();
  }

  private async drainSliceQueue(): Promise<void> {
    this.sliceInFlight = true;
    try {
      while (this.pendingSliceT !== null) {
        const t = this.pendingSliceT;
        this.pendingSliceT = null;
        try {
          const slice = await this.api.getSlice(t, this.sliceSize.w, this.sliceSize.h);
          this.acceptSlice(slice);
        } catch (err) {
          this.lastError = String(err); // keep the last good image
        }
      }
    } finally {
      this.sliceInFlight = false;
      this.resolveSettled?.();
      this.resolveSettled = null;
    }
  }

  private acceptSlice(slice: SliceResponse): void {
    if (this.slice && slice.version < this.slice.version) {
      return; // stale: rendered against an older rig than what we show
    }
    this.slice = slice;
  }

  // ------------------------------------------------------------------
  // gestures

  /**
   * Index of the keyframe at the current parameter, inserting one when
   * the scrubber sits between keyframes (insert-on-edit).
   */
  private async ensureKeyframeAtT(): Promise<number> {
    if (!this.rig) await this.refresh();
    const d = cumulativeArclengths(this.rig!);
    const eps = KEYFRAME_SNAP_EPS * Math.max(1, this.totalArclength);
    for (let i = 0; i < d.length; i++) {
      if (Math.abs(d[i]! - this.t) <= eps) {
        this.selected = i;
        return i;
      }
    }
    await this.api.insertKeyframe(this.t);
    await this.refresh();
    const d2 = cumulativeArclengths(this.rig!);
    let best = 0;
    for (let i = 1; i < d2.length; i++) {
      if (Math.abs(d2[i]! - this.t) < Math.abs(d2[best]! - this.t)) best = i;
    }
    this.selected = best;
    return best;
  }

  private enqueueMutation<T>(run: () => Promise<T>): Promise<T> {
    const next = this.mutationChain.then(run, run);
    this.mutationChain = next.catch(() => undefined);
    return next;
  }

  private async performGesture(
    mode: DragMode,
    send: (index: number) => Promise<number>,
  ): Promise<void> {
    await this.enqueueMutation(async () => {
      this.dragMode = mode;
      try {
        const index = await this.ensureKeyframeAtT();
        await send(index);
        await this.refresh();
      } catch (err) {
        this.lastError = String(err);
        await this.refresh(); // roll the overlay back to the server's rig
        throw err;
      } finally {
        this.dragMode = "none";
      }
    });
    await this.scrub(this.t); // refetch the slice at the new version
  }

  /** Drag the center point: move the keyframe by (dx, dy) slice units. */
  dragCenter(dx: number, dy: number): Promise<void> {
    return this.performGesture("center", (i) => this.api.centerKeyframe(i, dx, dy));
  }

  /** Shift-drag: rotate u/v about the normal by the swept angle. */
  rotateGesture(angle: number): Promise<void> {
    return this.performGesture("rotate", (i) => this.api.rotateKeyframe(i, angle));
  }

  /** Drag a cage corner to the new half-widths. */
  dragExtentCorner(rx: number, ry: number): Promise<void> {
    return this.performGesture("extent-corner", (i) => this.api.extentKeyframe(i, rx, ry));
  }

  /** Explicit add-keyframe button (control widget). */
  addKeyframeHere(): Promise<void> {
    return this.enqueueMutation(async () => {
      await this.ensureKeyframeAtT();
    });
  }

  removeSelected(): Promise<void> {
    return this.enqueueMutation(async () => {
      if (this.selected === null) return;
      try {
        await this.api.removeKeyframe(this.selected);
        this.selected = null;
      } catch (err) {
        this.lastError = String(err);
        throw err;
      } finally {
        await this.refresh();
      }
    });
  }

  /** Refetch the preview projections; stale versions are ignored. */
  async refreshPreview(): Promise<void> {
    const preview = await this.api.getPreview();
    if (this.preview && preview.version < this.preview.version) return;
    this.preview = preview;
  }

  /** Overlay geometry for drawing: keyframe markers along the slider. */
  keyframeMarkers(): { index: number; t: number; keyframe: KeyframeJson }[] {
    if (!this.rig) return [];
    const d = cumulativeArclengths(this.rig);
    return this.rig.keyframes.map((keyframe, index) => ({
      index,
      t: d[index]!,
      keyframe,
    }));
  }
}
