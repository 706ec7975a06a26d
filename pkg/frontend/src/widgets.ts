/**
 * Plain-DOM widgets wiring EditorState to the page: a parameter slider
 * with keyframe jump buttons, the 2D slice view with drag gestures, and
 * the three straightened preview projections.
 *
 * All numerics stay server-side; this file only draws overlay state.
 */

import { EditorState } from "./editor.js";

const SLIDER_STEPS = 1000;

function pngUrl(bytes: Uint8Array): string {
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  return `data:image/png;base64,${btoa(bin)}`;
}

export class ScrubberWidget {
  readonly root: HTMLDivElement;
  private readonly slider: HTMLInputElement;
  private readonly label: HTMLSpanElement;

  constructor(private readonly state: EditorState, onChange: () => void) {
    this.root = document.createElement("div");
    this.root.className = "unbend-scrubber";

    const back = document.createElement("button");
    back.textContent = "|<";
    back.title = "previous keyframe";
    back.addEventListener("click", () => {
      void this.state.jumpToKeyframe(-1).then(onChange);
    });

    this.slider = document.createElement("input");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = String(SLIDER_STEPS);
    this.slider.value = "0";
    this.slider.addEventListener("input", () => {
      const frac = Number(this.slider.value) / SLIDER_STEPS;
      void this.state.scrub(frac * this.state.totalArclength).then(onChange);
    });

    const fwd = document.createElement("button");
    fwd.textContent = ">|";
    fwd.title = "next keyframe";
    fwd.addEventListener("click", () => {
      void this.state.jumpToKeyframe(1).then(onChange);
    });

    const add = document.createElement("button");
    add.textContent = "+ keyframe";
    add.addEventListener("click", () => {
      void this.state.addKeyframeHere().then(onChange);
    });

    const remove = document.createElement("button");
    remove.textContent = "- keyframe";
    remove.addEventListener("click", () => {
      void this.state.removeSelected().then(onChange);
    });

    this.label = document.createElement("span");
    this.root.append(back, this.slider, fwd, add, remove, this.label);
  }

  sync(): void {
    const frac = this.state.totalArclength
      ? this.state.t / this.state.totalArclength
      : 0;
    this.slider.value = String(Math.round(frac * SLIDER_STEPS));
    this.label.textContent = ` t = ${this.state.t.toFixed(2)} / ${this.state.totalArclength.toFixed(2)}`;
  }
}

export class SliceViewWidget {
  readonly root: HTMLDivElement;
  private readonly img: HTMLImageElement;
  private dragStart: { x: number; y: number; shift: boolean } | null = null;

  constructor(private readonly state: EditorState, onChange: () => void) {
    this.root = document.createElement("div");
    this.root.className = "unbend-slice";
    this.img = document.createElement("img");
    this.img.draggable = false;
    this.root.appendChild(this.img);

    this.img.addEventListener("mousedown", (ev) => {
      this.dragStart = { x: ev.offsetX, y: ev.offsetY, shift: ev.shiftKey };
    });
    this.img.addEventListener("mouseup", (ev) => {
      if (!this.dragStart) return;
      const start = this.dragStart;
      this.dragStart = null;
      const rect = this.img.getBoundingClientRect();
      const cx = rect.width / 2;
      const cy = rect.height / 2;
      if (start.shift) {
        // angle swept about the slice center
        const a0 = Math.atan2(start.y - cy, start.x - cx);
        const a1 = Math.atan2(ev.offsetY - cy, ev.offsetX - cx);
        void this.state.rotateGesture(a1 - a0).then(onChange);
      } else {
        // pixel displacement in slice-plane units (u right, v down)
        const sx = (2 * this.sliceHalfWidth()) / rect.width;
        const sy = (2 * this.sliceHalfHeight()) / rect.height;
        const dx = (ev.offsetX - start.x) * sx;
        const dy = (ev.offsetY - start.y) * sy;
        void this.state.dragCenter(dx, dy).then(onChange);
      }
    });
  }

  private sliceHalfWidth(): number {
    const kf = this.state.selected !== null
      ? this.state.rig?.keyframes[this.state.selected]
      : undefined;
    return kf?.extent[0] ?? 1;
  }

  private sliceHalfHeight(): number {
    const kf = this.state.selected !== null
      ? this.state.rig?.keyframes[this.state.selected]
      : undefined;
    return kf?.extent[1] ?? 1;
  }

  sync(): void {
    if (this.state.slice) {
      this.img.src = pngUrl(this.state.slice.bytes);
    }
  }
}

export class PreviewWidget {
  readonly root: HTMLDivElement;
  private readonly imgs: Record<"x" | "y" | "z", HTMLImageElement>;

  constructor(private readonly state: EditorState) {
    this.root = document.createElement("div");
    this.root.className = "unbend-preview";
    this.imgs = {
      x: document.createElement("img"),
      y: document.createElement("img"),
      z: document.createElement("img"),
    };
    for (const axis of ["x", "y", "z"] as const) {
      const fig = document.createElement("figure");
      const cap = document.createElement("figcaption");
      cap.textContent = `along ${axis}`;
      fig.append(this.imgs[axis], cap);
      this.root.appendChild(fig);
    }
  }

  sync(): void {
    if (!this.state.preview) return;
    for (const axis of ["x", "y", "z"] as const) {
      this.imgs[axis].src = pngUrl(this.state.preview[axis]);
    }
  }
}

/** Mount the three-widget editor onto a container element. */
export function mountEditor(state: EditorState, container: HTMLElement): () => void {
  const preview = new PreviewWidget(state);
  const slice = new SliceViewWidget(state, syncAll);
  const scrubber = new ScrubberWidget(state, syncAll);

  function syncAll(): void {
    scrubber.sync();
    slice.sync();
    preview.sync();
    void state.refreshPreview().then(() => preview.sync());
  }

  container.append(slice.root, preview.root, scrubber.root);
  void state
    .refresh()
    .then(() => state.scrub(0))
    .then(syncAll);
  return syncAll;
}
