export { ApiClient, ApiError } from "./api.js";
export type {
  FetchLike,
  KeyframeJson,
  PreviewResponse,
  RigJson,
  RigResponse,
  SliceResponse,
  Vec3,
} from "./api.js";
export { EditorState, cumulativeArclengths } from "./editor.js";
export type { DragMode } from "./editor.js";
export { decodeGrayPng, meanAbsDiff } from "./png.js";
export type { GrayImage, Inflate } from "./png.js";
export { mountEditor, PreviewWidget, ScrubberWidget, SliceViewWidget } from "./widgets.js";
