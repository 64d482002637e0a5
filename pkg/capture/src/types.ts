/** Snapshot manifest schema shared with the analysis toolkit. */

export type Engine = "chromium" | "firefox" | "webkit";
export type UaMode = "standard" | "none";
export type Phase = "pre_js" | "post_js";
export type ResourceKind = "document" | "script" | "stylesheet" | "screenshot";

export interface ResourceEntry {
  url: string;
  kind: ResourceKind;
  path: string;
  digest: string;
  byte_len: number;
  /** extension: frame the response was fetched for (absent for main frame) */
  frame_url?: string;
}

export interface SnapshotManifest {
  page_url: string;
  engine_id: Engine;
  ua_mode: UaMode;
  label: string;
  phase: Phase;
  visit_index: 1 | 2;
  captured_at: string;
  resources: ResourceEntry[];
  http_status?: number;
  screenshot_full_page?: boolean;
}

export interface CaptureJob {
  pageUrl: string;
  engines: Engine[];
  uaModes: UaMode[];
  viewport: { width: number; height: number };
  /** seconds to wait after the load event before the post_js capture */
  postLoadWait: number;
  outputRoot: string;
}

export const DEFAULT_VIEWPORT = { width: 1920, height: 1080 };
export const DEFAULT_POST_LOAD_WAIT = 15;

export const ENGINE_LABELS: Record<Engine, string> = {
  chromium: "C",
  firefox: "F",
  webkit: "W",
};

export function configLabel(engine: Engine, mode: UaMode): string {
  return ENGINE_LABELS[engine] + (mode === "none" ? "N" : "");
}

/** Captured artifacts of one visit, before being written to disk. */
export interface VisitArtifacts {
  pageUrl: string;
  engine: Engine;
  uaMode: UaMode;
  visitIndex: 1 | 2;
  httpStatus?: number;
  preDocument: Buffer;
  preSubresources: SubResource[];
  postDocument: Buffer;
  postSubresources: SubResource[];
  screenshot: Buffer;
}

export interface SubResource {
  url: string;
  kind: "script" | "stylesheet";
  body: Buffer;
  frameUrl?: string;
}
