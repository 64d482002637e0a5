/** Writes one snapshot directory per (visit, phase) in the manifest schema. */

import { createHash } from "node:crypto";
import { mkdirSync, renameSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type {
  Phase,
  ResourceEntry,
  SnapshotManifest,
  SubResource,
  VisitArtifacts,
} from "./types.js";
import { configLabel } from "./types.js";

export function sha256hex(data: Buffer): string {
  return createHash("sha256").update(data).digest("hex");
}

const RESOURCE_EXT: Record<"script" | "stylesheet", string> = {
  script: "js",
  stylesheet: "css",
};

export interface PhaseArtifacts {
  document: Buffer;
  subresources: SubResource[];
  screenshot?: Buffer;
}

export function writeSnapshotDir(
  dir: string,
  artifacts: PhaseArtifacts,
  meta: {
    pageUrl: string;
    engine: SnapshotManifest["engine_id"];
    uaMode: SnapshotManifest["ua_mode"];
    phase: Phase;
    visitIndex: 1 | 2;
    capturedAt?: string;
    httpStatus?: number;
  },
): SnapshotManifest {
  mkdirSync(join(dir, "resources"), { recursive: true });
  const resources: ResourceEntry[] = [];

  const add = (url: string, kind: ResourceEntry["kind"], path: string, body: Buffer, frameUrl?: string) => {
    writeFileSync(join(dir, path), body);
    const entry: ResourceEntry = {
      url,
      kind,
      path,
      digest: sha256hex(body),
      byte_len: body.length,
    };
    if (frameUrl !== undefined) entry.frame_url = frameUrl;
    resources.push(entry);
  };

  add(meta.pageUrl, "document", "page.html", artifacts.document);
  const seen = new Set<string>();
  const deduped: SubResource[] = [];
  for (const sub of artifacts.subresources) {
    if (seen.has(sub.url)) continue; // duplicate URLs keep the first body
    seen.add(sub.url);
    deduped.push(sub);
  }
  // manifest order independent of network arrival order
  deduped.sort((a, b) => (a.url < b.url ? -1 : a.url > b.url ? 1 : 0));
  for (const sub of deduped) {
    const path = `resources/${sha256hex(sub.body)}.${RESOURCE_EXT[sub.kind]}`;
    add(sub.url, sub.kind, path, sub.body, sub.frameUrl);
  }
  if (artifacts.screenshot !== undefined) {
    add(`${meta.pageUrl}#screenshot`, "screenshot", "screenshot.png", artifacts.screenshot);
  }

  const manifest: SnapshotManifest = {
    page_url: meta.pageUrl,
    engine_id: meta.engine,
    ua_mode: meta.uaMode,
    label: configLabel(meta.engine, meta.uaMode),
    phase: meta.phase,
    visit_index: meta.visitIndex,
    captured_at: meta.capturedAt ?? new Date().toISOString().replace(/\.\d{3}Z$/, "Z"),
    resources,
  };
  if (meta.httpStatus !== undefined) manifest.http_status = meta.httpStatus;
  if (meta.phase === "post_js") manifest.screenshot_full_page = true;

  const tmp = join(dir, "manifest.json.tmp");
  writeFileSync(tmp, JSON.stringify(manifest, null, 2));
  renameSync(tmp, join(dir, "manifest.json"));
  return manifest;
}

/** Writes both phase directories of one visit; returns the two paths. */
export function writeVisit(outputRoot: string, artifacts: VisitArtifacts): string[] {
  const label = configLabel(artifacts.engine, artifacts.uaMode);
  const dirs: string[] = [];
  const phases: [Phase, PhaseArtifacts][] = [
    ["pre_js", { document: artifacts.preDocument, subresources: artifacts.preSubresources }],
    ["post_js", {
      document: artifacts.postDocument,
      subresources: artifacts.postSubresources,
      screenshot: artifacts.screenshot,
    }],
  ];
  for (const [phase, phaseArtifacts] of phases) {
    const dir = join(outputRoot, `${label}_${phase}_v${artifacts.visitIndex}`);
    writeSnapshotDir(dir, phaseArtifacts, {
      pageUrl: artifacts.pageUrl,
      engine: artifacts.engine,
      uaMode: artifacts.uaMode,
      phase,
      visitIndex: artifacts.visitIndex,
      httpStatus: artifacts.httpStatus,
    });
    dirs.push(dir);
  }
  return dirs;
}
