/**
 * Visit a URL with standard and None configurations across browser engines
 * and write conforming snapshot directories for both phases of both visits.
 *
 * One request to one origin with one engine at a time; engine/mode pairs
 * run strictly sequentially (politeness over speed).
 */

import { rmSync } from "node:fs";
import * as playwright from "playwright";

import { noneModeInitScript, NONE_UA } from "./overrides.js";
import { writeVisit } from "./snapshotWriter.js";
import type { CaptureJob, Engine, SubResource, UaMode, VisitArtifacts } from "./types.js";
import { configLabel } from "./types.js";

export class EngineUnavailable extends Error {}
export class NavigationTimeout extends Error {}

const NAV_TIMEOUT_MS = 30_000;

export async function capturePage(job: CaptureJob): Promise<string[]> {
  const dirs: string[] = [];
  for (const engine of job.engines) {
    let browser: playwright.Browser;
    try {
      browser = await playwright[engine].launch({ headless: true });
    } catch (err) {
      throw new EngineUnavailable(`${engine}: ${String(err)}`);
    }
    try {
      for (const mode of job.uaModes) {
        const written: string[] = [];
        try {
          for (const visitIndex of [1, 2] as const) {
            const artifacts = await captureVisit(browser, engine, mode, visitIndex, job);
            written.push(...writeVisit(job.outputRoot, artifacts));
          }
        } catch (err) {
          // all-or-nothing per (engine, mode): drop partial output
          for (const dir of written) rmSync(dir, { recursive: true, force: true });
          throw err;
        }
        dirs.push(...written);
      }
    } finally {
      await browser.close();
    }
  }
  return dirs;
}

async function captureVisit(
  browser: playwright.Browser,
  engine: Engine,
  uaMode: UaMode,
  visitIndex: 1 | 2,
  job: CaptureJob,
): Promise<VisitArtifacts> {
  const context = await browser.newContext({
    viewport: job.viewport,
    userAgent: uaMode === "none" ? NONE_UA : undefined,
  });
  try {
    if (uaMode === "none") {
      await context.addInitScript(noneModeInitScript());
    }
    const page = await context.newPage();

    const preSubresources: SubResource[] = [];
    const postSubresources: SubResource[] = [];
    const pending: Promise<void>[] = [];
    let domContentLoaded = false;
    let mainStatus: number | undefined;
    let rawDocument: Buffer | undefined;

    page.on("response", (response) => {
      const wasPre = !domContentLoaded; // classified at event time
      pending.push(
        collectResponse(response, page, job.pageUrl).then((hit) => {
          if (hit === undefined) return;
          if (hit.kind === "document") {
            rawDocument = hit.body;
            mainStatus = hit.status;
            return;
          }
          const sub: SubResource = {
            url: hit.url,
            kind: hit.kind,
            body: hit.body,
            frameUrl: hit.frameUrl,
          };
          postSubresources.push(sub);
          if (wasPre) preSubresources.push(sub);
        }),
      );
    });

    let response: playwright.Response | null;
    try {
      response = await page.goto(job.pageUrl, {
        waitUntil: "domcontentloaded",
        timeout: NAV_TIMEOUT_MS,
      });
    } catch (err) {
      throw new NavigationTimeout(`${configLabel(engine, uaMode)} visit ${visitIndex}: ${String(err)}`);
    }
    domContentLoaded = true;
    if (response !== null) {
      try {
        rawDocument = Buffer.from(await response.body());
        mainStatus = response.status();
      } catch {
        // fall back to any document response already collected
      }
    }

    await page.waitForLoadState("load", { timeout: NAV_TIMEOUT_MS });
    await page.waitForTimeout(job.postLoadWait * 1000);
    await Promise.all(pending);

    const postDocument = Buffer.from(await page.content(), "utf-8");
    const screenshot = await page.screenshot({ fullPage: true, type: "png" });

    return {
      pageUrl: job.pageUrl,
      engine,
      uaMode,
      visitIndex,
      httpStatus: mainStatus,
      preDocument: rawDocument ?? Buffer.alloc(0),
      preSubresources: [...preSubresources],
      postDocument,
      postSubresources: [...postSubresources],
      screenshot,
    };
  } finally {
    await context.close();
  }
}

async function collectResponse(
  response: playwright.Response,
  page: playwright.Page,
  pageUrl: string,
): Promise<
  | { kind: "document"; url: string; body: Buffer; status: number }
  | { kind: "script" | "stylesheet"; url: string; body: Buffer; status: number; frameUrl?: string }
  | undefined
> {
  const request = response.request();
  const type = request.resourceType();
  const frame = request.frame();
  try {
    if (type === "document" && frame === page.mainFrame()) {
      return {
        kind: "document",
        url: response.url(),
        body: Buffer.from(await response.body()),
        status: response.status(),
      };
    }
    if (type === "script" || type === "stylesheet") {
      const frameUrl = frame === page.mainFrame() ? undefined : frame.url();
      return {
        kind: type,
        url: response.url(),
        body: Buffer.from(await response.body()),
        status: response.status(),
        frameUrl,
      };
    }
  } catch {
    // body unavailable (redirect, cancelled request): skip the resource
  }
  return undefined;
}
