#!/usr/bin/env node
/** capture --url <u> --engines <list> --modes <list> --out <dir> [--wait 15] [--viewport 1920x1080] */

import { parseArgs } from "node:util";

import { capturePage } from "./capture.js";
import type { CaptureJob, Engine, UaMode } from "./types.js";
import { DEFAULT_POST_LOAD_WAIT, DEFAULT_VIEWPORT } from "./types.js";

const ENGINES = new Set(["chromium", "firefox", "webkit"]);
const MODES = new Set(["standard", "none"]);

export function parseJob(argv: string[]): CaptureJob {
  const { values } = parseArgs({
    args: argv,
    options: {
      url: { type: "string" },
      engines: { type: "string", default: "chromium,firefox,webkit" },
      modes: { type: "string", default: "standard,none" },
      out: { type: "string" },
      wait: { type: "string", default: String(DEFAULT_POST_LOAD_WAIT) },
      viewport: { type: "string", default: `${DEFAULT_VIEWPORT.width}x${DEFAULT_VIEWPORT.height}` },
    },
  });
  if (!values.url || !values.out) {
    throw new Error("usage: capture --url <u> --out <dir> [--engines ...] [--modes ...] [--wait N] [--viewport WxH]");
  }
  const engines = values.engines!.split(",").map((s) => s.trim()) as Engine[];
  for (const e of engines) {
    if (!ENGINES.has(e)) throw new Error(`unknown engine: ${e}`);
  }
  const uaModes = values.modes!.split(",").map((s) => s.trim()) as UaMode[];
  for (const m of uaModes) {
    if (!MODES.has(m)) throw new Error(`unknown mode: ${m}`);
  }
  const wait = Number(values.wait);
  if (!(wait >= 0)) throw new Error("--wait must be >= 0");
  const [w, h] = values.viewport!.split("x").map(Number);
  if (!(w > 0 && h > 0)) throw new Error("--viewport must look like 1920x1080");
  return {
    pageUrl: values.url,
    engines,
    uaModes,
    viewport: { width: w, height: h },
    postLoadWait: wait,
    outputRoot: values.out,
  };
}

async function main(): Promise<number> {
  let job: CaptureJob;
  try {
    job = parseJob(process.argv.slice(2));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const dirs = await capturePage(job);
    for (const d of dirs) console.log(d);
    console.log(`captured ${dirs.length} snapshot directories`);
    return 0;
  } catch (err) {
    console.error(String(err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main().then((code) => process.exit(code));
}
