import { execFileSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** 32x32 all-white PNG. */
export const WHITE_PNG = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAACAAAAAgCAIAAAD8GO2jAAAAKUlEQVR4nO3NMQEAAAjDMMC/52ECvlRA00nqs3m9AwAAAAAAAAAAgMMWx/EDPS4YA2MAAAAASUVORK5CYII=",
  "base64",
);

/** 32x32 white PNG with a black rectangle. */
export const BOXED_PNG = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAACAAAAAgCAIAAAD8GO2jAAAAPklEQVR4nGP8//8/Ay0BE01NH7Vg1AKqABZMIUZGRrKNw8xVQz+IRi0YtWDUAjpYwDhaJ49aMGrBqAWDwAIAwQMJO1Lma50AAAAASUVORK5CYII=",
  "base64",
);

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export interface ToolResult {
  status: number;
  stdout: string;
  stderr: string;
}

/** Runs the Python analysis CLI; requires the uaradar package installed. */
export function uaradar(...args: string[]): ToolResult {
  try {
    const stdout = execFileSync("python3", ["-m", "uaradar.cli", ...args], {
      encoding: "utf-8",
      stdio: ["ignore", "pipe", "pipe"],
    });
    return { status: 0, stdout, stderr: "" };
  } catch (err) {
    const e = err as { status?: number; stdout?: string; stderr?: string };
    return {
      status: e.status ?? 1,
      stdout: String(e.stdout ?? ""),
      stderr: String(e.stderr ?? ""),
    };
  }
}

export function pythonToolingAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import uaradar"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}
