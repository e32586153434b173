import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CliError } from "./errors.js";

export interface RunResult {
  stdout: string;
  stderr: string;
}

/** Core executable; override with GAZEOPT_BIN for virtualenvs off PATH. */
export function gazeoptBinary(): string {
  return process.env.GAZEOPT_BIN ?? "gazeopt";
}

const EXIT_KIND: Record<number, string> = {
  2: "usage error",
  3: "data error",
  4: "numeric failure",
};

/**
 * Run one core CLI command asynchronously; the event loop stays free while
 * the core computes. Non-zero exits become CliError with stderr attached.
 */
export function runGazeopt(args: string[]): Promise<RunResult> {
  return new Promise((resolve, reject) => {
    execFile(
      gazeoptBinary(),
      args,
      { maxBuffer: 64 * 1024 * 1024 },
      (error, stdout, stderr) => {
        if (error === null) {
          resolve({ stdout, stderr });
          return;
        }
        const anyErr = error as NodeJS.ErrnoException;
        if (anyErr.code === "ENOENT") {
          reject(new CliError(
            `gazeopt executable not found (looked for ${JSON.stringify(gazeoptBinary())}); ` +
            "install the core package or set GAZEOPT_BIN",
            -1, ""));
          return;
        }
        const exitCode = typeof anyErr.code === "number" ? anyErr.code : -1;
        const kind = EXIT_KIND[exitCode] ?? "failure";
        const detail = stderr.trim() || stdout.trim() || error.message;
        reject(new CliError(
          `gazeopt ${args[0] ?? ""} ${kind} (exit ${exitCode}): ${detail}`,
          exitCode, stderr));
      });
  });
}

/** Make a private run directory for one CLI call. */
export function makeRunDir(prefix: string): Promise<string> {
  return mkdtemp(join(tmpdir(), `${prefix}-`));
}

export function removeRunDir(dir: string): Promise<void> {
  return rm(dir, { recursive: true, force: true });
}
