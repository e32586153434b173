import { join } from "node:path";

import { parseReport, type EvaluationReport } from "./report.js";
import { makeRunDir, removeRunDir, runGazeopt } from "./runner.js";

export interface EvaluateOptions {
  /** Human fixation CSV. */
  human: string;
  /** Model fixation CSVs; each file's source column labels its table. */
  models?: string[];
  /** Scene corpus JSON for mask rasterization. */
  scenes?: string;
  /** Directory of scene__category.png masks (alternative to scenes). */
  masks?: string;
  humanSource?: string;
  /** Source whose misfit normalizes the scores (core default: random). */
  baseline?: string;
  /** Hit tolerance around region boundaries (DVA). */
  tolerance?: number;
  bootstrap?: number;
  fieldWidth?: number;
  fieldHeight?: number;
  distanceCm?: number;
  pitchCm?: number;
  seed?: number;
  threads?: number;
  /** Where the report and manifest land; a kept temp dir when omitted. */
  runDir?: string;
}

export interface EvaluateResult {
  report: EvaluationReport;
  reportPath: string;
  /** Run directory holding the report and its manifest; caller-owned. */
  runDir: string;
}

function push(args: string[], flag: string, value: unknown): void {
  if (value !== undefined) args.push(flag, String(value));
}

/**
 * Score model scanpaths against human data via the core CLI.
 *
 * The run directory (with report.json and manifest.json) is returned rather
 * than deleted so the report can feed plot_report, which reads the manifest
 * beside it to find the fixation CSVs for heatmap panels.
 */
export async function evaluate(options: EvaluateOptions): Promise<EvaluateResult> {
  const runDir = options.runDir ?? await makeRunDir("gazeopt-eval");
  const ownDir = options.runDir === undefined;
  const outName = "report.json";
  const args = ["eval", "--human", options.human, "--out", outName];
  for (const model of options.models ?? []) {
    args.push("--model", model);
  }
  push(args, "--scenes", options.scenes);
  push(args, "--masks", options.masks);
  push(args, "--human-source", options.humanSource);
  push(args, "--baseline", options.baseline);
  push(args, "--tolerance", options.tolerance);
  push(args, "--bootstrap", options.bootstrap);
  push(args, "--field-width", options.fieldWidth);
  push(args, "--field-height", options.fieldHeight);
  push(args, "--distance-cm", options.distanceCm);
  push(args, "--pitch-cm", options.pitchCm);
  push(args, "--seed", options.seed);
  push(args, "--threads", options.threads);
  args.push("--run-dir", runDir);
  try {
    await runGazeopt(args);
  } catch (err) {
    if (ownDir) await removeRunDir(runDir);
    throw err;
  }

  const reportPath = join(runDir, outName);
  return { report: parseReport(reportPath), reportPath, runDir };
}
