import { join } from "node:path";

import { parseFixationCsv, type FixationRecord } from "./fixations.js";
import { makeRunDir, removeRunDir, runGazeopt } from "./runner.js";

export interface ScanpathOptions {
  mode: "model" | "map" | "random";
  /** Trained chain checkpoint (model mode). */
  checkpoint?: string;
  /** Scene corpus JSON (model and random modes). */
  scenes?: string;
  /** Priority map image or CSV (map mode). */
  map?: string;
  /** Priority-map family; sets the default inhibition-of-return size. */
  source?: "deepgaze" | "gbvs" | "itti_koch" | "custom";
  preset?: string;
  initial?: [number, number];
  fixations?: number;
  /** Sequences to draw in random mode without scenes. */
  n?: number;
  iorDva?: number;
  smoothDva?: number;
  sceneId?: string;
  describeSamples?: number;
  fieldWidth?: number;
  fieldHeight?: number;
  distanceCm?: number;
  pitchCm?: number;
  seed?: number;
  threads?: number;
  /** Keep the CSV and manifest here instead of a temp dir. */
  runDir?: string;
}

function push(args: string[], flag: string, value: unknown): void {
  if (value !== undefined) args.push(flag, String(value));
}

/**
 * Generate fixation sequences via the core CLI and return the parsed rows.
 * Mode-specific input requirements are enforced by the core; a missing
 * checkpoint or map surfaces as CliError with the core's message.
 */
export async function scanpath(options: ScanpathOptions): Promise<FixationRecord[]> {
  const runDir = options.runDir ?? await makeRunDir("gazeopt-scanpath");
  const ownDir = options.runDir === undefined;
  try {
    const outName = "scanpaths.csv";
    const args = ["scanpath", "--mode", options.mode, "--out", outName];
    push(args, "--checkpoint", options.checkpoint);
    push(args, "--scenes", options.scenes);
    push(args, "--map", options.map);
    push(args, "--source", options.source);
    push(args, "--preset", options.preset);
    if (options.initial !== undefined) {
      args.push("--initial", `${options.initial[0]},${options.initial[1]}`);
    }
    push(args, "--fixations", options.fixations);
    push(args, "--n", options.n);
    push(args, "--ior-dva", options.iorDva);
    push(args, "--smooth-dva", options.smoothDva);
    push(args, "--scene-id", options.sceneId);
    push(args, "--describe-samples", options.describeSamples);
    push(args, "--field-width", options.fieldWidth);
    push(args, "--field-height", options.fieldHeight);
    push(args, "--distance-cm", options.distanceCm);
    push(args, "--pitch-cm", options.pitchCm);
    push(args, "--seed", options.seed);
    push(args, "--threads", options.threads);
    args.push("--run-dir", runDir);
    await runGazeopt(args);
    return parseFixationCsv(join(runDir, outName));
  } finally {
    if (ownDir) await removeRunDir(runDir);
  }
}
