import { readFile, writeFile } from "node:fs/promises";
import { join } from "node:path";

import { toImageArray, type ImageArray, type ImageLike } from "./image.js";
import { decodeNetpbm, encodeNetpbm } from "./netpbm.js";
import { makeRunDir, removeRunDir, runGazeopt } from "./runner.js";

export type Fixation = [number, number] | { x: number; y: number };

export interface FoveateOptions {
  /** Resolution falloff in degrees; omitted means the core default (0.63). */
  alpha?: number;
  /** Observer distance from the display (cm). */
  distanceCm?: number;
  /** Physical size of one pixel (cm). */
  pitchCm?: number;
  seed?: number;
  /** Keep artifacts (input, output, manifest) here instead of a temp dir. */
  runDir?: string;
}

function fixationArg(f: Fixation, index: number): string {
  const x = Array.isArray(f) ? f[0] : f?.x;
  const y = Array.isArray(f) ? f[1] : f?.y;
  if (typeof x !== "number" || typeof y !== "number" ||
      !Number.isFinite(x) || !Number.isFinite(y)) {
    throw new TypeError(
      `fixation ${index} must be [x, y] or {x, y} with finite numbers`);
  }
  return `${x},${y}`;
}

/**
 * Render an image as seen while fixating the given points.
 *
 * Pixels go to the core as a canonical binary PGM/PPM, the core CLI does all
 * computation, and the rendered file comes back decoded; the result is byte
 * for byte what `gazeopt foveate` writes for the same inputs. Fixations
 * outside the image make the core fail, which surfaces here as CliError.
 */
export async function foveate(
  image: ImageLike,
  fixations: Fixation[],
  options: FoveateOptions = {},
): Promise<ImageArray> {
  const img = toImageArray(image);
  if (!Array.isArray(fixations) || fixations.length === 0) {
    throw new TypeError("need at least one fixation");
  }
  const fixFlags = fixations.flatMap(
    (f, i) => ["--fixation", fixationArg(f, i)]);

  const runDir = options.runDir ?? await makeRunDir("gazeopt-foveate");
  const ownDir = options.runDir === undefined;
  try {
    const ext = img.channels === 1 ? "pgm" : "ppm";
    const inputPath = join(runDir, `input.${ext}`);
    const outName = `foveated.${ext}`;
    await writeFile(inputPath, encodeNetpbm(img));

    const args = ["foveate", inputPath, "--out", outName, ...fixFlags];
    if (options.alpha !== undefined) args.push("--alpha", String(options.alpha));
    if (options.distanceCm !== undefined) args.push("--distance-cm", String(options.distanceCm));
    if (options.pitchCm !== undefined) args.push("--pitch-cm", String(options.pitchCm));
    if (options.seed !== undefined) args.push("--seed", String(options.seed));
    args.push("--run-dir", runDir);
    await runGazeopt(args);

    return decodeNetpbm(new Uint8Array(await readFile(join(runDir, outName))));
  } finally {
    if (ownDir) await removeRunDir(runDir);
  }
}
