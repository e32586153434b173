import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { CliError } from "../src/errors.js";
import { scanpath } from "../src/scanpath.js";

const workDir = mkdtempSync(join(tmpdir(), "scanpath-"));
afterAll(() => rmSync(workDir, { recursive: true, force: true }));

const DESK = { distanceCm: 115, pitchCm: 1.0 };

describe("scanpath random mode", () => {
  it("returns parsed rows for every drawn sequence", async () => {
    const rows = await scanpath({
      mode: "random", n: 2, fixations: 3,
      fieldWidth: 64, fieldHeight: 64, seed: 6, ...DESK,
    });
    expect(rows).toHaveLength(6);
    expect(new Set(rows.map((r) => r.sceneId))).toEqual(
      new Set(["random_0000", "random_0001"]));
    for (const row of rows) {
      expect(row.source).toBe("random");
      expect(row.subjectId).toBeNull();
      expect(row.xPx).toBeGreaterThanOrEqual(0);
      expect(row.xPx).toBeLessThan(64);
      expect(row.yPx).toBeLessThan(64);
    }
    expect(rows.slice(0, 3).map((r) => r.index)).toEqual([0, 1, 2]);
  });

  it("is reproducible for one seed", async () => {
    const opts = {
      mode: "random" as const, n: 1, fixations: 4,
      fieldWidth: 96, fieldHeight: 64, seed: 11, ...DESK,
    };
    expect(await scanpath(opts)).toEqual(await scanpath(opts));
  });
});

describe("scanpath map mode", () => {
  it("labels rows with the map family and the map stem", async () => {
    const mapPath = join(workDir, "peaks.csv");
    const rows8 = Array.from({ length: 8 }, (_, r) =>
      Array.from({ length: 8 }, (_, c) => (r === 2 && c === 5 ? 9.0 : r === 6 && c === 1 ? 7.0 : 0.1)));
    writeFileSync(mapPath, rows8.map((row) => row.join(",")).join("\n") + "\n");

    const rows = await scanpath({
      mode: "map", map: mapPath, source: "deepgaze",
      fixations: 2, seed: 8, ...DESK,
    });
    expect(rows).toHaveLength(2);
    expect(rows.every((r) => r.source === "deepgaze")).toBe(true);
    expect(rows.every((r) => r.sceneId === "peaks")).toBe(true);
  });
});

describe("scanpath error mapping", () => {
  it("surfaces a missing checkpoint as a data error", async () => {
    await expect(scanpath({
      mode: "model", checkpoint: join(workDir, "absent.ckpt"),
      scenes: join(workDir, "absent.json"), seed: 0,
    })).rejects.toMatchObject({ exitCode: 3 });
    await expect(scanpath({
      mode: "model", checkpoint: join(workDir, "absent.ckpt"),
      scenes: join(workDir, "absent.json"), seed: 0,
    })).rejects.toThrow(CliError);
  });
});
