import { readFileSync } from "node:fs";

import Papa from "papaparse";

import { FormatError } from "./errors.js";

/** One row of a fixation CSV. */
export interface FixationRecord {
  sceneId: string;
  source: string;
  /** null when the CSV column is empty (single anonymous observer). */
  subjectId: string | null;
  index: number;
  xPx: number;
  yPx: number;
}

const HEADER = ["scene_id", "source", "subject_id", "index", "x_px", "y_px"];

function parseNumber(text: string, column: string, line: number): number {
  const value = Number(text);
  if (text.trim() === "" || !Number.isFinite(value)) {
    throw new FormatError(`line ${line}: ${column} is not a number: ${JSON.stringify(text)}`);
  }
  return value;
}

/** Parse a fixation CSV in the core's six-column format. */
export function parseFixationCsv(path: string): FixationRecord[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text, { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new FormatError(`${path}: ${first.message} (row ${first.row})`);
  }
  const rows = parsed.data;
  if (rows.length === 0 || rows[0].join(",") !== HEADER.join(",")) {
    throw new FormatError(
      `${path}: expected header ${HEADER.join(",")}, got ${JSON.stringify(rows[0] ?? [])}`);
  }
  const records: FixationRecord[] = [];
  for (let i = 1; i < rows.length; i++) {
    const row = rows[i];
    if (row.length !== HEADER.length) {
      throw new FormatError(
        `${path}: line ${i + 1}: expected ${HEADER.length} columns, got ${row.length}`);
    }
    records.push({
      sceneId: row[0],
      source: row[1],
      subjectId: row[2] === "" ? null : row[2],
      index: parseNumber(row[3], "index", i + 1),
      xPx: parseNumber(row[4], "x_px", i + 1),
      yPx: parseNumber(row[5], "y_px", i + 1),
    });
  }
  return records;
}

/** True when the file exists and starts with the fixation CSV header. */
export function looksLikeFixationCsv(path: string): boolean {
  let head: string;
  try {
    head = readFileSync(path, "utf8").slice(0, 256);
  } catch {
    return false;
  }
  return head.split(/\r?\n/, 1)[0] === HEADER.join(",");
}
