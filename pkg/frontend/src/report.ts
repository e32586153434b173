import { readFileSync } from "node:fs";

import { FormatError, ReportFormatError } from "./errors.js";

export interface SourceTable {
  categories: string[];
  mean: number[];
  se: number[];
  /** Images contributing to each category, keyed by category name. */
  nImages: Record<string, number>;
  nGroups: number;
}

export interface EvaluationReport {
  tables: Record<string, SourceTable>;
  /** Per-source misfit scores, e.g. metrics.model.nnll. */
  metrics: Record<string, Record<string, number>>;
  notes: string[];
  bootstrapCi?: Record<string, Record<string, [number, number]>>;
  toleranceDva?: number;
}

function isObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function requireField(obj: Record<string, unknown>, key: string, where: string): unknown {
  if (!(key in obj)) {
    throw new ReportFormatError(`${where} missing field '${key}'`);
  }
  return obj[key];
}

function numberArray(value: unknown, where: string): number[] {
  if (!Array.isArray(value)) {
    throw new ReportFormatError(`${where} must be an array of numbers`);
  }
  return value.map((v, i) => {
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new ReportFormatError(`${where}[${i}] must be a finite number`);
    }
    return v;
  });
}

function stringArray(value: unknown, where: string): string[] {
  if (!Array.isArray(value)) {
    throw new ReportFormatError(`${where} must be an array of strings`);
  }
  return value.map((v, i) => {
    if (typeof v !== "string") {
      throw new ReportFormatError(`${where}[${i}] must be a string`);
    }
    return v;
  });
}

function parseTable(value: unknown, where: string): SourceTable {
  if (!isObject(value)) {
    throw new ReportFormatError(`${where} must be an object`);
  }
  const categories = stringArray(requireField(value, "categories", where), `${where}.categories`);
  const mean = numberArray(requireField(value, "mean", where), `${where}.mean`);
  const se = numberArray(requireField(value, "se", where), `${where}.se`);
  if (mean.length !== categories.length || se.length !== categories.length) {
    throw new ReportFormatError(
      `${where}: mean/se lengths (${mean.length}/${se.length}) ` +
      `do not match ${categories.length} categories`);
  }
  const nImagesRaw = requireField(value, "n_images", where);
  if (!isObject(nImagesRaw)) {
    throw new ReportFormatError(`${where}.n_images must map categories to counts`);
  }
  const nImages: Record<string, number> = {};
  for (const [cat, count] of Object.entries(nImagesRaw)) {
    if (typeof count !== "number" || !Number.isFinite(count)) {
      throw new ReportFormatError(`${where}.n_images['${cat}'] must be a number`);
    }
    nImages[cat] = count;
  }
  const nGroups = requireField(value, "n_groups", where);
  if (typeof nGroups !== "number") {
    throw new ReportFormatError(`${where}.n_groups must be a number`);
  }
  return { categories, mean, se, nImages, nGroups };
}

function parseCi(value: unknown, where: string): Record<string, Record<string, [number, number]>> {
  if (!isObject(value)) {
    throw new ReportFormatError(`${where} must be an object`);
  }
  const out: Record<string, Record<string, [number, number]>> = {};
  for (const [source, perCategory] of Object.entries(value)) {
    if (!isObject(perCategory)) {
      throw new ReportFormatError(`${where}['${source}'] must be an object`);
    }
    const entry: Record<string, [number, number]> = {};
    for (const [category, pair] of Object.entries(perCategory)) {
      const arr = numberArray(pair, `${where}['${source}']['${category}']`);
      if (arr.length !== 2) {
        throw new ReportFormatError(
          `${where}['${source}']['${category}'] must be a [low, high] pair`);
      }
      entry[category] = [arr[0], arr[1]];
    }
    out[source] = entry;
  }
  return out;
}

export function parseReportJson(text: string, label = "report"): EvaluationReport {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new FormatError(`${label}: not valid JSON: ${(err as Error).message}`);
  }
  if (!isObject(raw)) {
    throw new ReportFormatError("report must be a JSON object");
  }
  const tablesRaw = requireField(raw, "tables", "report");
  if (!isObject(tablesRaw)) {
    throw new ReportFormatError("report field 'tables' must be an object");
  }
  if (Object.keys(tablesRaw).length === 0) {
    throw new ReportFormatError("report field 'tables' must name at least one source");
  }
  const tables: Record<string, SourceTable> = {};
  for (const [source, table] of Object.entries(tablesRaw)) {
    tables[source] = parseTable(table, `tables['${source}']`);
  }

  const metricsRaw = requireField(raw, "metrics", "report");
  if (!isObject(metricsRaw)) {
    throw new ReportFormatError("report field 'metrics' must be an object");
  }
  const metrics: Record<string, Record<string, number>> = {};
  for (const [source, scores] of Object.entries(metricsRaw)) {
    if (!isObject(scores)) {
      throw new ReportFormatError(`metrics['${source}'] must be an object`);
    }
    const entry: Record<string, number> = {};
    for (const [name, v] of Object.entries(scores)) {
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new ReportFormatError(`metrics['${source}'].${name} must be a finite number`);
      }
      entry[name] = v;
    }
    metrics[source] = entry;
  }

  const report: EvaluationReport = {
    tables,
    metrics,
    notes: "notes" in raw ? stringArray(raw.notes, "report.notes") : [],
  };
  if ("bootstrap_ci" in raw) {
    report.bootstrapCi = parseCi(raw.bootstrap_ci, "report.bootstrap_ci");
  }
  if ("tolerance_dva" in raw) {
    if (typeof raw.tolerance_dva !== "number") {
      throw new ReportFormatError("report field 'tolerance_dva' must be a number");
    }
    report.toleranceDva = raw.tolerance_dva;
  }
  return report;
}

/** Read and validate an evaluation report written by the core CLI. */
export function parseReport(path: string): EvaluationReport {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new FormatError(`cannot read report ${path}: ${(err as Error).message}`);
  }
  return parseReportJson(text, path);
}

/**
 * The source whose table is never scored against itself: the one absent from
 * metrics. Falls back to a table literally named "human".
 */
export function humanSourceOf(report: EvaluationReport): string {
  const unscored = Object.keys(report.tables).filter((s) => !(s in report.metrics));
  if (unscored.length === 1) return unscored[0];
  if ("human" in report.tables) return "human";
  throw new ReportFormatError(
    "cannot identify the human source: " +
    `${unscored.length} tables are unscored and none is named 'human'`);
}
