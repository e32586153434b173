import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, isAbsolute, join } from "node:path";

import { FormatError, ReportFormatError } from "./errors.js";
import { looksLikeFixationCsv, parseFixationCsv, type FixationRecord } from "./fixations.js";
import { humanSourceOf, parseReport, type EvaluationReport } from "./report.js";

export interface PlotOptions {
  /** Heatmap panels are rendered for at most this many scenes. */
  maxScenes?: number;
}

const BAR_COLORS = ["#4878a8", "#e49444", "#5ba053", "#b24f4f", "#8268a8", "#967662"];
const BOX_FILL = "#c7d9ec";
const BOX_STROKE = "#28506e";
const RAMP: Array<[number, number, number]> = [
  [13, 8, 135], [84, 2, 163], [156, 23, 158], [205, 55, 120],
  [237, 104, 60], [249, 180, 45], [240, 249, 33],
];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(value: number): string {
  return value.toFixed(2);
}

function rampColor(t: number): string {
  const pos = Math.min(Math.max(t, 0), 1) * (RAMP.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, RAMP.length - 1);
  const frac = pos - lo;
  const mix = (a: number, b: number) => Math.round(a + (b - a) * frac);
  const [r, g, b] = [0, 1, 2].map((i) => mix(RAMP[lo][i], RAMP[hi][i]));
  return `rgb(${r},${g},${b})`;
}

function categoryValue(report: EvaluationReport, source: string, category: string): number | undefined {
  const table = report.tables[source];
  if (table === undefined) return undefined;
  const idx = table.categories.indexOf(category);
  return idx < 0 ? undefined : table.mean[idx];
}

function ciOf(report: EvaluationReport, source: string, category: string): [number, number] | undefined {
  return report.bootstrapCi?.[source]?.[category];
}

// ---------------------------------------------------------------------------
// frequency chart

function frequencySvg(report: EvaluationReport): string {
  const humanSource = humanSourceOf(report);
  const barSources = Object.keys(report.metrics).sort();
  const categories = report.tables[humanSource].categories;

  const boxW = 16;
  const barW = 14;
  const gap = 4;
  const groupInner = boxW + barSources.length * (gap + barW);
  const groupPad = 26;
  const ml = 64;
  const plotW = categories.length * (groupInner + groupPad);
  const width = ml + plotW + 20;
  const top = 56;
  const plotH = 240;
  const bottom = 84;
  const height = top + plotH + bottom;

  let yMax = 0.1;
  const consider = (v: number | undefined) => {
    if (v !== undefined && v > yMax) yMax = v;
  };
  for (const cat of categories) {
    const humanTable = report.tables[humanSource];
    const idx = humanTable.categories.indexOf(cat);
    consider(humanTable.mean[idx] + 2 * humanTable.se[idx]);
    consider(ciOf(report, humanSource, cat)?.[1]);
    for (const src of barSources) {
      consider(categoryValue(report, src, cat));
      consider(ciOf(report, src, cat)?.[1]);
    }
  }
  yMax = Math.min(1.1, Math.ceil((yMax * 1.05) / 0.05) * 0.05);
  const y = (v: number) => top + plotH - (Math.min(v, yMax) / yMax) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`);
  const usesHatch = barSources.includes("random");
  if (usesHatch) {
    parts.push(
      '<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">' +
      '<path d="M0 6 L6 0" stroke="#666" stroke-width="1"/></pattern></defs>');
  }
  parts.push(`<text x="${ml}" y="18" font-size="13" font-weight="bold">Fixation category frequencies</text>`);

  // legend
  let lx = ml;
  const legendEntry = (label: string, swatch: string) => {
    parts.push(swatch);
    parts.push(`<text x="${fmt(lx + 18)}" y="40" font-size="10">${esc(label)}</text>`);
    lx += 24 + 6.5 * label.length;
  };
  legendEntry(humanSource,
    `<rect x="${fmt(lx)}" y="32" width="14" height="9" fill="${BOX_FILL}" stroke="${BOX_STROKE}"/>`);
  barSources.forEach((src, i) => {
    const fill = src === "random" ? 'url(#hatch)' : BAR_COLORS[i % BAR_COLORS.length];
    legendEntry(src,
      `<rect x="${fmt(lx)}" y="32" width="14" height="9" fill="${fill}" stroke="#555"/>`);
  });

  // axis, gridlines
  for (let i = 0; i <= 4; i++) {
    const v = (yMax * i) / 4;
    const gy = y(v);
    parts.push(`<line class="grid" x1="${ml}" y1="${fmt(gy)}" x2="${width - 20}" y2="${fmt(gy)}" stroke="#ddd"/>`);
    parts.push(`<text x="${ml - 6}" y="${fmt(gy + 3)}" font-size="9" text-anchor="end">${v.toFixed(2)}</text>`);
  }
  parts.push(`<line x1="${ml}" y1="${top}" x2="${ml}" y2="${top + plotH}" stroke="#333"/>`);
  parts.push(`<line x1="${ml}" y1="${top + plotH}" x2="${width - 20}" y2="${top + plotH}" stroke="#333"/>`);
  parts.push(
    `<text x="14" y="${fmt(top + plotH / 2)}" font-size="10" text-anchor="middle" ` +
    `transform="rotate(-90 14 ${fmt(top + plotH / 2)})">share of scored fixations</text>`);

  categories.forEach((cat, ci) => {
    const gx = ml + groupPad / 2 + ci * (groupInner + groupPad);
    const humanTable = report.tables[humanSource];
    const idx = humanTable.categories.indexOf(cat);
    const mean = humanTable.mean[idx];
    const se = humanTable.se[idx];
    const ci95 = ciOf(report, humanSource, cat);
    const boxLo = ci95 === undefined ? Math.max(0, mean - se) : ci95[0];
    const boxHi = ci95 === undefined ? mean + se : ci95[1];
    const whiskLo = Math.max(0, mean - 2 * se);
    const whiskHi = Math.min(yMax, mean + 2 * se);
    const cx = gx + boxW / 2;
    parts.push(`<line class="whisker" x1="${fmt(cx)}" y1="${fmt(y(whiskHi))}" x2="${fmt(cx)}" y2="${fmt(y(whiskLo))}" stroke="${BOX_STROKE}"/>`);
    parts.push(
      `<rect class="box" x="${fmt(gx)}" y="${fmt(y(boxHi))}" width="${boxW}" ` +
      `height="${fmt(Math.max(0.5, y(boxLo) - y(boxHi)))}" fill="${BOX_FILL}" stroke="${BOX_STROKE}"/>`);
    parts.push(`<line class="median" x1="${fmt(gx)}" y1="${fmt(y(mean))}" x2="${fmt(gx + boxW)}" y2="${fmt(y(mean))}" stroke="${BOX_STROKE}" stroke-width="1.5"/>`);

    barSources.forEach((src, si) => {
      const v = categoryValue(report, src, cat);
      if (v === undefined) return;
      const bx = gx + boxW + gap + si * (barW + gap);
      const fill = src === "random" ? 'url(#hatch)' : BAR_COLORS[si % BAR_COLORS.length];
      parts.push(
        `<rect class="bar" x="${fmt(bx)}" y="${fmt(y(v))}" width="${barW}" ` +
        `height="${fmt(y(0) - y(v))}" fill="${fill}" stroke="#555"/>`);
      const barCi = ciOf(report, src, cat);
      if (barCi !== undefined) {
        const bcx = bx + barW / 2;
        parts.push(`<line class="ci" x1="${fmt(bcx)}" y1="${fmt(y(barCi[1]))}" x2="${fmt(bcx)}" y2="${fmt(y(barCi[0]))}" stroke="#333"/>`);
      }
    });

    const labelX = gx + groupInner / 2;
    const labelY = top + plotH + 14;
    parts.push(
      `<text x="${fmt(labelX)}" y="${fmt(labelY)}" font-size="9" text-anchor="start" ` +
      `transform="rotate(38 ${fmt(labelX)} ${fmt(labelY)})">${esc(cat)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

// ---------------------------------------------------------------------------
// heatmap overlays

interface ManifestInfo {
  fieldWidth: number;
  fieldHeight: number;
  inputPaths: string[];
}

function readManifest(path: string): ManifestInfo {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new FormatError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  const obj = raw as Record<string, unknown>;
  const params = obj.parameters as Record<string, unknown> | undefined;
  if (params === undefined || params === null ||
      typeof params !== "object" || Array.isArray(params)) {
    throw new ReportFormatError("manifest missing field 'parameters'");
  }
  for (const key of ["field_width", "field_height"]) {
    if (typeof params[key] !== "number") {
      throw new ReportFormatError(`manifest missing field 'parameters.${key}'`);
    }
  }
  const inputs = Array.isArray(obj.inputs) ? obj.inputs : [];
  const inputPaths: string[] = [];
  for (const entry of inputs) {
    const p = (entry as Record<string, unknown>)?.path;
    if (typeof p === "string") inputPaths.push(p);
  }
  return {
    fieldWidth: params.field_width as number,
    fieldHeight: params.field_height as number,
    inputPaths,
  };
}

type BySubject = Map<string, FixationRecord[]>;
type BySource = Map<string, BySubject>;

function groupFixations(records: FixationRecord[], into: Map<string, BySource>): void {
  for (const row of records) {
    const scene = into.get(row.sceneId) ?? new Map<string, BySubject>();
    into.set(row.sceneId, scene);
    const source = scene.get(row.source) ?? new Map<string, FixationRecord[]>();
    scene.set(row.source, source);
    const key = row.subjectId ?? "";
    const rows = source.get(key) ?? [];
    rows.push(row);
    source.set(key, rows);
  }
}

function heatCells(
  points: Array<{ x: number; y: number }>,
  fieldW: number,
  fieldH: number,
): Array<{ col: number; row: number; t: number }> {
  const cols = 40;
  const rows = Math.max(1, Math.round((cols * fieldH) / fieldW));
  const cellW = fieldW / cols;
  const cellH = fieldH / rows;
  const sigma = 1.5 * cellW;
  const density = new Float64Array(cols * rows);
  const reach = Math.ceil((4 * sigma) / Math.min(cellW, cellH));
  for (const p of points) {
    const pc = Math.floor(p.x / cellW);
    const pr = Math.floor(p.y / cellH);
    for (let r = Math.max(0, pr - reach); r <= Math.min(rows - 1, pr + reach); r++) {
      for (let c = Math.max(0, pc - reach); c <= Math.min(cols - 1, pc + reach); c++) {
        const dx = (c + 0.5) * cellW - p.x;
        const dy = (r + 0.5) * cellH - p.y;
        density[r * cols + c] += Math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      }
    }
  }
  let max = 0;
  for (const v of density) max = Math.max(max, v);
  const cells: Array<{ col: number; row: number; t: number }> = [];
  if (max === 0) return cells;
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const t = density[r * cols + c] / max;
      if (t >= 0.02) cells.push({ col: c, row: r, t });
    }
  }
  return cells;
}

function heatmapSvg(
  sceneId: string,
  bySource: BySource,
  humanSource: string,
  fieldW: number,
  fieldH: number,
): string {
  const sources = [...bySource.keys()].sort((a, b) => {
    if (a === humanSource) return -1;
    if (b === humanSource) return 1;
    return a < b ? -1 : 1;
  });
  const panelW = 220;
  const scale = panelW / fieldW;
  const panelH = Math.round(fieldH * scale);
  const pad = 16;
  const width = pad + sources.length * (panelW + pad);
  const height = pad + 20 + panelH + 26;

  const cols = 40;
  const rows = Math.max(1, Math.round((cols * fieldH) / fieldW));
  const cellW = (fieldW / cols) * scale;
  const cellH = (fieldH / rows) * scale;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`);
  parts.push(`<text x="${pad}" y="${pad + 4}" font-size="12" font-weight="bold">scene ${esc(sceneId)}</text>`);

  sources.forEach((source, si) => {
    const ox = pad + si * (panelW + pad);
    const oy = pad + 20;
    const subjects = bySource.get(source) as BySubject;
    const allPoints: Array<{ x: number; y: number }> = [];
    for (const key of [...subjects.keys()].sort()) {
      for (const row of subjects.get(key) as FixationRecord[]) {
        allPoints.push({ x: row.xPx, y: row.yPx });
      }
    }
    parts.push(`<g transform="translate(${ox} ${oy})">`);
    parts.push(`<rect class="field" x="0" y="0" width="${panelW}" height="${panelH}" fill="#fafafa" stroke="none"/>`);
    for (const cell of heatCells(allPoints, fieldW, fieldH)) {
      parts.push(
        `<rect class="cell" x="${fmt(cell.col * cellW)}" y="${fmt(cell.row * cellH)}" ` +
        `width="${fmt(cellW + 0.5)}" height="${fmt(cellH + 0.5)}" ` +
        `fill="${rampColor(cell.t)}" fill-opacity="${(0.15 + 0.6 * cell.t).toFixed(3)}"/>`);
    }
    for (const key of [...subjects.keys()].sort()) {
      const sorted = [...(subjects.get(key) as FixationRecord[])].sort((a, b) => a.index - b.index);
      const path = sorted
        .map((row) => `${fmt(row.xPx * scale)},${fmt(row.yPx * scale)}`)
        .join(" ");
      if (sorted.length > 1) {
        parts.push(`<polyline class="path" points="${path}" fill="none" stroke="#222" stroke-width="0.7" stroke-opacity="0.55"/>`);
      }
      for (const row of sorted) {
        const cx = fmt(row.xPx * scale);
        const cy = fmt(row.yPx * scale);
        parts.push(`<circle class="fix" cx="${cx}" cy="${cy}" r="3.2" fill="#fff" stroke="#222"/>`);
        parts.push(`<text class="fixlabel" x="${cx}" y="${fmt(row.yPx * scale + 2.2)}" font-size="6" text-anchor="middle">${row.index}</text>`);
      }
    }
    parts.push(`<rect class="frame" x="0" y="0" width="${panelW}" height="${panelH}" fill="none" stroke="#333"/>`);
    parts.push("</g>");
    parts.push(
      `<text x="${fmt(ox + panelW / 2)}" y="${oy + panelH + 16}" font-size="10" ` +
      `text-anchor="middle">${esc(source)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

// ---------------------------------------------------------------------------
// entry point

function sanitize(name: string): string {
  return name.replace(/[^A-Za-z0-9._-]/g, "_");
}

/**
 * Render figures for an evaluation report into outDir; returns written paths.
 *
 * Always writes frequency.svg: per category a human box (bootstrap interval,
 * median line at the mean, 2-SE whiskers) next to one bar per scored source,
 * the "random" baseline hatched. When a manifest.json sits beside the report
 * (any core run directory), the fixation CSVs it lists as inputs are loaded
 * and one heatmap_<scene>.svg with a density-overlay panel per source is
 * written for each scene, up to options.maxScenes. Output is a pure function
 * of the inputs: rendering the same report twice gives identical bytes.
 */
export function plot_report(
  reportPath: string,
  outDir: string,
  options: PlotOptions = {},
): string[] {
  const report = parseReport(reportPath);
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];

  const freqPath = join(outDir, "frequency.svg");
  writeFileSync(freqPath, frequencySvg(report), "utf8");
  written.push(freqPath);

  const manifestPath = join(dirname(reportPath), "manifest.json");
  if (existsSync(manifestPath)) {
    const manifest = readManifest(manifestPath);
    const scenes = new Map<string, BySource>();
    for (const input of manifest.inputPaths) {
      const resolved = isAbsolute(input) ? input : join(dirname(reportPath), input);
      if (!looksLikeFixationCsv(resolved)) continue;
      groupFixations(parseFixationCsv(resolved), scenes);
    }
    const humanSource = humanSourceOf(report);
    const sceneIds = [...scenes.keys()].sort().slice(0, options.maxScenes ?? 4);
    for (const sceneId of sceneIds) {
      const svg = heatmapSvg(
        sceneId, scenes.get(sceneId) as BySource, humanSource,
        manifest.fieldWidth, manifest.fieldHeight);
      const path = join(outDir, `heatmap_${sanitize(sceneId)}.svg`);
      writeFileSync(path, svg, "utf8");
      written.push(path);
    }
  }
  return written;
}
