export { foveate, type Fixation, type FoveateOptions } from "./foveate.js";
export { scanpath, type ScanpathOptions } from "./scanpath.js";
export { evaluate, type EvaluateOptions, type EvaluateResult } from "./evaluate.js";
export { plot_report, type PlotOptions } from "./plot.js";

export { imageFromRows, toImageArray, type ImageArray, type ImageLike } from "./image.js";
export { encodeNetpbm, decodeNetpbm } from "./netpbm.js";
export { parseFixationCsv, type FixationRecord } from "./fixations.js";
export { parseReport, parseReportJson, humanSourceOf, type EvaluationReport, type SourceTable } from "./report.js";
export { gazeoptBinary, runGazeopt } from "./runner.js";
export { CliError, FormatError, ImageShapeError, ReportFormatError } from "./errors.js";

/** Kept in lockstep with the core package version. */
export const VERSION = "0.1.0";
