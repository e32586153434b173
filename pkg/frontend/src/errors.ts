/** Pixel arrays with the wrong shape, dtype or value range. */
export class ImageShapeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ImageShapeError";
  }
}

/** Malformed files: netpbm bytes, fixation CSVs, manifests. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

/** Evaluation reports missing or mistyping a field; the message names it. */
export class ReportFormatError extends FormatError {
  constructor(message: string) {
    super(message);
    this.name = "ReportFormatError";
  }
}

/** A core CLI invocation that exited non-zero, with its stderr attached. */
export class CliError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = "CliError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}
