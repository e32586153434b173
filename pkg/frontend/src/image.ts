import { ImageShapeError } from "./errors.js";

/**
 * An 8-bit image: row-major, channel-interleaved for RGB.
 * data.length must equal width * height * channels.
 */
export interface ImageArray {
  width: number;
  height: number;
  channels: 1 | 3;
  data: Uint8Array;
}

/** Anything foveate() accepts as pixels. */
export type ImageLike = ImageArray | number[][] | number[][][];

export function assertImage(img: ImageArray): void {
  if (!Number.isInteger(img.width) || img.width < 1 ||
      !Number.isInteger(img.height) || img.height < 1) {
    throw new ImageShapeError(
      `image dimensions must be positive integers, got ${img.width}x${img.height}`);
  }
  if (img.channels !== 1 && img.channels !== 3) {
    throw new ImageShapeError(`expected 1 or 3 channels, got ${img.channels}`);
  }
  if (!(img.data instanceof Uint8Array)) {
    const got = (img.data as object)?.constructor?.name ?? typeof img.data;
    throw new ImageShapeError(`pixel data must be a Uint8Array, got ${got}`);
  }
  const expected = img.width * img.height * img.channels;
  if (img.data.length !== expected) {
    throw new ImageShapeError(
      `pixel buffer has ${img.data.length} bytes, ` +
      `${img.width}x${img.height}x${img.channels} needs ${expected}`);
  }
}

function checkedByte(value: number, where: string): number {
  if (!Number.isInteger(value) || value < 0 || value > 255) {
    throw new ImageShapeError(`pixel value ${value} at ${where} outside 0..255`);
  }
  return value;
}

/** Convert nested row arrays ((H,W) gray or (H,W,C) RGB) to an ImageArray. */
export function imageFromRows(rows: number[][] | number[][][]): ImageArray {
  if (!Array.isArray(rows) || rows.length === 0 || !Array.isArray(rows[0])) {
    throw new ImageShapeError("expected a non-empty array of pixel rows");
  }
  const height = rows.length;
  const width = rows[0].length;
  if (width === 0) {
    throw new ImageShapeError("pixel rows must not be empty");
  }
  const first = (rows[0] as unknown[])[0];
  const channels = Array.isArray(first) ? (first as number[]).length : 1;
  if (channels !== 1 && channels !== 3) {
    throw new ImageShapeError(`expected 1 or 3 channels, got ${channels}`);
  }
  const data = new Uint8Array(width * height * channels);
  let k = 0;
  for (let r = 0; r < height; r++) {
    const row = rows[r] as unknown[];
    if (!Array.isArray(row) || row.length !== width) {
      throw new ImageShapeError(
        `row ${r} has length ${(row as unknown[]).length ?? "?"}, expected ${width}`);
    }
    for (let c = 0; c < width; c++) {
      const cell = row[c];
      if (channels === 1) {
        data[k++] = checkedByte(cell as number, `(${r}, ${c})`);
      } else {
        const px = cell as number[];
        if (!Array.isArray(px) || px.length !== channels) {
          throw new ImageShapeError(
            `pixel (${r}, ${c}) has ${(px as number[]).length ?? "?"} channels, expected ${channels}`);
        }
        for (let ch = 0; ch < channels; ch++) {
          data[k++] = checkedByte(px[ch], `(${r}, ${c}, ${ch})`);
        }
      }
    }
  }
  return { width, height, channels: channels as 1 | 3, data };
}

/** Normalize any accepted pixel input to a validated ImageArray. */
export function toImageArray(input: ImageLike): ImageArray {
  const img = Array.isArray(input) ? imageFromRows(input) : input;
  assertImage(img);
  return img;
}
