/**
 * Binary netpbm (PGM/PPM) codec.
 *
 * This is the array-boundary format shared with the core CLI. The encoder
 * emits the exact byte layout the core writes ("P5\n{w} {h}\n255\n" plus the
 * raw raster, "P6" for RGB), so encode(decode(file)) reproduces the file and
 * byte-level comparisons against core outputs are meaningful.
 */

import { FormatError, ImageShapeError } from "./errors.js";
import { assertImage, type ImageArray } from "./image.js";

export function encodeNetpbm(img: ImageArray): Uint8Array {
  assertImage(img);
  const magic = img.channels === 1 ? "P5" : "P6";
  const header = Buffer.from(`${magic}\n${img.width} ${img.height}\n255\n`, "ascii");
  const out = new Uint8Array(header.length + img.data.length);
  out.set(header, 0);
  out.set(img.data, header.length);
  return out;
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

function isDigit(byte: number): boolean {
  return byte >= 0x30 && byte <= 0x39;
}

/** Read the next header integer, skipping whitespace and # comments. */
function nextInt(bytes: Uint8Array, pos: number): { value: number; pos: number } {
  while (pos < bytes.length) {
    if (WHITESPACE.has(bytes[pos])) {
      pos++;
    } else if (bytes[pos] === 0x23) {
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
    } else {
      break;
    }
  }
  if (pos >= bytes.length || !isDigit(bytes[pos])) {
    throw new FormatError("netpbm header ended before a numeric field");
  }
  let value = 0;
  while (pos < bytes.length && isDigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - 0x30);
    pos++;
  }
  return { value, pos };
}

export function decodeNetpbm(bytes: Uint8Array): ImageArray {
  if (bytes.length < 2) {
    throw new FormatError("not a netpbm file: too short");
  }
  const magic = String.fromCharCode(bytes[0], bytes[1]);
  if (magic !== "P5" && magic !== "P6") {
    throw new FormatError(`not a binary PGM/PPM file: magic ${JSON.stringify(magic)}`);
  }
  const channels = magic === "P5" ? 1 : 3;
  let pos = 2;
  const w = nextInt(bytes, pos);
  const h = nextInt(bytes, w.pos);
  const maxval = nextInt(bytes, h.pos);
  if (maxval.value !== 255) {
    throw new FormatError(`only 8-bit netpbm supported, got maxval ${maxval.value}`);
  }
  pos = maxval.pos;
  // exactly one whitespace byte separates the header from the raster
  if (pos >= bytes.length || !WHITESPACE.has(bytes[pos])) {
    throw new FormatError("netpbm header not terminated by whitespace");
  }
  pos++;
  const expected = w.value * h.value * channels;
  const raster = bytes.subarray(pos);
  if (raster.length !== expected) {
    throw new FormatError(
      `netpbm raster has ${raster.length} bytes, ` +
      `${w.value}x${h.value}x${channels} needs ${expected}`);
  }
  const img: ImageArray = {
    width: w.value,
    height: h.value,
    channels: channels as 1 | 3,
    data: new Uint8Array(raster),
  };
  try {
    assertImage(img);
  } catch (err) {
    if (err instanceof ImageShapeError) throw new FormatError(err.message);
    throw err;
  }
  return img;
}
