import { describe, expect, it } from "vitest";

import { FormatError, ImageShapeError } from "../src/errors.js";
import type { ImageArray } from "../src/image.js";
import { decodeNetpbm, encodeNetpbm } from "../src/netpbm.js";

function gray(): ImageArray {
  return { width: 3, height: 2, channels: 1, data: Uint8Array.from([0, 1, 2, 3, 4, 5]) };
}

function rgb(): ImageArray {
  const data = Uint8Array.from({ length: 18 }, (_, i) => i);
  return { width: 3, height: 2, channels: 3, data };
}

describe("encodeNetpbm", () => {
  // frozen canonical byte layout shared with the core writer
  it("writes the canonical PGM header and raster", () => {
    const bytes = encodeNetpbm(gray());
    const expected = Uint8Array.from([
      0x50, 0x35, 0x0a, 0x33, 0x20, 0x32, 0x0a, 0x32, 0x35, 0x35, 0x0a, // "P5\n3 2\n255\n"
      0, 1, 2, 3, 4, 5,
    ]);
    expect(Buffer.from(bytes).equals(Buffer.from(expected))).toBe(true);
  });

  it("writes P6 for three channels", () => {
    const bytes = encodeNetpbm(rgb());
    expect(Buffer.from(bytes.subarray(0, 11)).toString("ascii")).toBe("P6\n3 2\n255\n");
    expect(bytes.length).toBe(11 + 18);
  });

  it("rejects a pixel buffer that does not match the dimensions", () => {
    const img = { width: 4, height: 4, channels: 1 as const, data: new Uint8Array(3) };
    expect(() => encodeNetpbm(img)).toThrow(ImageShapeError);
  });
});

describe("decodeNetpbm", () => {
  it("round-trips gray and rgb images", () => {
    for (const img of [gray(), rgb()]) {
      const back = decodeNetpbm(encodeNetpbm(img));
      expect(back.width).toBe(img.width);
      expect(back.height).toBe(img.height);
      expect(back.channels).toBe(img.channels);
      expect(Buffer.from(back.data).equals(Buffer.from(img.data))).toBe(true);
    }
  });

  it("tolerates header comments and extra whitespace", () => {
    const header = Buffer.from("P5\n# a comment\n 3  2\n# more\n255\n", "ascii");
    const bytes = Buffer.concat([header, Buffer.from([9, 8, 7, 6, 5, 4])]);
    const img = decodeNetpbm(new Uint8Array(bytes));
    expect(img.width).toBe(3);
    expect(img.height).toBe(2);
    expect([...img.data]).toEqual([9, 8, 7, 6, 5, 4]);
  });

  it("rejects non-8-bit maxval", () => {
    const bytes = Buffer.concat([
      Buffer.from("P5\n1 1\n65535\n", "ascii"), Buffer.from([0, 0])]);
    expect(() => decodeNetpbm(new Uint8Array(bytes))).toThrow(FormatError);
    expect(() => decodeNetpbm(new Uint8Array(bytes))).toThrow(/maxval/);
  });

  it("rejects an ascii or unknown magic", () => {
    const bytes = Buffer.from("P2\n1 1\n255\n0\n", "ascii");
    expect(() => decodeNetpbm(new Uint8Array(bytes))).toThrow(FormatError);
  });

  it("rejects a truncated or padded raster", () => {
    const good = encodeNetpbm(gray());
    expect(() => decodeNetpbm(good.subarray(0, good.length - 1))).toThrow(/raster/);
    const padded = new Uint8Array(good.length + 1);
    padded.set(good, 0);
    expect(() => decodeNetpbm(padded)).toThrow(/raster/);
  });
});
