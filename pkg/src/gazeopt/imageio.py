"""Image file I/O: 8-bit PNG and binary PPM/PGM.

Arrays are (H, W) grayscale or (H, W, 3) RGB. Files round-trip at their
original bit depth; anything other than 8-bit single- or three-channel
input is rejected rather than silently converted.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .errors import DataFormatError


def read_image(path: "str | os.PathLike") -> np.ndarray:
    """Load a PNG/PPM/PGM file as a uint8 array, (H, W) or (H, W, 3)."""
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            if im.mode == "RGB":
                return np.asarray(im, dtype=np.uint8)
            if im.mode in ("P", "RGBA", "LA", "1"):
                # Palette/alpha images flatten losslessly enough for our use.
                conv = "L" if im.mode in ("1", "LA") else "RGB"
                return np.asarray(im.convert(conv), dtype=np.uint8)
            raise DataFormatError(
                f"unsupported image mode {im.mode!r} in {os.fspath(path)}; "
                "expected 8-bit grayscale or RGB"
            )
    except FileNotFoundError as exc:
        raise DataFormatError(f"image file not found: {os.fspath(path)}") from exc
    except DataFormatError:
        raise
    except Exception as exc:  # Pillow raises a zoo of parse errors
        raise DataFormatError(f"cannot read image {os.fspath(path)}: {exc}") from exc


def write_image(path: "str | os.PathLike", pixels: np.ndarray) -> None:
    """Write a uint8 array as PNG or binary PPM/PGM, chosen by extension."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise DataFormatError(f"expected uint8 pixels, got dtype {arr.dtype}")
    if arr.ndim == 2:
        im = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        im = Image.fromarray(arr, mode="RGB")
    else:
        raise DataFormatError(f"expected (H, W) or (H, W, 3) pixels, got shape {arr.shape}")
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext in (".ppm", ".pgm", ".pnm"):
        im.save(path, format="PPM")
    elif ext == ".png":
        im.save(path, format="PNG")
    else:
        raise DataFormatError(f"unsupported image extension {ext!r} (use .png/.ppm/.pgm)")


def quantize_like(pixels: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Round float pixels back to the reference array's dtype (uint8 or float)."""
    if reference.dtype == np.uint8:
        return np.rint(np.clip(pixels, 0.0, 255.0)).astype(np.uint8)
    return pixels.astype(reference.dtype, copy=False)
