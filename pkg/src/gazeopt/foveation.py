"""Space-variant blur via a blended Gaussian pyramid.

The resolution map r(x, y) = alpha / (alpha + eccentricity_deg) expresses, per
pixel, the half-max frequency bandwidth retained by the simulated retina on a
relative frequency axis where 1.0 corresponds to 0.25 cycles/pixel. Each
pyramid level i approximates a low-pass with transfer

    T_i(f) = exp(-((f / 4) / (sigma / 2**i))**2),    sigma = 0.248 c/px,

and a pixel with bandwidth r is rendered as the interpolation of the two
levels whose half-max bandwidths R_i = 8*sqrt(ln 2)*sigma/2**i bracket r.
For level selection the bandwidths are clamped at the attainable maximum 1.0,
so fully-resolved pixels (r >= min(R_0, 1)) copy the source exactly.

Pyramid construction: iterative downsample-by-two with a separable binomial
(1, 4, 6, 4, 1)/16 kernel and edge-clamp padding (no vignette at borders),
odd dimensions rounding up, then bilinear upsampling back to full size.
All entry points are pure functions; nothing here holds global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import FieldGeometry, FixationPoint, Placement, combined_eccentricity, eccentricity_map
from .imageio import quantize_like

DEFAULT_SIGMA = 0.248        # transfer-function std of the source level, cycles/pixel
DEFAULT_DEPTH = 10           # downsampling steps; covers any desk-scale eccentricity
DEFAULT_ALPHA = 0.63         # human-calibrated resolution falloff, degrees
WEAK_ALPHA = 20.0            # near-uniform resolution (control condition)
STRONG_ALPHA = 0.2           # aggressive falloff (control condition)

_SQRT_LN2 = math.sqrt(math.log(2.0))


@dataclass(frozen=True)
class ResolutionMap:
    """Per-pixel retained bandwidth r in (0, 1], plus the falloff that made it."""

    r: np.ndarray
    alpha: float


@dataclass(frozen=True)
class GaussianPyramid:
    """Stored levels 0..depth, each upsampled back to the source resolution."""

    levels: "tuple[np.ndarray, ...]"
    depth: int

    def __post_init__(self):
        if len(self.levels) != self.depth + 1:
            raise DomainError(f"expected {self.depth + 1} levels, got {len(self.levels)}")


@dataclass(frozen=True)
class FoveatedImage:
    pixels: np.ndarray
    resolution: ResolutionMap
    fixations: "tuple[FixationPoint, ...]"


def resolution_map(eccentricity: "np.ndarray | list[np.ndarray]", alpha: float) -> ResolutionMap:
    """Map eccentricity (deg) to retained bandwidth r = alpha / (alpha + theta).

    Accepts one combined eccentricity map or a list of per-fixation maps
    (combined by element-wise minimum).
    """
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must be positive and finite, got {alpha}")
    if isinstance(eccentricity, (list, tuple)):
        theta = combined_eccentricity(list(eccentricity))
    else:
        theta = np.asarray(eccentricity)
    if theta.size == 0:
        raise DomainError("empty eccentricity map")
    if np.any(theta < 0.0):
        raise DomainError("eccentricity must be non-negative")
    return ResolutionMap(r=alpha / (alpha + theta), alpha=float(alpha))


def half_max_bandwidth(level: int, sigma: float = DEFAULT_SIGMA) -> float:
    """Bandwidth at which level's transfer drops to one half: 8*sqrt(ln 2)*sigma/2**level."""
    if level < 0:
        raise DomainError(f"level must be >= 0, got {level}")
    if not (sigma > 0.0):
        raise DomainError(f"sigma must be positive, got {sigma}")
    return 8.0 * _SQRT_LN2 * sigma / (2.0 ** level)


def transfer_value(
    level: int,
    f: "float | np.ndarray",
    sigma: float = DEFAULT_SIGMA,
    depth: int = DEFAULT_DEPTH,
) -> "float | np.ndarray":
    """Transfer T_level(f) on the relative frequency axis (1.0 = 0.25 c/px).

    Levels 0..depth follow the Gaussian form; level depth+1 is the sentinel
    "passes nothing" level and returns 0 for any f.
    """
    if not (sigma > 0.0):
        raise DomainError(f"sigma must be positive, got {sigma}")
    if level < 0 or level > depth + 1:
        raise DomainError(f"level must be in [0, {depth + 1}], got {level}")
    farr = np.asarray(f, dtype=np.float64)
    if np.any(farr < 0.0):
        raise DomainError("frequency must be non-negative")
    if level == depth + 1:
        out = np.zeros_like(farr)
    else:
        sigma_i = sigma / (2.0 ** level)
        out = np.exp(-(((farr / 4.0) / sigma_i) ** 2))
    return float(out) if np.isscalar(f) else out


def blend_weight(
    r_value: "float | np.ndarray",
    level: int,
    sigma: float = DEFAULT_SIGMA,
    depth: int = DEFAULT_DEPTH,
) -> "float | np.ndarray":
    """Interpolation weight toward level-1 when r lies between R_level and R_level-1.

    Piecewise: 0 for r <= R_level, 1 for r >= R_level-1, otherwise
    (1/2 - T_level(r/2)) / (T_level-1(r/2) - T_level(r/2)). Continuous across
    the bracket edges by construction.
    """
    if level < 1 or level > depth + 1:
        raise DomainError(f"level must be in [1, {depth + 1}], got {level}")
    r = np.asarray(r_value, dtype=np.float64)
    if np.any(r <= 0.0) or np.any(r > 1.0):
        raise DomainError("r must lie in (0, 1]")
    r_hi = half_max_bandwidth(level - 1, sigma)
    r_lo = 0.0 if level == depth + 1 else half_max_bandwidth(level, sigma)
    t_hi = transfer_value(level - 1, r / 2.0, sigma, depth)
    t_lo = transfer_value(level, r / 2.0, sigma, depth)
    mid = (0.5 - t_lo) / (t_hi - t_lo)
    out = np.where(r <= r_lo, 0.0, np.where(r >= r_hi, 1.0, mid))
    return float(out) if np.isscalar(r_value) else out


# ---------------------------------------------------------------------------
# pyramid construction


def _binomial_down(arr: np.ndarray) -> np.ndarray:
    """Separable (1,4,6,4,1)/16 filter with edge-clamp, then keep even indices.

    The decimation is fused into the slicing so only the surviving rows and
    columns are ever filtered.
    """
    h, w = arr.shape[:2]
    p = np.pad(arr, [(2, 2), (0, 0)] + [(0, 0)] * (arr.ndim - 2), mode="edge")
    arr = (
        p[0:h:2] + 4.0 * p[1 : h + 1 : 2] + 6.0 * p[2 : h + 2 : 2]
        + 4.0 * p[3 : h + 3 : 2] + p[4 : h + 4 : 2]
    ) / 16.0
    p = np.pad(arr, [(0, 0), (2, 2)] + [(0, 0)] * (arr.ndim - 2), mode="edge")
    arr = (
        p[:, 0:w:2] + 4.0 * p[:, 1 : w + 1 : 2] + 6.0 * p[:, 2 : w + 2 : 2]
        + 4.0 * p[:, 3 : w + 3 : 2] + p[:, 4 : w + 4 : 2]
    ) / 16.0
    return arr


def _bilinear_axis0(arr: np.ndarray, target: int) -> np.ndarray:
    """Double along axis 0 back to ``target`` rows; coarse row k sits at fine row 2k."""
    hc = arr.shape[0]
    out = np.empty((target,) + arr.shape[1:], dtype=arr.dtype)
    out[0::2] = arr[: (target + 1) // 2]
    n_odd = target // 2
    if n_odd:
        k = min(n_odd, hc - 1)
        if k:
            view = out[1 : 2 * k : 2]
            np.add(arr[:k], arr[1 : k + 1], out=view)
            view *= 0.5
        if n_odd > k:  # bottom odd row has no lower neighbour; clamp
            out[target - 1] = arr[hc - 1]
    return out


def _bilinear_axis1(arr: np.ndarray, target: int) -> np.ndarray:
    """Same as `_bilinear_axis0` along axis 1, avoiding transpose copies."""
    wc = arr.shape[1]
    out = np.empty(arr.shape[:1] + (target,) + arr.shape[2:], dtype=arr.dtype)
    out[:, 0::2] = arr[:, : (target + 1) // 2]
    n_odd = target // 2
    if n_odd:
        k = min(n_odd, wc - 1)
        if k:
            view = out[:, 1 : 2 * k : 2]
            np.add(arr[:, :k], arr[:, 1 : k + 1], out=view)
            view *= 0.5
        if n_odd > k:
            out[:, target - 1] = arr[:, wc - 1]
    return out


def _bilinear_up(arr: np.ndarray, tshape: "tuple[int, int]") -> np.ndarray:
    return _bilinear_axis1(_bilinear_axis0(arr, tshape[0]), tshape[1])


def _coarse_range(lo: int, hi: int, coarse_size: int) -> "tuple[int, int]":
    """Coarse index range whose upsample covers fine rows [lo, hi)."""
    return lo // 2, min(coarse_size, (hi - 1) // 2 + 2)


def _up_range(c0: int, c1: int, coarse_size: int, fine_size: int) -> "tuple[int, int]":
    """Fine range produced by upsampling coarse rows [c0, c1).

    An interior slab stops one row short of 2*c1 because the last odd fine row
    would need a neighbour outside the slab; a slab reaching the coarse edge
    extends to the fine edge with the usual clamp.
    """
    return 2 * c0, fine_size if c1 == coarse_size else 2 * c1 - 1


def _build_levels(
    image: np.ndarray, depth: int, rois: "list | None" = None
) -> "list[np.ndarray | None]":
    """Full-resolution levels 0..depth of the blended pyramid.

    ``rois``, when given, holds per-level ((y0, y1), (x0, x1)) pixel boxes
    (index 0 unused); each level's upsample chain is then restricted to the
    box, the rest of its buffer is left unwritten, and levels whose box is
    None are skipped. Values inside a box match the unrestricted build
    exactly: chains start on even-aligned coarse slabs so the interpolation
    pattern is identical.
    """
    levels: "list[np.ndarray | None]" = [image]
    shapes = [image.shape[:2]]
    small = image
    for lev in range(1, depth + 1):
        small = _binomial_down(small)
        shapes.append(small.shape[:2])
        roi = None if rois is None else rois[lev]
        if rois is not None and roi is None:
            levels.append(None)
            continue
        if roi is None:
            up = small
            for tshape in reversed(shapes[:-1]):
                up = _bilinear_up(up, tshape)
            levels.append(up)
            continue
        yr = [roi[0]]
        xr = [roi[1]]
        for k in range(1, lev + 1):
            yr.append(_coarse_range(*yr[-1], shapes[k][0]))
            xr.append(_coarse_range(*xr[-1], shapes[k][1]))
        slab = small[yr[lev][0] : yr[lev][1], xr[lev][0] : xr[lev][1]]
        cy, cx = yr[lev], xr[lev]
        for k in range(lev - 1, -1, -1):
            fy = _up_range(cy[0], cy[1], shapes[k + 1][0], shapes[k][0])
            fx = _up_range(cx[0], cx[1], shapes[k + 1][1], shapes[k][1])
            slab = _bilinear_up(slab, (fy[1] - fy[0], fx[1] - fx[0]))
            cy, cx = fy, fx
        full = np.empty(shapes[0] + image.shape[2:], dtype=image.dtype)
        full[cy[0] : cy[1], cx[0] : cx[1]] = slab
        levels.append(full)
    return levels


def build_pyramid(image: np.ndarray, depth: int = DEFAULT_DEPTH) -> GaussianPyramid:
    """Build the full pyramid; depth+1 levels are stored at source resolution.

    Depths beyond log2(min dimension) are fine: dimensions clamp at 1 and
    further levels repeat the fully-averaged image.
    """
    arr = np.asarray(image)
    if arr.ndim not in (2, 3) or arr.size == 0:
        raise DomainError(f"expected non-empty (H, W) or (H, W, C) image, got shape {arr.shape}")
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    work = arr.astype(np.float64 if arr.dtype == np.float64 else np.float32, copy=False)
    return GaussianPyramid(levels=tuple(_build_levels(work, depth)), depth=depth)


# ---------------------------------------------------------------------------
# space-variant rendering


def _clamped_bandwidths(depth: int, sigma: float) -> np.ndarray:
    """Level bandwidths for selection, clamped at the attainable r = 1."""
    return np.minimum(
        np.array([half_max_bandwidth(i, sigma) for i in range(depth + 1)]), 1.0
    )


def foveate(
    image: np.ndarray,
    placement: "Placement | None",
    fixations: "list[FixationPoint] | list[tuple[float, float]]",
    alpha: float = DEFAULT_ALPHA,
    fieldgeom: FieldGeometry = None,
    sigma: float = DEFAULT_SIGMA,
    depth: int = DEFAULT_DEPTH,
    mode: str = "image",
    pad_value: float = 127.0,
) -> FoveatedImage:
    """Render an image as seen with the given fixations.

    ``placement`` locates the image inside ``fieldgeom`` (defaults to the
    image filling a field of its own size); fixation coordinates are in field
    space and must lie inside the field, not necessarily inside the image.

    ``mode="image"`` (default) filters within the image rectangle only, with
    edge-clamp padding. ``mode="field"`` embeds the image in a field-sized
    canvas at ``pad_value`` so blur can mix in surround pixels, then crops
    back; output dimensions equal the input either way.

    Output dtype matches the input; fully-resolved pixels are bit-identical
    to the source.
    """
    arr = np.asarray(image)
    if arr.ndim not in (2, 3) or arr.size == 0:
        raise DomainError(f"expected non-empty (H, W) or (H, W, C) image, got shape {arr.shape}")
    if not fixations:
        raise DomainError("need at least one fixation")
    h, w = arr.shape[:2]
    if fieldgeom is None:
        fieldgeom = FieldGeometry(
            width=w if placement is None else max(w, placement.offset_x + placement.width),
            height=h if placement is None else max(h, placement.offset_y + placement.height),
        )
    if placement is None:
        placement = Placement(0, 0, w, h)
    if (placement.width, placement.height) != (w, h):
        raise DomainError(
            f"image is {w}x{h} but placement expects {placement.width}x{placement.height}; "
            "resize before foveating"
        )
    if mode not in ("image", "field"):
        raise DomainError(f"mode must be 'image' or 'field', got {mode!r}")

    fixpts = tuple(
        f if isinstance(f, FixationPoint) else FixationPoint(float(f[0]), float(f[1]), i)
        for i, f in enumerate(fixations)
    )
    compute_dtype = np.float64 if arr.dtype == np.float64 else np.float32
    window = None if mode == "field" else placement
    r_full = _resolution_over_window(fieldgeom, fixpts, alpha, window, compute_dtype)

    if mode == "field":
        canvas = np.full(
            (fieldgeom.height, fieldgeom.width) + arr.shape[2:], pad_value, dtype=compute_dtype
        )
        sl = (
            slice(placement.offset_y, placement.offset_y + h),
            slice(placement.offset_x, placement.offset_x + w),
        )
        canvas[sl] = arr
        blended = _blend(canvas, r_full, sigma, depth)
        out = blended[sl]
        r_out = np.ascontiguousarray(r_full[sl])
    else:
        out = _blend(arr.astype(compute_dtype, copy=False), r_full, sigma, depth)
        r_out = r_full
    return FoveatedImage(
        pixels=quantize_like(out, arr),
        resolution=ResolutionMap(r=r_out, alpha=float(alpha)),
        fixations=fixpts,
    )


def _resolution_over_window(
    fieldgeom: FieldGeometry,
    fixpts: "tuple[FixationPoint, ...]",
    alpha: float,
    window: "Placement | None",
    dtype: type,
) -> np.ndarray:
    """Resolution map over the window (or full field) in the compute dtype.

    Matches resolution_map over combined eccentricity maps but stays in one
    precision end to end, which halves memory traffic for float32 renders.
    """
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise DomainError(f"alpha must be positive and finite, got {alpha}")
    if window is None:
        ox = oy = 0
        w, h = fieldgeom.width, fieldgeom.height
    else:
        ox, oy = window.offset_x, window.offset_y
        w, h = window.width, window.height
    xs = np.arange(ox, ox + w, dtype=dtype)
    ys = np.arange(oy, oy + h, dtype=dtype)
    acc = None
    for f in fixpts:
        if not fieldgeom.contains(f.x, f.y):
            raise DomainError(
                f"fixation ({f.x}, {f.y}) outside field {fieldgeom.width}x{fieldgeom.height}"
            )
        dx2 = (xs - dtype(f.x)) ** 2
        dy2 = (ys - dtype(f.y)) ** 2
        d2 = np.add.outer(dy2, dx2)
        acc = d2 if acc is None else np.minimum(acc, d2, out=acc)
    np.sqrt(acc, out=acc)
    acc *= dtype(1.0 / fieldgeom.ppd)
    np.add(acc, dtype(alpha), out=acc)
    np.divide(dtype(alpha), acc, out=acc)
    return acc


def _blend(work: np.ndarray, r: np.ndarray, sigma: float, depth: int) -> np.ndarray:
    """Per-pixel interpolation of the two bandwidth-bracketing pyramid levels."""
    bands = _clamped_bandwidths(depth, sigma)           # descending, length depth+1
    r = np.ascontiguousarray(r, dtype=work.dtype)
    out = work.copy()
    flat_r = r.ravel()
    flat_rest = np.flatnonzero(flat_r < bands[0])
    if flat_rest.size == 0:
        return out
    r_rest = flat_r[flat_rest]
    # Bracket b satisfies R_b <= r < R_b-1 with R_b = R_0 / 2^b, so b falls
    # straight out of the exponent of r / R_0. Boundary ties are harmless:
    # the blend weight is continuous (0 or 1) at every band edge.
    exponent = np.frexp(r_rest * (1.0 / (8.0 * _SQRT_LN2 * sigma)))[1]
    bracket = 1 - exponent
    np.clip(bracket, 1, depth, out=bracket)
    max_level = int(bracket.max())

    # A level is only needed inside the union row-span of the two brackets
    # that reference it; flat_rest is sorted, so spans are O(1) lookups.
    width = r.shape[1]
    sels: "dict[int, np.ndarray]" = {}
    spans: "dict[int, tuple[int, int]]" = {}
    for b in range(1, max_level + 1):
        idx = flat_rest[bracket == b]
        if idx.size:
            sels[b] = idx
            spans[b] = (int(idx[0] // width), int(idx[-1] // width) + 1)
    rois: "list[tuple | None]" = [None] * (max_level + 1)
    for lev in range(1, max_level + 1):
        rows = [spans[b] for b in (lev, lev + 1) if b in spans]
        if rows:
            rois[lev] = (
                (min(t[0] for t in rows), max(t[1] for t in rows)),
                (0, width),
            )
    levels = _build_levels(work, max_level, rois=rois)

    n_px = flat_r.size
    out2 = out.reshape(n_px, -1)
    lv2 = [None if lv is None else lv.reshape(n_px, -1) for lv in levels]
    for b, idx in sels.items():
        # Inline transfer ratio: T_i at r/2 on the quarter-cycle axis, with
        # T_b = T_b-1^4 because the level sigma halves.
        q = flat_r[idx] * (0.125 / sigma * 2.0 ** (b - 1))
        t_hi = np.exp(-(q * q))
        t_sq = t_hi * t_hi
        t_lo = t_sq * t_sq
        weight = np.clip((0.5 - t_lo) / (t_hi - t_lo), 0.0, 1.0)[:, None]
        lo = lv2[b][idx]
        out2[idx] = lo + weight * (lv2[b - 1][idx] - lo)
    return out


# ---------------------------------------------------------------------------
# brute-force reference (testing use only)


def reference_sigma_px(r_value: float) -> float:
    """Spatial std (px) of the Gaussian whose half-max bandwidth equals r."""
    if not (0.0 < r_value <= 1.0):
        raise DomainError(f"r must lie in (0, 1], got {r_value}")
    return 8.0 * _SQRT_LN2 / (2.0 * math.pi * r_value)


def reference_blur(
    image: np.ndarray,
    rmap: ResolutionMap,
    sigma: float = DEFAULT_SIGMA,
) -> np.ndarray:
    """Direct per-pixel space-variant Gaussian blur; O(N * k^2).

    The independent slow path for validating ``foveate``: each output pixel is
    the convolution of the edge-clamped source with the spatial Gaussian whose
    half-max frequency bandwidth equals r at that pixel. Pixels with
    r >= min(R_0, 1) copy the source, mirroring the fast path's contract.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim not in (2, 3) or arr.size == 0:
        raise DomainError(f"expected non-empty image, got shape {arr.shape}")
    r = np.asarray(rmap.r, dtype=np.float64)
    if r.shape != arr.shape[:2]:
        raise DomainError(f"resolution map {r.shape} does not match image {arr.shape[:2]}")
    pristine_band = min(half_max_bandwidth(0, sigma), 1.0)
    r_min = float(r.min())
    max_radius = 1
    if r_min < pristine_band:
        max_radius = max(1, int(math.ceil(3.0 * reference_sigma_px(r_min))))
    pad_spec = [(max_radius, max_radius), (max_radius, max_radius)] + [(0, 0)] * (arr.ndim - 2)
    padded = np.pad(arr, pad_spec, mode="edge")
    out = np.empty_like(arr)
    h, w = arr.shape[:2]
    for y in range(h):
        for x in range(w):
            rv = r[y, x]
            if rv >= pristine_band:
                out[y, x] = arr[y, x]
                continue
            s = reference_sigma_px(rv)
            k = max(1, int(math.ceil(3.0 * s)))
            offs = np.arange(-k, k + 1, dtype=np.float64)
            g = np.exp(-(offs ** 2) / (2.0 * s * s))
            g /= g.sum()
            win = padded[
                y + max_radius - k : y + max_radius + k + 1,
                x + max_radius - k : x + max_radius + k + 1,
            ]
            if arr.ndim == 3:
                out[y, x] = np.einsum("i,j,ijc->c", g, g, win)
            else:
                out[y, x] = g @ win @ g
    return out
