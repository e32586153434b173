"""Fixation sequence generation: trained policies, priority maps, random walks.

Three generators share one output type. Policy rollouts are greedy inference
over a trained chain; priority-map scanpaths smooth a static map and apply
inhibition of return around each pick; the random baseline draws uniform
points under a minimum-separation constraint.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import DataFormatError, DomainError
from .geometry import DEFAULT_FIELD, FieldGeometry, FixationPoint, Placement
from .imageio import read_image
from .oracle import Scene
from .policy import PolicyChain, rollout_chain

DEEPGAZE_IOR_DVA = 2.6
GBVS_IOR_DVA = 2.8
ITTI_KOCH_IOR_DVA = 2.0
RANDOM_IOR_DVA = 2.0
_MAX_REJECTION_TRIES = 10_000


@dataclass(frozen=True)
class FixationSequence:
    """Ordered fixations for one scene; index 0 is the initial fixation."""

    source: str
    scene_id: str
    fixations: "tuple[FixationPoint, ...]"
    subject_id: "str | None" = None
    flagged: bool = False

    def __post_init__(self):
        object.__setattr__(self, "fixations", tuple(self.fixations))
        if not self.fixations:
            raise DomainError("a fixation sequence needs at least one fixation")


@dataclass(frozen=True)
class PriorityMap:
    """Static non-negative priority grid at field resolution."""

    values: np.ndarray
    source: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DomainError(f"priority map must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise DomainError("priority values must be finite and non-negative")
        if not np.any(v > 0.0):
            raise DomainError("priority map is all zero")
        object.__setattr__(self, "values", v)


def load_priority_map(path) -> PriorityMap:
    """Read a grayscale image or CSV grid and scale its peak to 1."""
    name = os.fspath(path)
    stem = os.path.splitext(os.path.basename(name))[0]
    ext = os.path.splitext(name)[1].lower()
    if ext == ".csv":
        try:
            values = np.loadtxt(name, delimiter=",", dtype=np.float64, ndmin=2)
        except (OSError, ValueError) as exc:
            raise DataFormatError(f"{name}: cannot parse CSV grid: {exc}") from exc
    else:
        img = read_image(name)
        if img.ndim == 3:
            img = img.mean(axis=2)
        values = img.astype(np.float64)
    peak = values.max() if values.size else 0.0
    if not peak > 0.0:
        raise DataFormatError(f"{name}: priority map is empty or all zero")
    return PriorityMap(values=values / peak, source=stem)


# ---------------------------------------------------------------------------
# policy rollouts


def policy_scanpath(
    chain: PolicyChain,
    scene: Scene,
    initial: FixationPoint,
    source: str = "model",
    describe_samples: int = 10,
    describe_seed: int = 0,
) -> FixationSequence:
    """Greedy chain inference: initial fixation plus one pick per step net."""
    roll = rollout_chain(
        chain, scene, initial, mode="greedy",
        describe_samples=describe_samples, describe_seed=describe_seed,
    )
    return FixationSequence(source=source, scene_id=scene.id, fixations=roll.fixations)


# ---------------------------------------------------------------------------
# priority-map scanpaths with inhibition of return


def _circular_kernel(radius_px: float) -> np.ndarray:
    n = int(math.floor(radius_px))
    off = np.arange(-n, n + 1, dtype=np.float64)
    inside = (off[:, None] ** 2 + off[None, :] ** 2) <= radius_px ** 2
    return inside / inside.sum()


def smooth_priority_map(pmap: PriorityMap, diameter_dva: float,
                        fieldgeom: FieldGeometry = DEFAULT_FIELD) -> PriorityMap:
    """Circular mean filter of the given angular diameter, edge-clamped."""
    if diameter_dva <= 0.0:
        raise DomainError(f"smoothing diameter must be positive, got {diameter_dva}")
    radius = diameter_dva / 2.0 * fieldgeom.ppd
    kernel = _circular_kernel(radius)
    pad = kernel.shape[0] // 2
    padded = np.pad(pmap.values, pad, mode="edge")
    out = fftconvolve(padded, kernel, mode="valid")
    return PriorityMap(values=np.maximum(out, 0.0), source=pmap.source)


def _zero_disc(values: np.ndarray, x: float, y: float, radius_px: float) -> None:
    h, w = values.shape
    x0 = max(0, int(math.floor(x - radius_px)) - 1)
    x1 = min(w, int(math.ceil(x + radius_px)) + 2)
    y0 = max(0, int(math.floor(y - radius_px)) - 1)
    y1 = min(h, int(math.ceil(y + radius_px)) + 2)
    ys = np.arange(y0, y1, dtype=np.float64) - y
    xs = np.arange(x0, x1, dtype=np.float64) - x
    hit = (ys[:, None] ** 2 + xs[None, :] ** 2) < radius_px ** 2  # strict membership
    values[y0:y1, x0:x1][hit] = 0.0


def _random_unvisited(values_shape, prior, rng):
    # exhaustion fallback: any integer pixel not already fixated
    h, w = values_shape
    visited = {(p.x, p.y) for p in prior}
    for _ in range(_MAX_REJECTION_TRIES):
        x = float(rng.integers(0, w))
        y = float(rng.integers(0, h))
        if (x, y) not in visited:
            return FixationPoint(x, y)
    raise DomainError("field too small: no unvisited pixel left to fixate")


def map_scanpath(
    pmap: PriorityMap,
    n: int,
    ior_diameter_dva: float,
    smooth_dva: float,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    initial: "FixationPoint | None" = None,
    rng: "np.random.Generator | None" = None,
    scene_id: str = "",
) -> FixationSequence:
    """Pick n argmax fixations, zeroing an IOR disc after each.

    The map is smoothed first with a circular mean filter. Argmax ties break
    at the lowest row-major pixel. If the map is exhausted the remaining
    fixations fall back to uniform-random unvisited pixels and the sequence
    is flagged. An initial fixation, when given, is prepended and inhibited
    before the first pick.
    """
    if n < 1:
        raise DomainError(f"need at least one fixation, got n={n}")
    if ior_diameter_dva <= 0.0:
        raise DomainError(f"IOR diameter must be positive, got {ior_diameter_dva}")
    expect = (fieldgeom.height, fieldgeom.width)
    if pmap.values.shape != expect:
        raise DomainError(
            f"priority map {pmap.values.shape} does not match field {expect}"
        )
    values = (
        smooth_priority_map(pmap, smooth_dva, fieldgeom).values.copy()
        if smooth_dva > 0.0
        else pmap.values.copy()
    )
    radius = ior_diameter_dva / 2.0 * fieldgeom.ppd
    fixations = []
    if initial is not None:
        fixations.append(initial)
        _zero_disc(values, initial.x, initial.y, radius)
    flagged = False
    for _ in range(n):
        peak = values.max()
        if peak > 0.0:
            flat = int(np.argmax(values))
            row, col = flat // values.shape[1], flat % values.shape[1]
            fix = FixationPoint(float(col), float(row))
        else:
            flagged = True
            if rng is None:
                rng = np.random.default_rng(0)
            fix = _random_unvisited(values.shape, fixations, rng)
        fixations.append(fix)
        _zero_disc(values, fix.x, fix.y, radius)
    return FixationSequence(
        source=pmap.source, scene_id=scene_id,
        fixations=tuple(fixations), flagged=flagged,
    )


# ---------------------------------------------------------------------------
# random baseline


def random_scanpath(
    fieldgeom: FieldGeometry,
    n: int,
    ior_diameter_dva: float = RANDOM_IOR_DVA,
    rng: "np.random.Generator | int | None" = None,
    region: "Placement | None" = None,
    scene_id: str = "",
    source: str = "random",
) -> FixationSequence:
    """Uniform fixations over the image rectangle, pairwise >= the IOR distance."""
    if n < 1:
        raise DomainError(f"need at least one fixation, got n={n}")
    if ior_diameter_dva <= 0.0:
        raise DomainError(f"IOR diameter must be positive, got {ior_diameter_dva}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if region is None:
        x0, y0 = 0.0, 0.0
        w, h = float(fieldgeom.width), float(fieldgeom.height)
    else:
        x0, y0 = float(region.offset_x), float(region.offset_y)
        w, h = float(region.width), float(region.height)
    min_px = ior_diameter_dva * fieldgeom.ppd
    points = []
    for _ in range(n):
        for _ in range(_MAX_REJECTION_TRIES):
            x = x0 + gen.uniform(0.0, w)
            y = y0 + gen.uniform(0.0, h)
            if all((x - p.x) ** 2 + (y - p.y) ** 2 >= min_px ** 2 for p in points):
                points.append(FixationPoint(x, y))
                break
        else:
            raise DomainError(
                f"cannot place {n} fixations {ior_diameter_dva} DVA apart "
                f"in a {w:.0f}x{h:.0f} px region"
            )
    return FixationSequence(source=source, scene_id=scene_id, fixations=tuple(points))


# ---------------------------------------------------------------------------
# model prediction heatmaps


def prediction_heatmap(
    per_step, fieldgeom: FieldGeometry = DEFAULT_FIELD, source: str = "prediction"
) -> PriorityMap:
    """Element-wise max of per-step action maps, nearest-cell upsampled."""
    if not per_step:
        raise DomainError("need at least one action distribution")
    grids = [d.probs for d in per_step]
    shape = grids[0].shape
    if any(g.shape != shape for g in grids):
        raise DomainError("action maps must share one grid shape")
    gh, gw = shape
    if fieldgeom.height % gh or fieldgeom.width % gw:
        raise DomainError(
            f"grid {gh}x{gw} does not divide the "
            f"{fieldgeom.width}x{fieldgeom.height} field evenly"
        )
    vals = np.maximum.reduce(grids)
    full = np.repeat(
        np.repeat(vals, fieldgeom.height // gh, axis=0), fieldgeom.width // gw, axis=1
    )
    return PriorityMap(values=full, source=source)
