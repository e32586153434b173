"""Seeded synthetic scene corpora, scene JSON files, and fixation CSV ingest.

Corpora are reproducible bit-for-bit from (spec, seed): category quotas are
allocated by largest remainder over the whole corpus, then geometry is drawn
per scene from a child generator keyed by (seed, scene index).
"""

import csv
import json
import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DataFormatError, DomainError
from .evaluation import (
    CATEGORY_TABLE,
    CENTER_BIAS_DIAMETER_DVA,
    CategoryMaskSet,
)
from .geometry import DEFAULT_FIELD, FieldGeometry, FixationPoint, Placement
from .imageio import read_image
from .oracle import CATEGORIES, RegionMask, Scene, SemanticRegion
from .scanpath import FixationSequence

CORPUS_FORMAT = "gazeopt-scenes"
CORPUS_VERSION = 1
FIXATION_HEADER = ("scene_id", "source", "subject_id", "index", "x_px", "y_px")
RELEVANT_IMPORTANCE_MIN = 0.95
_PACK_RETRIES = 200


@dataclass(frozen=True)
class CorpusSpec:
    """Recipe for a synthetic corpus; all randomness flows from the seed."""

    n_scenes: int
    fieldgeom: FieldGeometry = DEFAULT_FIELD
    region_counts: "tuple[tuple[int, float], ...]" = ((1, 0.5), (2, 0.3), (3, 0.2))
    category_mix: "tuple[tuple[str, float], ...]" = (
        ("person", 0.3), ("text", 0.2), ("su_i_object", 0.2),
        ("salient", 0.15), ("other", 0.15),
    )
    concept_dim: int = 8
    seed: int = 0
    region_size_range: "tuple[int, int]" = (120, 320)
    ensure_relevant: bool = True
    salient_min_dva: float = 2.0

    def __post_init__(self):
        if self.n_scenes < 1:
            raise DomainError(f"need at least one scene, got {self.n_scenes}")
        for label, pairs in (("region count", self.region_counts),
                             ("category mix", self.category_mix)):
            if not pairs:
                raise DomainError(f"{label} distribution is empty")
            total = sum(p for _, p in pairs)
            if abs(total - 1.0) > 1e-9:
                raise DomainError(f"{label} proportions must sum to 1, got {total}")
            if any(p < 0.0 for _, p in pairs):
                raise DomainError(f"{label} proportions must be non-negative")
        if any(n < 1 for n, _ in self.region_counts):
            raise DomainError("region counts must be at least 1")
        for cat, _ in self.category_mix:
            if cat not in CATEGORIES:
                raise DomainError(f"unknown category {cat!r}")
        max_regions = max(n for n, _ in self.region_counts)
        if self.concept_dim < max_regions + 1:
            raise DomainError(
                f"concept dimension {self.concept_dim} cannot hold "
                f"{max_regions} orthogonal regions plus the gist"
            )
        lo, hi = self.region_size_range
        if not (3 <= lo <= hi):
            raise DomainError(f"region sizes must satisfy 3 <= lo <= hi, got {lo}..{hi}")
        if hi > min(self.fieldgeom.width, self.fieldgeom.height):
            raise DomainError("largest region does not fit in the field")
        if self.salient_min_dva < 0.0:
            raise DomainError("salient separation must be non-negative")


def _quota(total: int, pairs, rng) -> "list[str]":
    """Largest-remainder allocation, shuffled; exact to within one slot."""
    names = [name for name, _ in pairs]
    raw = np.array([p for _, p in pairs]) * total
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind="stable")
    for i in order[: total - counts.sum()]:
        counts[i] += 1
    pool = [name for name, c in zip(names, counts) for _ in range(c)]
    rng.shuffle(pool)
    return pool


def _unit(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


def _overlaps(box, others) -> bool:
    x0, y0, x1, y1 = box
    for ox0, oy0, ox1, oy1 in others:
        if x0 < ox1 + 1 and ox0 < x1 + 1 and y0 < oy1 + 1 and oy0 < y1 + 1:
            return True
    return False


def _place_region(rng, spec, taken, min_center_dist=None, anchor=None):
    """Draw a non-overlapping rect or ellipse; bounded retries."""
    W, H = spec.fieldgeom.width, spec.fieldgeom.height
    lo, hi = spec.region_size_range
    for _ in range(_PACK_RETRIES):
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        x0 = int(rng.integers(0, W - w + 1))
        y0 = int(rng.integers(0, H - h + 1))
        box = (x0, y0, x0 + w, y0 + h)
        if _overlaps(box, taken):
            continue
        cx, cy = x0 + (w - 1) / 2.0, y0 + (h - 1) / 2.0
        if min_center_dist is not None and anchor is not None:
            if np.hypot(cx - anchor[0], cy - anchor[1]) < min_center_dist:
                continue
        if rng.random() < 0.5:
            mask = RegionMask("rect", (x0, y0, w, h))
        else:
            mask = RegionMask("ellipse", (cx, cy, (w - 1) / 2.0, (h - 1) / 2.0))
        taken.append(box)
        return mask, (cx, cy)
    raise DomainError(
        f"cannot pack a {lo}..{hi} px region into {W}x{H} "
        f"after {_PACK_RETRIES} tries"
    )


def generate_corpus(spec: CorpusSpec) -> "list[Scene]":
    """Build the corpus described by the spec, deterministically.

    Every scene gets exactly one relevant region (importance >= 0.95,
    weight 1) when ensure_relevant is set; remaining region slots take
    categories from the corpus-wide quota.
    """
    master = np.random.default_rng(spec.seed)
    counts = [n for n, _ in spec.region_counts]
    probs = [p for _, p in spec.region_counts]
    per_scene = master.choice(counts, size=spec.n_scenes, p=probs)
    reserved = 1 if spec.ensure_relevant else 0
    pool = _quota(int(np.sum(np.maximum(per_scene - reserved, 0))),
                  spec.category_mix, master)
    pool_at = 0
    scenes = []
    for i in range(spec.n_scenes):
        rng = np.random.default_rng([spec.seed, i])
        n_regions = int(per_scene[i])
        cats = []
        if spec.ensure_relevant:
            cats.append("su_r_object")
        extra = n_regions - len(cats)
        cats.extend(pool[pool_at : pool_at + extra])
        pool_at += extra
        taken: list = []
        regions = []
        anchor = None
        for j, cat in enumerate(cats):
            relevant = spec.ensure_relevant and j == 0
            min_dist = None
            if cat == "salient" and anchor is not None:
                min_dist = spec.salient_min_dva * spec.fieldgeom.ppd
            mask, center = _place_region(rng, spec, taken, min_dist, anchor)
            if j == 0:
                anchor = center
            if relevant:
                weight = 1.0
                importance = float(rng.uniform(RELEVANT_IMPORTANCE_MIN, 1.0))
            else:
                weight = 1.0 if j == 0 else float(rng.uniform(0.3, 0.9))
                importance = float(rng.uniform(0.1, 0.9))
            regions.append(SemanticRegion(
                mask=mask,
                weight=weight,
                concept=_unit(spec.concept_dim, j + 1),
                category=cat,
                gaze_grasp_flag=bool(rng.random() < 0.5) if relevant else False,
                importance=importance,
            ))
        scenes.append(Scene(
            id=f"s{spec.seed}_{i:04d}",
            placement=Placement(0, 0, spec.fieldgeom.width, spec.fieldgeom.height),
            regions=tuple(regions),
            base_concept=_unit(spec.concept_dim, 0),
        ))
    return scenes


# ---------------------------------------------------------------------------
# controlled layouts for training and evaluation experiments


def _cell_rect(rng, fieldgeom, grid, cell, size, jitter):
    """A size x size rect jittered around the center of one grid cell."""
    gh, gw = grid
    cell_h, cell_w = fieldgeom.height // gh, fieldgeom.width // gw
    row, col = cell
    cx = col * cell_w + cell_w // 2 + int(rng.integers(-jitter, jitter + 1))
    cy = row * cell_h + cell_h // 2 + int(rng.integers(-jitter, jitter + 1))
    x0 = min(max(cx - size // 2, 0), fieldgeom.width - size)
    y0 = min(max(cy - size // 2, 0), fieldgeom.height - size)
    return RegionMask("rect", (x0, y0, size, size))


def aligned_single_region_corpus(
    n_scenes: int,
    fieldgeom: FieldGeometry,
    grid: "tuple[int, int]" = (5, 5),
    seed: int = 0,
    region_size: int = 48,
    jitter: int = 8,
    concept_dim: int = 4,
) -> "list[Scene]":
    """One relevant region per scene, centered in a random grid cell.

    The region stays inside its cell, so the best single fixation is that
    cell's center; useful for exhaustive-enumeration checks.
    """
    scenes = []
    gh, gw = grid
    for i in range(n_scenes):
        rng = np.random.default_rng([seed, i])
        cell = (int(rng.integers(0, gh)), int(rng.integers(0, gw)))
        mask = _cell_rect(rng, fieldgeom, grid, cell, region_size, jitter)
        scenes.append(Scene(
            id=f"one{seed}_{i:04d}",
            placement=Placement(0, 0, fieldgeom.width, fieldgeom.height),
            regions=(SemanticRegion(
                mask=mask, weight=1.0, concept=_unit(concept_dim, 1),
                category="su_r_object", importance=1.0,
            ),),
            base_concept=_unit(concept_dim, 0),
        ))
    return scenes


_QUADRANT_CELLS = {
    0: ((0, 0), (0, 1), (1, 0), (1, 1)),
    1: ((0, 3), (0, 4), (1, 3), (1, 4)),
    2: ((3, 0), (3, 1), (4, 0), (4, 1)),
    3: ((3, 3), (3, 4), (4, 3), (4, 4)),
}


def quadrant_corpus(
    n_scenes: int,
    fieldgeom: FieldGeometry,
    seed: int = 0,
    region_size: int = 48,
    jitter: int = 8,
    concept_dim: int = 6,
) -> "list[Scene]":
    """Four regions per scene, one per field quadrant on a 5 x 5 grid.

    Region weights step down 1.0, 0.9, 0.8, 0.7 in a per-scene shuffled
    quadrant order, so a good fixation chain visits all four cells.
    """
    weights = (1.0, 0.9, 0.8, 0.7)
    cats = ("su_r_object", "person", "text", "other")
    scenes = []
    for i in range(n_scenes):
        rng = np.random.default_rng([seed, i])
        order = rng.permutation(4)
        regions = []
        for j, quad in enumerate(order):
            cells = _QUADRANT_CELLS[int(quad)]
            cell = cells[int(rng.integers(0, len(cells)))]
            mask = _cell_rect(rng, fieldgeom, (5, 5), cell, region_size, jitter)
            regions.append(SemanticRegion(
                mask=mask, weight=weights[j], concept=_unit(concept_dim, j + 1),
                category=cats[j], importance=1.0 if j == 0 else 0.5,
            ))
        scenes.append(Scene(
            id=f"quad{seed}_{i:04d}",
            placement=Placement(0, 0, fieldgeom.width, fieldgeom.height),
            regions=tuple(regions),
            base_concept=_unit(concept_dim, 0),
        ))
    return scenes


def distractor_pair_corpus(
    n_scenes: int,
    fieldgeom: FieldGeometry,
    grid: "tuple[int, int]" = (5, 5),
    seed: int = 0,
    region_size: int = 48,
    jitter: int = 8,
    concept_dim: int = 4,
    distractor_weight: float = 0.45,
) -> "list[Scene]":
    """One relevant region plus one weak ambient distractor per scene."""
    gh, gw = grid
    scenes = []
    for i in range(n_scenes):
        rng = np.random.default_rng([seed, i])
        cell_r = (int(rng.integers(0, gh)), int(rng.integers(0, gw)))
        while True:
            cell_i = (int(rng.integers(0, gh)), int(rng.integers(0, gw)))
            if cell_i != cell_r:
                break
        mask_r = _cell_rect(rng, fieldgeom, grid, cell_r, region_size, jitter)
        mask_i = _cell_rect(rng, fieldgeom, grid, cell_i, region_size, jitter)
        scenes.append(Scene(
            id=f"pair{seed}_{i:04d}",
            placement=Placement(0, 0, fieldgeom.width, fieldgeom.height),
            regions=(
                SemanticRegion(
                    mask=mask_r, weight=1.0, concept=_unit(concept_dim, 1),
                    category="su_r_object", importance=1.0,
                ),
                SemanticRegion(
                    mask=mask_i, weight=distractor_weight,
                    concept=_unit(concept_dim, 2),
                    category="su_i_object", importance=0.3,
                ),
            ),
            base_concept=_unit(concept_dim, 0),
        ))
    return scenes


# ---------------------------------------------------------------------------
# scene JSON files (versioned; unknown fields survive a round-trip)

_REGION_KEYS = {"mask", "weight", "concept", "category", "gaze_grasp_flag",
                "importance"}
_SCENE_KEYS = {"id", "placement", "regions", "base_concept"}


def _region_to_dict(reg: SemanticRegion) -> dict:
    out = {
        "mask": reg.mask.to_dict(),
        "weight": reg.weight,
        "concept": [float(v) for v in reg.concept],
        "category": reg.category,
        "gaze_grasp_flag": reg.gaze_grasp_flag,
        "importance": reg.importance,
    }
    out.update(reg.extra)
    return out


def _scene_to_dict(scene: Scene) -> dict:
    out = {
        "id": scene.id,
        "placement": scene.placement.to_dict(),
        "regions": [_region_to_dict(r) for r in scene.regions],
        "base_concept": [float(v) for v in scene.base_concept],
    }
    out.update(scene.extra)
    return out


def _region_from_dict(data: dict) -> SemanticRegion:
    extra = {k: v for k, v in data.items() if k not in _REGION_KEYS}
    return SemanticRegion(
        mask=RegionMask.from_dict(data["mask"]),
        weight=float(data["weight"]),
        concept=np.asarray(data["concept"], dtype=np.float64),
        category=data["category"],
        gaze_grasp_flag=bool(data.get("gaze_grasp_flag", False)),
        importance=float(data.get("importance", 1.0)),
        extra=extra,
    )


def _scene_from_dict(data: dict) -> Scene:
    extra = {k: v for k, v in data.items() if k not in _SCENE_KEYS}
    return Scene(
        id=data["id"],
        placement=Placement.from_dict(data["placement"]),
        regions=tuple(_region_from_dict(r) for r in data["regions"]),
        base_concept=np.asarray(data["base_concept"], dtype=np.float64),
        extra=extra,
    )


def save_scenes(scenes: "list[Scene]", path) -> None:
    """Write scenes as versioned JSON; byte-stable for identical corpora."""
    payload = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "scenes": [_scene_to_dict(s) for s in scenes],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenes(path) -> "list[Scene]":
    """Read a scene JSON file, re-validating every scene invariant."""
    name = os.fspath(path)
    try:
        with open(name, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError as exc:
        raise DataFormatError(f"scene file not found: {name}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{name}: cannot parse scene JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CORPUS_FORMAT:
        raise DataFormatError(f"{name}: not a scene corpus file")
    if payload.get("version") != CORPUS_VERSION:
        raise DataFormatError(
            f"{name}: unsupported corpus version {payload.get('version')!r}"
        )
    try:
        return [_scene_from_dict(d) for d in payload["scenes"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{name}: malformed scene entry: {exc}") from exc


# ---------------------------------------------------------------------------
# fixation CSV ingest


def save_fixations(sequences: "list[FixationSequence]", path) -> None:
    """Write sequences to CSV, one row per fixation, index from position."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIXATION_HEADER)
        for seq in sequences:
            for i, fix in enumerate(seq.fixations):
                writer.writerow([
                    seq.scene_id, seq.source, seq.subject_id or "",
                    i, repr(float(fix.x)), repr(float(fix.y)),
                ])


def load_fixations(
    path,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    oob: str = "clamp",
) -> "list[FixationSequence]":
    """Read a fixation CSV into sequences grouped by (subject, scene).

    Rows sort by their index column within each group. Out-of-bounds
    coordinates warn and are clamped to the field or dropped, per the oob
    flag. Malformed rows fail with their line number.
    """
    if oob not in ("clamp", "drop"):
        raise DomainError(f"oob must be 'clamp' or 'drop', got {oob!r}")
    name = os.fspath(path)
    try:
        fh = open(name, "r", encoding="utf-8", newline="")
    except FileNotFoundError as exc:
        raise DataFormatError(f"fixation file not found: {name}") from exc
    groups: "dict[tuple, list]" = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(h.strip() for h in header) != FIXATION_HEADER:
            raise DataFormatError(
                f"{name}:1: expected header {','.join(FIXATION_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FIXATION_HEADER):
                raise DataFormatError(
                    f"{name}:{lineno}: expected {len(FIXATION_HEADER)} "
                    f"columns, got {len(row)}"
                )
            scene_id, source, subject, idx_s, x_s, y_s = row
            if not scene_id:
                raise DataFormatError(f"{name}:{lineno}: empty scene_id")
            try:
                idx = int(idx_s)
                x = float(x_s)
                y = float(y_s)
            except ValueError as exc:
                raise DataFormatError(
                    f"{name}:{lineno}: bad number: {exc}"
                ) from exc
            if not (np.isfinite(x) and np.isfinite(y)):
                raise DataFormatError(f"{name}:{lineno}: non-finite coordinates")
            if not fieldgeom.contains(x, y):
                if oob == "drop":
                    warnings.warn(
                        f"{name}:{lineno}: fixation ({x}, {y}) outside the "
                        f"field, dropped", stacklevel=2,
                    )
                    continue
                warnings.warn(
                    f"{name}:{lineno}: fixation ({x}, {y}) outside the "
                    f"field, clamped", stacklevel=2,
                )
                x = min(max(x, 0.0), fieldgeom.width - 1.0)
                y = min(max(y, 0.0), fieldgeom.height - 1.0)
            key = (subject, scene_id, source)
            bucket = groups.setdefault(key, [])
            bucket.append((idx, lineno, x, y))
    sequences = []
    for (subject, scene_id, source), rows in groups.items():
        rows.sort(key=lambda r: r[0])
        for (ia, la, _, _), (ib, lb, _, _) in zip(rows, rows[1:]):
            if ia == ib:
                raise DataFormatError(
                    f"{name}:{lb}: duplicate index {ib} for "
                    f"subject {subject!r} scene {scene_id!r}"
                )
        fixes = tuple(
            FixationPoint(x, y, index=i)
            for i, (_, _, x, y) in enumerate(rows)
        )
        sequences.append(FixationSequence(
            source=source, scene_id=scene_id, fixations=fixes,
            subject_id=subject or None,
        ))
    return sequences


# ---------------------------------------------------------------------------
# external category masks


def load_category_masks(
    directory,
    scene_id: str,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    center_bias_diameter_dva: float = CENTER_BIAS_DIAMETER_DVA,
) -> CategoryMaskSet:
    """Assemble a mask set from per-category images named scene__category.png.

    Missing files mean the category does not apply. The ambient-object count
    is the number of connected components in its mask; the center-bias disc
    is always computed geometrically.
    """
    h, w = fieldgeom.height, fieldgeom.width
    masks = {}
    applicable = {}
    su_i_count = 0
    for cat in CATEGORY_TABLE:
        if cat == "center_bias":
            continue
        path = os.path.join(os.fspath(directory), f"{scene_id}__{cat}.png")
        if not os.path.exists(path):
            masks[cat] = np.zeros((h, w), dtype=bool)
            applicable[cat] = False
            continue
        img = read_image(path)
        if img.ndim == 3:
            img = img.mean(axis=2)
        if img.shape != (h, w):
            raise DataFormatError(
                f"{path}: mask is {img.shape}, field is {(h, w)}"
            )
        mask = img > 127
        masks[cat] = mask
        applicable[cat] = bool(mask.any())
        if cat == "su_i" and mask.any():
            _, n = ndimage.label(mask)
            su_i_count = int(n)
    radius = center_bias_diameter_dva / 2.0 * fieldgeom.ppd
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy = np.arange(h, dtype=np.float64)[:, None] - cy
    xx = np.arange(w, dtype=np.float64)[None, :] - cx
    masks["center_bias"] = yy ** 2 + xx ** 2 <= radius ** 2
    applicable["center_bias"] = True
    return CategoryMaskSet(
        scene_id=scene_id, masks=masks, applicable=applicable,
        su_i_count=su_i_count,
    )
