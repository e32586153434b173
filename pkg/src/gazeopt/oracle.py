"""Deterministic scene-understanding stand-in and the two reward signals.

Scenes carry semantic regions with importance weights and mutually orthogonal
unit concept vectors. A seeded synthetic describer replaces the language-model
stack: region concepts enter each description embedding gated by how well the
region is resolved under the current resolution map, so semantic accuracy and
description entropy respond to gaze exactly the way the rewards assume:

- adding fixations never lowers semantic accuracy (monotone information);
- adding fixations never raises mean token entropy (anti-monotone entropy).

Both properties are theorems of the construction, not empirical tendencies,
which is what makes exhaustive reward enumeration in the tests trustworthy.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .foveation import ResolutionMap
from .geometry import Placement

CATEGORIES = ("person", "text", "su_r_object", "su_i_object", "salient", "other")

DEFAULT_EMBED_DIM = 32
DEFAULT_SAMPLES = 10
GATE_LOW = 0.35
GATE_HIGH = 0.75
REWARD_EPS = 1e-6
SU_R_IMPORTANCE = 0.95

_UNIT_TOL = 1e-6


# ---------------------------------------------------------------------------
# region masks


@dataclass(frozen=True)
class RegionMask:
    """Pixel support of a region: axis-aligned rect, ellipse, or run-length set.

    Rect params are (x0, y0, w, h) in integer pixels covering columns
    x0..x0+w-1. Ellipse params are (cx, cy, rx, ry); a pixel belongs when its
    center satisfies ((x-cx)/rx)^2 + ((y-cy)/ry)^2 <= 1. Rle params are
    (width, height, runs) with runs as (start, length) pairs over the
    row-major flattened grid.
    """

    kind: str
    params: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "rect":
            x0, y0, w, h = self.params
            if w < 1 or h < 1:
                raise DomainError(f"rect mask must be at least 1x1, got {w}x{h}")
            if x0 < 0 or y0 < 0:
                raise DomainError(f"rect mask origin must be non-negative, got ({x0}, {y0})")
        elif self.kind == "ellipse":
            cx, cy, rx, ry = self.params
            if rx <= 0 or ry <= 0:
                raise DomainError(f"ellipse radii must be positive, got ({rx}, {ry})")
        elif self.kind == "rle":
            w, h, runs = self.params
            if w < 1 or h < 1:
                raise DomainError(f"rle grid must be at least 1x1, got {w}x{h}")
            last = 0
            for start, length in runs:
                if length < 1 or start < last:
                    raise DomainError("rle runs must be sorted, disjoint, and non-empty")
                last = start + length
            if last > w * h:
                raise DomainError("rle runs exceed the grid")
        else:
            raise DomainError(f"unknown mask kind {self.kind!r}")

    def bounding_box(self) -> "tuple[int, int, int, int]":
        """(x0, y0, x1, y1) half-open pixel bounds containing the mask."""
        if self.kind == "rect":
            x0, y0, w, h = self.params
            return x0, y0, x0 + w, y0 + h
        if self.kind == "ellipse":
            cx, cy, rx, ry = self.params
            return (
                int(math.ceil(cx - rx)), int(math.ceil(cy - ry)),
                int(math.floor(cx + rx)) + 1, int(math.floor(cy + ry)) + 1,
            )
        w, h, runs = self.params
        if not runs:
            return 0, 0, 0, 0
        ys, xs = self.indices(w, h)
        return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1

    def indices(self, width: int, height: int) -> "tuple[np.ndarray, np.ndarray]":
        """Row and column indices of member pixels on a width x height grid."""
        key = (width, height)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.kind == "rect":
            x0, y0, w, h = self.params
            ys0 = np.arange(y0, min(y0 + h, height), dtype=np.intp)
            xs0 = np.arange(x0, min(x0 + w, width), dtype=np.intp)
            ys = np.repeat(ys0, xs0.size)
            xs = np.tile(xs0, ys0.size)
        elif self.kind == "ellipse":
            cx, cy, rx, ry = self.params
            bx0, by0, bx1, by1 = self.bounding_box()
            bx0, by0 = max(bx0, 0), max(by0, 0)
            bx1, by1 = min(bx1, width), min(by1, height)
            yy = np.arange(by0, by1, dtype=np.float64)
            xx = np.arange(bx0, bx1, dtype=np.float64)
            inside = (
                ((yy[:, None] - cy) / ry) ** 2 + ((xx[None, :] - cx) / rx) ** 2
            ) <= 1.0
            ys, xs = np.nonzero(inside)
            ys = ys + by0
            xs = xs + bx0
        else:
            w, h, runs = self.params
            if (w, h) != (width, height):
                raise DomainError(f"rle mask is {w}x{h}, queried as {width}x{height}")
            flat = np.concatenate(
                [np.arange(s, s + n, dtype=np.intp) for s, n in runs]
            ) if runs else np.empty(0, dtype=np.intp)
            ys, xs = np.divmod(flat, width)
        self._cache[key] = (ys, xs)
        return ys, xs

    def to_mask(self, width: int, height: int) -> np.ndarray:
        ys, xs = self.indices(width, height)
        out = np.zeros((height, width), dtype=bool)
        out[ys, xs] = True
        return out

    def area(self, width: int, height: int) -> int:
        return int(self.indices(width, height)[0].size)

    @staticmethod
    def from_mask(mask: np.ndarray) -> "RegionMask":
        """Encode a boolean pixel grid as run-length runs."""
        arr = np.asarray(mask, dtype=bool)
        if arr.ndim != 2:
            raise DomainError(f"expected a 2d mask, got shape {arr.shape}")
        flat = arr.ravel()
        edges = np.flatnonzero(np.diff(np.concatenate(([0], flat.view(np.uint8), [0]))))
        runs = tuple(
            (int(edges[i]), int(edges[i + 1] - edges[i])) for i in range(0, edges.size, 2)
        )
        return RegionMask("rle", (arr.shape[1], arr.shape[0], runs))

    def to_dict(self) -> dict:
        if self.kind == "rle":
            w, h, runs = self.params
            return {"kind": "rle", "width": w, "height": h,
                    "runs": [list(r) for r in runs]}
        return {"kind": self.kind, "params": list(self.params)}

    @staticmethod
    def from_dict(data: dict) -> "RegionMask":
        kind = data.get("kind")
        if kind == "rle":
            runs = tuple((int(s), int(n)) for s, n in data["runs"])
            return RegionMask("rle", (int(data["width"]), int(data["height"]), runs))
        if kind in ("rect", "ellipse"):
            params = data["params"]
            if kind == "rect":
                params = [int(v) for v in params]
            return RegionMask(kind, tuple(params))
        raise DomainError(f"unknown mask kind {kind!r}")


# ---------------------------------------------------------------------------
# scenes


@dataclass(frozen=True)
class SemanticRegion:
    """One annotated region: support mask, importance, and concept direction."""

    mask: RegionMask
    weight: float
    concept: np.ndarray
    category: str
    gaze_grasp_flag: bool = False
    importance: float = 1.0
    extra: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.weight <= 1.0):
            raise DomainError(f"region weight must lie in (0, 1], got {self.weight}")
        if not (0.0 < self.importance <= 1.0):
            raise DomainError(f"importance must lie in (0, 1], got {self.importance}")
        if self.category not in CATEGORIES:
            raise DomainError(f"unknown category {self.category!r}")
        concept = np.asarray(self.concept, dtype=np.float64)
        if concept.ndim != 1 or concept.size < 1:
            raise DomainError(f"concept must be a vector, got shape {concept.shape}")
        if abs(float(concept @ concept) - 1.0) > _UNIT_TOL:
            raise DomainError("concept vector must have unit norm")
        object.__setattr__(self, "concept", concept)


@dataclass(frozen=True)
class Scene:
    """Image placement plus its semantic regions and always-visible gist.

    The gist direction and all region concepts must be mutually orthonormal;
    descriptions rely on that to keep embeddings exactly unit-norm and the
    full-visibility similarity exactly 1.
    """

    id: str
    placement: Placement
    regions: "tuple[SemanticRegion, ...]"
    base_concept: np.ndarray
    extra: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        regions = tuple(self.regions)
        if not regions:
            raise DomainError(f"scene {self.id!r} has no regions")
        object.__setattr__(self, "regions", regions)
        base = np.asarray(self.base_concept, dtype=np.float64)
        if base.ndim != 1:
            raise DomainError("base concept must be a vector")
        object.__setattr__(self, "base_concept", base)
        vectors = [base] + [reg.concept for reg in regions]
        dim = base.size
        if any(v.size != dim for v in vectors):
            raise DomainError(f"scene {self.id!r} mixes concept dimensions")
        stack = np.stack(vectors)
        gram = stack @ stack.T
        if np.abs(gram - np.eye(len(vectors))).max() > 100.0 * _UNIT_TOL:
            raise DomainError(
                f"scene {self.id!r}: gist and region concepts must be orthonormal"
            )
        if abs(max(reg.weight for reg in regions) - 1.0) > _UNIT_TOL:
            raise DomainError(f"scene {self.id!r}: max region weight must be 1")
        w, h = self.placement.width, self.placement.height
        for i, reg in enumerate(regions):
            x0, y0, x1, y1 = reg.mask.bounding_box()
            if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
                raise DomainError(
                    f"scene {self.id!r}: region {i} mask escapes the {w}x{h} image"
                )
            if reg.mask.area(w, h) < 1:
                raise DomainError(f"scene {self.id!r}: region {i} mask is empty")

    @property
    def dim(self) -> int:
        return int(self.base_concept.size)


# ---------------------------------------------------------------------------
# gating and description sampling


def smoothstep(t: "float | np.ndarray") -> "float | np.ndarray":
    """Cubic ease 3t^2 - 2t^3 clamped to [0, 1] outside the unit interval."""
    tt = np.clip(t, 0.0, 1.0)
    out = tt * tt * (3.0 - 2.0 * tt)
    return float(out) if np.isscalar(t) else out


def gate(
    visibility_value: "float | np.ndarray",
    low: float = GATE_LOW,
    high: float = GATE_HIGH,
) -> "float | np.ndarray":
    """How strongly a region at the given visibility enters a description."""
    if not high > low:
        raise DomainError(f"gate thresholds must satisfy high > low, got {low}, {high}")
    if np.isscalar(visibility_value):
        return smoothstep((visibility_value - low) / (high - low))
    scaled = (np.asarray(visibility_value, dtype=np.float64) - low) / (high - low)
    return smoothstep(scaled)


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) in nats; 0 at both endpoints."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log(p) - (1.0 - p) * math.log(1.0 - p))


def visibility(region: SemanticRegion, rmap: ResolutionMap) -> float:
    """Mean retained resolution over the region's pixels."""
    r = rmap.r
    h, w = r.shape
    ys, xs = region.mask.indices(w, h)
    if ys.size == 0:
        raise DomainError("region mask is empty over the map")
    return float(r[ys, xs].mean())


@dataclass(frozen=True)
class DescriptionSample:
    """One synthetic description: embedding plus per-token entropies (nats)."""

    embedding: np.ndarray
    token_entropies: "tuple[float, ...]"
    length: int

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "token_entropies", tuple(self.token_entropies))
        if self.length < 1 or len(self.token_entropies) != self.length:
            raise DomainError("token count must match the entropy list and be >= 1")


def _scene_permutation(scene: Scene, seed: int) -> np.ndarray:
    rng = np.random.default_rng((zlib.crc32(scene.id.encode("utf-8")), seed & 0xFFFFFFFF))
    return rng.permutation(len(scene.regions))


def describe(
    scene: Scene,
    rmap: "ResolutionMap | None",
    m: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> "list[DescriptionSample]":
    """Draw m deterministic description samples of the scene as currently seen.

    rmap = None means the unfoveated view (resolution 1 everywhere). Each
    region contributes its concept scaled by gate(visibility) * weight. The
    first sample keeps every contribution; sample k >= 2 suppresses the
    region at position k-2 of a per-scene permutation, but only while that
    region is partially gated, which emulates description diversity without
    breaking monotonicity. Token entropies are the binary entropy of
    max(gate, 1/2) per region plus one zero-entropy gist token.

    The embedding construction conserves norm: the gist direction absorbs
    whatever magnitude the gated concepts have not claimed, so embeddings are
    exactly unit vectors and similarity to the unfoveated description can
    only grow as regions resolve.
    """
    if m < 1:
        raise DomainError(f"need at least one sample, got {m}")
    if rmap is not None:
        expect = (scene.placement.height, scene.placement.width)
        if rmap.r.shape != expect:
            raise DomainError(
                f"resolution map {rmap.r.shape} does not match image {expect}"
            )
    n = len(scene.regions)
    if rmap is None:
        vis = np.ones(n)
    else:
        vis = np.array([visibility(reg, rmap) for reg in scene.regions])
    gates = np.array([gate(float(v)) for v in vis])
    weights = np.array([reg.weight for reg in scene.regions])
    concepts = np.stack([reg.concept for reg in scene.regions])
    contributions = gates * weights
    norm_full = math.sqrt(1.0 + float(weights @ weights))
    tokens = tuple(binary_entropy(max(float(g), 0.5)) for g in gates) + (0.0,)
    perm = _scene_permutation(scene, seed)

    samples = []
    for k in range(m):
        a = contributions
        if k >= 1 and n > 0:
            victim = int(perm[(k - 1) % n])
            if 0.0 < gates[victim] < 1.0:
                a = contributions.copy()
                a[victim] = 0.0
        spare = math.sqrt(1.0 + float(weights @ weights) - float(a @ a))
        emb = (spare * scene.base_concept + a @ concepts) / norm_full
        samples.append(
            DescriptionSample(embedding=emb, token_entropies=tokens, length=n + 1)
        )
    return samples


# ---------------------------------------------------------------------------
# similarity and entropy summaries


def semantic_accuracy(
    fov: "list[DescriptionSample]", ref: "list[DescriptionSample]"
) -> float:
    """Mean cosine similarity between index-paired description embeddings."""
    if len(fov) != len(ref) or not fov:
        raise DomainError(
            f"sample counts must match and be non-empty, got {len(fov)} vs {len(ref)}"
        )
    total = 0.0
    for a, b in zip(fov, ref):
        na = float(np.linalg.norm(a.embedding))
        nb = float(np.linalg.norm(b.embedding))
        if na == 0.0 or nb == 0.0:
            raise DomainError("cannot take cosine similarity with a zero embedding")
        total += float(a.embedding @ b.embedding) / (na * nb)
    return total / len(fov)


def mean_entropy(samples: "list[DescriptionSample]") -> float:
    """Per-token entropy averaged within each sample, then across samples."""
    if not samples:
        raise DomainError("need at least one sample")
    return float(np.mean([sum(s.token_entropies) / s.length for s in samples]))


# ---------------------------------------------------------------------------
# rewards


@dataclass(frozen=True)
class RewardTrace:
    """Per-step reward bookkeeping along one fixation trajectory.

    cs[j] is the semantic accuracy after fixation j (j = 0 is the initial
    fixation), h_bar[j] the mean description entropy. flagged marks the
    degenerate case cs[0] > upper_limit, where normalization is meaningless
    and every normalized reward clamps to zero.
    """

    cs: "tuple[float, ...]"
    upper_limit: float
    r: "tuple[float, ...]"
    r_norm: "tuple[float, ...]"
    h_bar: "tuple[float, ...]"
    r_e: "tuple[float, ...]"
    flagged: bool = False


def build_reward_trace(
    cs: "list[float]",
    upper_limit: float,
    h_bar: "list[float]",
    eps: float = REWARD_EPS,
) -> RewardTrace:
    """Assemble raw, normalized, and entropy rewards from accuracy/entropy runs.

    r[j] = cs[j] - best previous cs (r[0] = cs[0]); r_norm[j] clips
    r[j] / ((upper - cs[0]) + eps) to [0, 1] with r_norm[0] = 0;
    r_e[j] = max(0, lowest previous h_bar - h_bar[j]) with r_e[0] = 0.
    """
    cs = [float(v) for v in cs]
    h_bar = [float(v) for v in h_bar]
    if not cs or len(cs) != len(h_bar):
        raise DomainError(
            f"need matching non-empty cs and h_bar, got {len(cs)} and {len(h_bar)}"
        )
    if not all(map(math.isfinite, cs + h_bar + [upper_limit])):
        raise DomainError("reward inputs must be finite")
    flagged = cs[0] > upper_limit
    den = (upper_limit - cs[0]) + eps
    r = [cs[0]]
    r_norm = [0.0]
    r_e = [0.0]
    best = cs[0]
    low = h_bar[0]
    for j in range(1, len(cs)):
        rj = cs[j] - best
        r.append(rj)
        r_norm.append(0.0 if flagged else min(max(rj / den, 0.0), 1.0))
        r_e.append(max(0.0, low - h_bar[j]))
        best = max(best, cs[j])
        low = min(low, h_bar[j])
    return RewardTrace(
        cs=tuple(cs), upper_limit=float(upper_limit), r=tuple(r),
        r_norm=tuple(r_norm), h_bar=tuple(h_bar), r_e=tuple(r_e), flagged=flagged,
    )


def semantic_reward(trace: RewardTrace, j: int) -> float:
    """Normalized improvement of semantic accuracy at step j; 0 at step 0."""
    if not 0 <= j < len(trace.r_norm):
        raise DomainError(f"step {j} outside trace of length {len(trace.r_norm)}")
    return trace.r_norm[j]


def entropy_reward(trace: RewardTrace, j: int) -> float:
    """Drop of mean entropy below its previous minimum at step j; 0 at step 0."""
    if not 0 <= j < len(trace.r_e):
        raise DomainError(f"step {j} outside trace of length {len(trace.r_e)}")
    return trace.r_e[j]
