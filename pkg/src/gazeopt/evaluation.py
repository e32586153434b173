"""Fixation scoring: category frequencies, NLL agreement, heatmaps, AUC, CC.

Frequencies are computed over the first four fixations after the initial
one. A fixation counts toward a category when it lands inside the mask or
within a boundary tolerance of it, measured by Euclidean distance between
pixel centers; one fixation may count toward several categories.

Sign convention: the agreement scores are positive negative-log-likelihoods,
so lower means closer to the human frequency profile.
"""

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.ndimage import distance_transform_edt, gaussian_filter
from scipy.stats import rankdata

from .errors import DomainError
from .geometry import DEFAULT_FIELD, FieldGeometry, FixationPoint
from .oracle import Scene
from .scanpath import FixationSequence, PriorityMap

CATEGORY_TABLE = (
    "people",
    "center_bias",
    "su_r_gaze_grasp",
    "su_r_no_gaze_grasp",
    "su_i",
    "text",
    "salient",
)
SU_R_IMPORTANCE_MIN = 0.95
CENTER_BIAS_DIAMETER_DVA = 5.0
SCORING_FIXATIONS = 4
BOUNDARY_TOLERANCE_DVA = 0.7
HEATMAP_SIGMA_DVA = 0.25
_COV_RIDGE = 1e-8


def scoring_fixations(seq: FixationSequence) -> "tuple[FixationPoint, ...]":
    """The fixations that enter frequency scoring: up to four after the initial."""
    return seq.fixations[1 : 1 + SCORING_FIXATIONS]


# ---------------------------------------------------------------------------
# category masks


@dataclass(frozen=True)
class CategoryMaskSet:
    """Field-resolution boolean masks for one scene, one per scored category."""

    scene_id: str
    masks: "dict[str, np.ndarray]"
    applicable: "dict[str, bool]"
    su_i_count: int
    _dist: dict = field(default_factory=dict, repr=False, compare=False)

    def boundary_distance(self, category: str) -> np.ndarray:
        """Pixel distance to the nearest mask pixel (0 inside), cached."""
        hit = self._dist.get(category)
        if hit is None:
            mask = self.masks[category]
            if mask.any():
                hit = distance_transform_edt(~mask)
            else:
                hit = np.full(mask.shape, np.inf)
            self._dist[category] = hit
        return hit


def build_mask_set(
    scene: Scene,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    center_bias_diameter_dva: float = CENTER_BIAS_DIAMETER_DVA,
) -> CategoryMaskSet:
    """Rasterize a scene's regions into per-category field masks.

    Relevant-object masks select regions by importance >= 0.95, split on the
    gaze/grasp flag; the center-bias disc is fixed geometry and always
    applicable. Other categories mirror the region annotations directly.
    """
    h, w = fieldgeom.height, fieldgeom.width
    masks = {name: np.zeros((h, w), dtype=bool) for name in CATEGORY_TABLE}
    su_i_count = 0
    direct = {"person": "people", "text": "text", "salient": "salient",
              "su_i_object": "su_i"}
    for region in scene.regions:
        ys, xs = region.mask.indices(scene.placement.width, scene.placement.height)
        ys = ys + scene.placement.offset_y
        xs = xs + scene.placement.offset_x
        keep = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        ys, xs = ys[keep], xs[keep]
        targets = []
        cat = direct.get(region.category)
        if cat is not None:
            targets.append(cat)
            if cat == "su_i":
                su_i_count += 1
        if region.importance >= SU_R_IMPORTANCE_MIN:
            targets.append(
                "su_r_gaze_grasp" if region.gaze_grasp_flag else "su_r_no_gaze_grasp"
            )
        for name in targets:
            masks[name][ys, xs] = True
    if center_bias_diameter_dva <= 0.0:
        raise DomainError(
            f"center-bias diameter must be positive, got {center_bias_diameter_dva}"
        )
    radius = center_bias_diameter_dva / 2.0 * fieldgeom.ppd
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy = np.arange(h, dtype=np.float64)[:, None] - cy
    xx = np.arange(w, dtype=np.float64)[None, :] - cx
    masks["center_bias"] = yy ** 2 + xx ** 2 <= radius ** 2
    applicable = {name: bool(masks[name].any()) for name in CATEGORY_TABLE}
    applicable["center_bias"] = True
    return CategoryMaskSet(
        scene_id=scene.id, masks=masks, applicable=applicable, su_i_count=su_i_count
    )


def _bilinear(grid: np.ndarray, x: float, y: float) -> float:
    h, w = grid.shape
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(x), int(y)
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = grid[y0, x0] * (1 - fx) + grid[y0, x1] * fx
    bot = grid[y1, x0] * (1 - fx) + grid[y1, x1] * fx
    return float(top * (1 - fy) + bot * fy)


def assign_fixations(
    seq: FixationSequence,
    maskset: CategoryMaskSet,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    tolerance_dva: float = BOUNDARY_TOLERANCE_DVA,
) -> "dict[str, int]":
    """Per-category hit counts over the scoring fixations."""
    if tolerance_dva < 0.0:
        raise DomainError(f"tolerance must be non-negative, got {tolerance_dva}")
    tol_px = tolerance_dva * fieldgeom.ppd
    pts = scoring_fixations(seq)
    counts = {}
    for cat in CATEGORY_TABLE:
        if not maskset.masks[cat].any():
            counts[cat] = 0
            continue
        dist = maskset.boundary_distance(cat)
        counts[cat] = sum(1 for p in pts if _bilinear(dist, p.x, p.y) <= tol_px)
    return counts


def sequence_frequencies(
    seq: FixationSequence,
    maskset: CategoryMaskSet,
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    tolerance_dva: float = BOUNDARY_TOLERANCE_DVA,
) -> "dict[str, float | None]":
    """Per-category fixation frequency for one sequence; None = not applicable.

    Frequency is hits over the four scored fixations; the ambient-object
    frequency is further divided by the scene's ambient-object count.
    """
    counts = assign_fixations(seq, maskset, fieldgeom, tolerance_dva)
    out = {}
    for cat in CATEGORY_TABLE:
        if not maskset.applicable[cat]:
            out[cat] = None
            continue
        freq = counts[cat] / SCORING_FIXATIONS
        if cat == "su_i":
            freq /= maskset.su_i_count
        out[cat] = freq
    return out


# ---------------------------------------------------------------------------
# frequency tables


@dataclass(frozen=True)
class FrequencyTable:
    """Mean per-image category frequencies with spread across subjects/runs."""

    categories: "tuple[str, ...]"
    group_names: "tuple[str, ...]"
    group_means: np.ndarray  # (n_groups, n_categories)
    mean: np.ndarray
    se: np.ndarray
    n_images: "dict[str, int]"

    @property
    def n_groups(self) -> int:
        return len(self.group_names)

    def covariance(self) -> np.ndarray:
        """Covariance of the mean frequency vector, from group spread."""
        n = self.n_groups
        if n < 2:
            raise DomainError("covariance needs at least two subjects/runs")
        return np.cov(self.group_means.T, ddof=1) / n

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["category", "mean_frequency", "standard_error", "n_images"])
        for i, cat in enumerate(self.categories):
            writer.writerow(
                [cat, repr(float(self.mean[i])), repr(float(self.se[i])),
                 self.n_images[cat]]
            )
        return buf.getvalue()


def frequency_table(
    sequences: "list[FixationSequence]",
    masksets: "dict[str, CategoryMaskSet]",
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    tolerance_dva: float = BOUNDARY_TOLERANCE_DVA,
) -> FrequencyTable:
    """Aggregate sequences into a frequency table, grouped by subject/run.

    For each group the per-image frequencies are averaged over the images
    where the category applies; the table mean and standard error are taken
    across groups. Sequences group by subject_id (empty string when unset).
    """
    if not sequences:
        raise DomainError("need at least one fixation sequence")
    groups: "dict[str, dict[str, list]]" = {}
    images: "dict[str, set]" = {cat: set() for cat in CATEGORY_TABLE}
    for seq in sequences:
        mset = masksets.get(seq.scene_id)
        if mset is None:
            raise DomainError(f"no mask set for scene {seq.scene_id!r}")
        freqs = sequence_frequencies(seq, mset, fieldgeom, tolerance_dva)
        key = seq.subject_id or ""
        bucket = groups.setdefault(key, {cat: [] for cat in CATEGORY_TABLE})
        for cat, val in freqs.items():
            if val is not None:
                bucket[cat].append(val)
                images[cat].add(seq.scene_id)
    names = tuple(sorted(groups))
    mat = np.zeros((len(names), len(CATEGORY_TABLE)))
    for gi, name in enumerate(names):
        for ci, cat in enumerate(CATEGORY_TABLE):
            vals = groups[name][cat]
            mat[gi, ci] = float(np.mean(vals)) if vals else 0.0
    mean = mat.mean(axis=0)
    if len(names) > 1:
        se = mat.std(axis=0, ddof=1) / np.sqrt(len(names))
    else:
        se = np.zeros(len(CATEGORY_TABLE))
    return FrequencyTable(
        categories=CATEGORY_TABLE,
        group_names=names,
        group_means=mat,
        mean=mean,
        se=se,
        n_images={cat: len(images[cat]) for cat in CATEGORY_TABLE},
    )


# ---------------------------------------------------------------------------
# agreement scores


def nll_independent(x, mu, se) -> float:
    """Independent-Gaussian misfit between model and human frequencies."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    se = np.asarray(se, dtype=np.float64)
    if not (x.shape == mu.shape == se.shape) or x.ndim != 1 or x.size == 0:
        raise DomainError("x, mu, se must be equal-length non-empty vectors")
    if np.any(se <= 0.0):
        raise DomainError("standard errors must be positive")
    quad = (x - mu) ** 2 / (2.0 * se ** 2)
    norm = 0.5 * np.log(2.0 * np.pi * se ** 2)
    return float(np.sum(quad + norm))


def nll_mvn(x, mu, cov) -> float:
    """Full-covariance Gaussian misfit; ridge-regularized before inversion."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    k = x.size
    if x.shape != mu.shape or x.ndim != 1 or k == 0:
        raise DomainError("x and mu must be equal-length non-empty vectors")
    if cov.shape != (k, k):
        raise DomainError(f"covariance must be {k}x{k}, got {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise DomainError("covariance must be symmetric")
    try:
        # ridge only on factorization failure, so healthy inputs stay exact
        factor = linalg.cho_factor(cov, lower=True)
    except linalg.LinAlgError:
        ridge = _COV_RIDGE * np.trace(cov) / k
        try:
            factor = linalg.cho_factor(cov + ridge * np.eye(k), lower=True)
        except linalg.LinAlgError as exc:
            raise DomainError(
                f"covariance is singular even after ridge: {exc}"
            ) from exc
    diff = x - mu
    quad = 0.5 * float(diff @ linalg.cho_solve(factor, diff))
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return quad + 0.5 * logdet + 0.5 * k * np.log(2.0 * np.pi)


def nnll(model_nll: float, baseline_nll: float) -> float:
    """Model misfit normalized by a baseline's; the baseline itself scores 1."""
    if not baseline_nll > 0.0:
        raise DomainError(
            f"baseline score must be positive to normalize, got {baseline_nll}; "
            "report raw scores instead"
        )
    return model_nll / baseline_nll


# ---------------------------------------------------------------------------
# heatmaps and map comparison


def fixation_heatmap(
    points: "list[FixationPoint]",
    fieldgeom: FieldGeometry = DEFAULT_FIELD,
    sigma_dva: float = HEATMAP_SIGMA_DVA,
    source: str = "fixations",
) -> PriorityMap:
    """Gaussian-blurred impulse map of the given fixation points."""
    if not points:
        raise DomainError("need at least one fixation point")
    if sigma_dva <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma_dva}")
    h, w = fieldgeom.height, fieldgeom.width
    impulses = np.zeros((h, w))
    for p in points:
        col = min(max(int(round(p.x)), 0), w - 1)
        row = min(max(int(round(p.y)), 0), h - 1)
        impulses[row, col] += 1.0
    blurred = gaussian_filter(impulses, sigma=sigma_dva * fieldgeom.ppd,
                              mode="constant", cval=0.0)
    return PriorityMap(values=blurred, source=source)


def _map_values(m) -> np.ndarray:
    return np.asarray(getattr(m, "values", m), dtype=np.float64)


def auc(pmap, points: "list[FixationPoint]") -> float:
    """Discrimination of fixated pixels from the rest of the map.

    All non-fixated pixels serve as negatives; the score is the probability
    that a fixated pixel outranks a non-fixated one, ties at half weight
    (equivalent to an exhaustive threshold sweep). A constant map scores 0.5
    by convention and raises a warning.
    """
    values = _map_values(pmap)
    if not points:
        raise DomainError("need at least one fixation point")
    h, w = values.shape
    fixed = np.zeros((h, w), dtype=bool)
    for p in points:
        col = min(max(int(round(p.x)), 0), w - 1)
        row = min(max(int(round(p.y)), 0), h - 1)
        fixed[row, col] = True
    if fixed.all():
        raise DomainError("every pixel is fixated; no negatives to rank against")
    if values.max() == values.min():
        warnings.warn("constant priority map: chance discrimination", stacklevel=2)
        return 0.5
    pos = values[fixed]
    neg = values[~fixed]
    ranks = rankdata(np.concatenate([pos, neg]))
    n_pos, n_neg = pos.size, neg.size
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def cc(map_a, map_b) -> float:
    """Pearson correlation between two maps after per-map standardization."""
    a = _map_values(map_a).ravel()
    b = _map_values(map_b).ravel()
    if a.shape != b.shape:
        raise DomainError("maps must have the same shape")
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        raise DomainError("correlation undefined for a constant map")
    za = (a - a.mean()) / sa
    zb = (b - b.mean()) / sb
    return float(np.mean(za * zb))


# ---------------------------------------------------------------------------
# bootstrap


def bootstrap_ci(
    samples,
    statistic=None,
    n_resamples: int = 10_000,
    seed: int = 0,
    percentiles: "tuple[float, float]" = (2.5, 97.5),
) -> "tuple[float, float]":
    """Percentile confidence interval from resampling rows with replacement."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.shape[0] < 1:
        raise DomainError("need at least one sample")
    if n_resamples < 1:
        raise DomainError("need at least one resample")
    stat = statistic if statistic is not None else (lambda rows: float(rows.mean()))
    rng = np.random.default_rng(seed)
    n = arr.shape[0]
    draws = np.empty(n_resamples)
    for i in range(n_resamples):
        draws[i] = stat(arr[rng.integers(0, n, size=n)])
    lo, hi = np.percentile(draws, percentiles)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class EvaluationReport:
    """Frequency tables plus agreement/heatmap metrics for a set of sources."""

    tables: "dict[str, FrequencyTable]"
    metrics: "dict[str, dict[str, float]]"
    notes: "tuple[str, ...]" = ()

    def to_json(self) -> str:
        payload = {
            "tables": {
                src: {
                    "categories": list(t.categories),
                    "mean": [float(v) for v in t.mean],
                    "se": [float(v) for v in t.se],
                    "n_images": t.n_images,
                    "n_groups": t.n_groups,
                }
                for src, t in self.tables.items()
            },
            "metrics": self.metrics,
            "notes": list(self.notes),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def build_report(
    tables: "dict[str, FrequencyTable]",
    human_source: str,
    baseline_source: str,
    notes: "tuple[str, ...]" = (),
) -> EvaluationReport:
    """Score every non-human source against the human table.

    The baseline source's raw misfit normalizes the others, so its own
    normalized score is 1 by construction.
    """
    if human_source not in tables:
        raise DomainError(f"no table for human source {human_source!r}")
    if baseline_source not in tables:
        raise DomainError(f"no table for baseline source {baseline_source!r}")
    human = tables[human_source]
    mu, se = human.mean, human.se
    cov = human.covariance()
    base_nll = nll_independent(tables[baseline_source].mean, mu, se)
    metrics: "dict[str, dict[str, float]]" = {}
    for src, table in tables.items():
        if src == human_source:
            continue
        raw = nll_independent(table.mean, mu, se)
        metrics[src] = {
            "nll_indep": raw,
            "nll_mvn": nll_mvn(table.mean, mu, cov),
            "nnll": nnll(raw, base_nll),
        }
    return EvaluationReport(tables=tables, metrics=metrics, notes=notes)
