"""Viewing geometry: pixels-per-degree, eccentricity maps, image placement.

Conventions used throughout the package:

* Pixel (ix, iy) sits at continuous coordinates (ix, iy) — integer centers —
  so eccentricity is exactly zero at a fixated pixel.
* Field coordinates are in pixels with (0, 0) the top-left pixel of the
  display field; x grows rightward (columns), y downward (rows).
* Angles are in degrees of visual angle (DVA) unless stated otherwise.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# Default desk setup: 75 cm viewing distance, 0.0293 cm pixel pitch -> 44 px/deg.
DEFAULT_OBSERVER_DISTANCE_CM = 75.0
DEFAULT_PIXEL_PITCH_CM = 0.0293
# Near-viewing preset used for policy training runs.
TRAINING_OBSERVER_DISTANCE_CM = 39.3


def pixels_per_degree(observer_distance_cm: float, pixel_pitch_cm: float) -> int:
    """Number of whole pixels covered by one degree of visual angle.

    floor(distance * tan(1 deg) / pitch); both arguments must be positive.
    """
    if not (observer_distance_cm > 0.0) or not (pixel_pitch_cm > 0.0):
        raise DomainError(
            "observer distance and pixel pitch must be positive, got "
            f"{observer_distance_cm!r} cm and {pixel_pitch_cm!r} cm"
        )
    ppd = math.floor(observer_distance_cm * math.tan(math.radians(1.0)) / pixel_pitch_cm)
    if ppd < 1:
        raise DomainError(
            f"viewing geometry yields {ppd} px/deg; need at least 1 "
            "(observer too close or pixels too large)"
        )
    return ppd


@dataclass(frozen=True)
class FieldGeometry:
    """A display field: pixel dimensions plus the observer geometry.

    ``ppd`` is derived from the observer distance and pixel pitch and is
    validated on construction, so a FieldGeometry is internally consistent
    by the time anyone reads it.
    """

    width: int
    height: int
    observer_distance_cm: float = DEFAULT_OBSERVER_DISTANCE_CM
    pixel_pitch_cm: float = DEFAULT_PIXEL_PITCH_CM
    ppd: int = field(init=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError(f"field must be at least 1x1, got {self.width}x{self.height}")
        object.__setattr__(
            self, "ppd", pixels_per_degree(self.observer_distance_cm, self.pixel_pitch_cm)
        )

    @property
    def width_deg(self) -> float:
        return self.width / self.ppd

    @property
    def height_deg(self) -> float:
        return self.height / self.ppd

    def contains(self, x: float, y: float) -> bool:
        """True when (x, y) lies inside the field's pixel extent."""
        return 0.0 <= x <= self.width - 1 and 0.0 <= y <= self.height - 1

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "observer_distance_cm": self.observer_distance_cm,
            "pixel_pitch_cm": self.pixel_pitch_cm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FieldGeometry":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            observer_distance_cm=float(d.get("observer_distance_cm", DEFAULT_OBSERVER_DISTANCE_CM)),
            pixel_pitch_cm=float(d.get("pixel_pitch_cm", DEFAULT_PIXEL_PITCH_CM)),
        )


# 1280x1280 field at the default desk setup (26-29 deg across, 44 px/deg).
DEFAULT_FIELD = FieldGeometry(width=1280, height=1280)


@dataclass(frozen=True)
class FixationPoint:
    """A gaze landing point in field pixel coordinates."""

    x: float
    y: float
    index: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"fixation coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Placement:
    """Where an image rectangle sits inside a field, after optional scaling.

    ``width``/``height`` are the placed dimensions (post-scaling);
    ``offset_x``/``offset_y`` locate its top-left pixel in field coordinates.
    """

    offset_x: int
    offset_y: int
    width: int
    height: int

    def to_dict(self) -> dict:
        return {
            "offset_x": self.offset_x,
            "offset_y": self.offset_y,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(int(d["offset_x"]), int(d["offset_y"]), int(d["width"]), int(d["height"]))


def embed_in_field(
    image_width: int,
    image_height: int,
    fieldgeom: FieldGeometry,
    scale_to_width: bool = False,
) -> Placement:
    """Center an image rectangle inside a field.

    With ``scale_to_width`` the image is uniformly scaled to the field width
    (aspect preserved); a scaled height exceeding the field is a hard error,
    never a crop. Without it the image is used as-is and must fit.
    """
    if image_width < 1 or image_height < 1:
        raise DomainError(f"zero-area image ({image_width}x{image_height})")
    w, h = image_width, image_height
    if scale_to_width:
        scale = fieldgeom.width / image_width
        w = fieldgeom.width
        h = int(round(image_height * scale))
        if h < 1:
            raise DomainError("image degenerates to zero height after scaling")
    if w > fieldgeom.width or h > fieldgeom.height:
        raise DomainError(
            f"image {w}x{h} does not fit in field {fieldgeom.width}x{fieldgeom.height}"
            + (" after scaling to field width" if scale_to_width else "")
        )
    return Placement(
        offset_x=(fieldgeom.width - w) // 2,
        offset_y=(fieldgeom.height - h) // 2,
        width=w,
        height=h,
    )


def eccentricity_map(
    fieldgeom: FieldGeometry,
    fixation: "FixationPoint | tuple[float, float]",
    window: "Placement | None" = None,
) -> np.ndarray:
    """Retinal eccentricity, in DVA, of every pixel for one fixation.

    The fixation must lie inside the field. ``window`` restricts the output
    to an embedded image rectangle (eccentricity is still measured in field
    coordinates); by default the whole field is returned. Output shape is
    (height, width), float64.
    """
    fx, fy = (fixation.x, fixation.y) if isinstance(fixation, FixationPoint) else fixation
    if not fieldgeom.contains(fx, fy):
        raise DomainError(
            f"fixation ({fx}, {fy}) outside field {fieldgeom.width}x{fieldgeom.height}"
        )
    if window is None:
        xs = np.arange(fieldgeom.width, dtype=np.float64)
        ys = np.arange(fieldgeom.height, dtype=np.float64)
    else:
        xs = np.arange(window.offset_x, window.offset_x + window.width, dtype=np.float64)
        ys = np.arange(window.offset_y, window.offset_y + window.height, dtype=np.float64)
    dx = xs[None, :] - fx
    dy = ys[:, None] - fy
    return np.sqrt(dx * dx + dy * dy) / fieldgeom.ppd


def combined_eccentricity(maps: "list[np.ndarray]") -> np.ndarray:
    """Element-wise minimum across per-fixation eccentricity maps."""
    if not maps:
        raise DomainError("need at least one eccentricity map")
    out = maps[0]
    for m in maps[1:]:
        if m.shape != out.shape:
            raise DomainError(f"eccentricity map shapes differ: {m.shape} vs {out.shape}")
        out = np.minimum(out, m)
    return out
