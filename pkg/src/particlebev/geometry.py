"""Rotated-box geometry in the BEV plane.

Boxes live in an ego-centered, metric bird-eye-view frame: x/y in meters,
yaw stored as a (sin, cos) pair, plus vertical extent and planar velocity.
All functions are pure and operate on immutable values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

_AREA_EPS = 1e-12


class DegenerateBoxError(ValueError):
    """A box footprint has (near-)zero area and cannot be intersected."""


class DeltaOverflowError(ValueError):
    """A log-scale delta is too large to exponentiate safely."""


class NegativeSpanWarning(RuntimeWarning):
    """The delta-update span (w-bar or h-bar) came out negative."""


@dataclass(frozen=True)
class BevBox:
    """10-parameter 3D box: center, BEV footprint (w, h), vertical extent l,
    yaw as (sin, cos), planar velocity, class label and confidence.

    (w, h) are the BEV footprint extents; l is the vertical extent. The yaw
    pair is renormalized on construction.
    """

    cx: float
    cy: float
    cz: float
    w: float
    h: float
    l: float
    sin_yaw: float
    cos_yaw: float
    vx: float = 0.0
    vy: float = 0.0
    class_id: str = "object"
    confidence: float = 1.0
    attribute: str | None = None

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0 and self.l > 0):
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h} l={self.l}")
        norm = math.hypot(self.sin_yaw, self.cos_yaw)
        if norm < 1e-9:
            raise ValueError("yaw (sin, cos) pair has near-zero norm")
        if abs(norm - 1.0) > 1e-6:
            object.__setattr__(self, "sin_yaw", self.sin_yaw / norm)
            object.__setattr__(self, "cos_yaw", self.cos_yaw / norm)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    @property
    def yaw(self) -> float:
        return math.atan2(self.sin_yaw, self.cos_yaw)

    @classmethod
    def from_yaw(cls, cx: float, cy: float, cz: float, w: float, h: float, l: float,
                 yaw: float, vx: float = 0.0, vy: float = 0.0, **kwargs) -> "BevBox":
        return cls(cx, cy, cz, w, h, l, math.sin(yaw), math.cos(yaw), vx, vy, **kwargs)

    def as_vector(self) -> np.ndarray:
        """The 10-parameter vector (cx, cy, cz, w, h, l, sin, cos, vx, vy)."""
        return np.array([self.cx, self.cy, self.cz, self.w, self.h, self.l,
                         self.sin_yaw, self.cos_yaw, self.vx, self.vy], dtype=float)

    @classmethod
    def from_vector(cls, vec: np.ndarray, **kwargs) -> "BevBox":
        v = np.asarray(vec, dtype=float).reshape(10)
        return cls(*v.tolist(), **kwargs)

    def with_confidence(self, confidence: float) -> "BevBox":
        return replace(self, confidence=confidence)

    def to_dict(self) -> dict:
        d = {
            "cx": self.cx, "cy": self.cy, "cz": self.cz,
            "w": self.w, "h": self.h, "l": self.l,
            "sin_yaw": self.sin_yaw, "cos_yaw": self.cos_yaw,
            "vx": self.vx, "vy": self.vy,
            "class_id": self.class_id, "confidence": self.confidence,
        }
        if self.attribute is not None:
            d["attribute"] = self.attribute
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BevBox":
        return cls(
            cx=d["cx"], cy=d["cy"], cz=d["cz"], w=d["w"], h=d["h"], l=d["l"],
            sin_yaw=d["sin_yaw"], cos_yaw=d["cos_yaw"],
            vx=d.get("vx", 0.0), vy=d.get("vy", 0.0),
            class_id=d.get("class_id", "object"),
            confidence=d.get("confidence", 1.0),
            attribute=d.get("attribute"),
        )


@dataclass(frozen=True)
class BoxDelta:
    """Per-stage box update: fractional center offsets, log-scale extent
    factors, a yaw increment, plus the decoder's absolute cz/l/velocity
    outputs (carried for callers that consume them directly)."""

    d_cx: float
    d_cy: float
    cz: float
    d_w: float
    d_h: float
    l: float
    d_theta: float
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self) -> None:
        vals = [self.d_cx, self.d_cy, self.cz, self.d_w, self.d_h, self.l,
                self.d_theta, self.vx, self.vy]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("all delta components must be finite")


@dataclass(frozen=True)
class BevExtent:
    """Rectangular BEV region in meters with its raster grid dimensions."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    grid_h: int = 200
    grid_w: int = 200

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("extent must have positive width and height")
        if self.grid_h < 1 or self.grid_w < 1:
            raise ValueError("grid dimensions must be positive")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max,
                "y_min": self.y_min, "y_max": self.y_max,
                "grid_h": self.grid_h, "grid_w": self.grid_w}

    @classmethod
    def from_dict(cls, d: dict) -> "BevExtent":
        return cls(d["x_min"], d["x_max"], d["y_min"], d["y_max"],
                   d.get("grid_h", 200), d.get("grid_w", 200))


#: Default square extent: 102.4 m across with a 200x200 grid (0.512 m cells).
DEFAULT_EXTENT = BevExtent(-51.2, 51.2, -51.2, 51.2, 200, 200)


def footprint_polygon(box: BevBox) -> np.ndarray:
    """Four CCW vertices of the rotated BEV footprint, shape (4, 2)."""
    c, s = box.cos_yaw, box.sin_yaw
    hw, hh = box.w / 2.0, box.h / 2.0
    local = np.array([[hw, hh], [-hw, hh], [-hw, -hh], [hw, -hh]], dtype=float)
    rot = np.array([[c, -s], [s, c]], dtype=float)
    return local @ rot.T + np.array([box.cx, box.cy])


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area; positive for CCW vertex order."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip a polygon against a convex CCW polygon.

    Returns the intersection vertices (possibly empty, shape (k, 2)).
    """
    output = [tuple(p) for p in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a, b = clip[i], clip[(i + 1) % n]
        edge = (b[0] - a[0], b[1] - a[1])
        inputs = output
        output = []

        def inside(p):
            return edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0]) >= 0.0

        def intersect(p, q):
            # line through p-q with line through a-b
            dpx, dpy = q[0] - p[0], q[1] - p[1]
            denom = edge[0] * dpy - edge[1] * dpx
            t = (edge[0] * (a[1] - p[1]) - edge[1] * (a[0] - p[0])) / denom
            return (p[0] + t * dpx, p[1] + t * dpy)

        for j, cur in enumerate(inputs):
            prev = inputs[j - 1]
            cur_in, prev_in = inside(cur), inside(prev)
            if cur_in:
                if not prev_in:
                    output.append(intersect(prev, cur))
                output.append(cur)
            elif prev_in:
                output.append(intersect(prev, cur))
    return np.array(output, dtype=float).reshape(-1, 2)


def rotated_iou(a: BevBox, b: BevBox) -> float:
    """IoU of the two BEV footprints via convex clipping; symmetric."""
    pa, pb = footprint_polygon(a), footprint_polygon(b)
    area_a, area_b = polygon_area(pa), polygon_area(pb)
    if area_a < _AREA_EPS or area_b < _AREA_EPS:
        raise DegenerateBoxError("footprint area is (near-)zero")
    inter_poly = clip_polygon(pa, pb)
    inter = abs(polygon_area(inter_poly)) if len(inter_poly) >= 3 else 0.0
    union = area_a + area_b - inter
    return float(min(max(inter / union, 0.0), 1.0))


def center_distance_2d(a: BevBox, b: BevBox) -> float:
    """Euclidean distance between the two BEV centers, in meters."""
    return math.hypot(a.cx - b.cx, a.cy - b.cy)


def apply_box_delta(box: BevBox, delta: BoxDelta) -> BevBox:
    """Apply the rotated-box update to (cx, cy, w, h, theta).

    The update spans are w-bar = w*cos(theta) + h*sin(theta) and
    h-bar = w*sin(theta) + h*cos(theta); center offsets are fractions of
    those spans, extents scale by exp(d_w)/exp(d_h), and yaw shifts by
    d_theta. The box's cz, l, vx, vy pass through unchanged (the delta's
    absolute fields are left to callers that want them). For negative yaw
    the spans can come out negative; that is flagged with a warning rather
    than silently corrected.
    """
    if abs(delta.d_w) > 10.0 or abs(delta.d_h) > 10.0:
        raise DeltaOverflowError(
            f"log-scale deltas must satisfy |d| <= 10, got d_w={delta.d_w} d_h={delta.d_h}")
    theta = box.yaw
    c, s = math.cos(theta), math.sin(theta)
    w_bar = box.w * c + box.h * s
    h_bar = box.w * s + box.h * c
    if w_bar < 0.0 or h_bar < 0.0:
        warnings.warn(
            f"negative update span (w_bar={w_bar:.4g}, h_bar={h_bar:.4g}) for yaw {theta:.4g}",
            NegativeSpanWarning, stacklevel=2)
    new_theta = theta + delta.d_theta
    return BevBox(
        cx=w_bar * delta.d_cx + box.cx,
        cy=h_bar * delta.d_cy + box.cy,
        cz=box.cz,
        w=math.exp(delta.d_w) * box.w,
        h=math.exp(delta.d_h) * box.h,
        l=box.l,
        sin_yaw=math.sin(new_theta),
        cos_yaw=math.cos(new_theta),
        vx=box.vx,
        vy=box.vy,
        class_id=box.class_id,
        confidence=box.confidence,
        attribute=box.attribute,
    )


def normalize_center(points: np.ndarray, extent: BevExtent) -> np.ndarray:
    """Affine map from metric (x, y) to unit-square coordinates.

    Out-of-extent inputs map outside [0, 1]^2 and are left unclamped so
    callers can detect them (see :func:`in_unit_square`).
    """
    p = np.asarray(points, dtype=float)
    out = np.empty_like(p)
    out[..., 0] = (p[..., 0] - extent.x_min) / extent.width
    out[..., 1] = (p[..., 1] - extent.y_min) / extent.height
    return out


def denormalize_center(points: np.ndarray, extent: BevExtent) -> np.ndarray:
    """Inverse of :func:`normalize_center`."""
    p = np.asarray(points, dtype=float)
    out = np.empty_like(p)
    out[..., 0] = p[..., 0] * extent.width + extent.x_min
    out[..., 1] = p[..., 1] * extent.height + extent.y_min
    return out


def in_unit_square(points: np.ndarray) -> np.ndarray:
    """Boolean mask of points lying inside [0, 1]^2."""
    p = np.asarray(points, dtype=float)
    return np.all((p >= 0.0) & (p <= 1.0), axis=-1)
