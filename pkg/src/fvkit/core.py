"""Shared value types for the RGB-D object reconstruction pipeline.

All types are immutable once constructed. Array-backed fields are copied on
construction and flagged read-only, so instances can be shared freely.

Conventions:
  * depth is the z-coordinate along the optical axis, not the ray length;
  * pixel coordinates are (u, v) = (column, row), origin top-left, pixel
    centers at integer coordinates;
  * world-space math is float64 meters; integer depth units only exist in
    ``DepthFrame``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ORTHO_TOL = 1e-9


class FvError(Exception):
    """Base class for all errors raised by fvkit."""


class ValidationError(FvError, ValueError):
    """A value violates a type invariant."""


class ShapeError(FvError, ValueError):
    pass


class FormatError(FvError, ValueError):
    """Bytes or text do not follow the expected file format."""


class ParseError(FormatError):
    pass


class InvalidDepthError(FvError, ValueError):
    pass


class BehindCameraError(FvError, ValueError):
    pass


class EmptyInputError(FvError, ValueError):
    pass


class UndefinedMetricError(FvError, ValueError):
    pass


class UnsupportedError(FvError, ValueError):
    pass


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    """Ideal pinhole camera (no skew, no distortion)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValidationError("width and height must be integers")
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"resolution must be at least 1x1, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width):
            raise ValidationError(f"cx={self.cx} outside [0, {self.width})")
        if not (0 <= self.cy < self.height):
            raise ValidationError(f"cy={self.cy} outside [0, {self.height})")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation + translation; maps depth-camera coordinates into color-camera coordinates."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = _frozen(self.rotation, np.float64)
        t = _frozen(self.translation, np.float64)
        if R.shape != (3, 3):
            raise ValidationError(f"rotation must be 3x3, got shape {R.shape}")
        if t.shape != (3,):
            raise ValidationError(f"translation must be a 3-vector, got shape {t.shape}")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValidationError("transform entries must be finite")
        if np.max(np.abs(R @ R.T - np.eye(3))) > ORTHO_TOL:
            raise ValidationError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValidationError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Transform an (n, 3) array (or a single 3-vector)."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -(Rt @ self.translation))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return ``self ∘ other`` (apply ``other`` first)."""
        return RigidTransform(
            self.rotation @ other.rotation, self.rotation @ other.translation + self.translation
        )

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """16-bit depth image, shape (height, width). Zero means invalid."""

    data: np.ndarray
    depth_scale: float = 0.001

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.ndim != 2:
            raise ValidationError(f"depth data must be 2-D (height, width), got ndim={raw.ndim}")
        if raw.size and (raw.min() < 0 or raw.max() > 65535):
            raise ValidationError("depth values must fit in 16 bits")
        if not (np.isfinite(self.depth_scale) and self.depth_scale > 0):
            raise ValidationError(f"depth_scale must be positive, got {self.depth_scale}")
        object.__setattr__(self, "data", _frozen(raw, np.uint16))
        object.__setattr__(self, "depth_scale", float(self.depth_scale))

    @classmethod
    def from_flat(cls, width: int, height: int, data, depth_scale: float = 0.001) -> "DepthFrame":
        flat = np.asarray(data)
        if flat.size != width * height:
            raise ValidationError(f"expected {width * height} depth values, got {flat.size}")
        return cls(flat.reshape(height, width), depth_scale)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return self.data != 0

    def meters(self) -> np.ndarray:
        return self.data.astype(np.float64) * self.depth_scale

    def __eq__(self, other):
        if not isinstance(other, DepthFrame):
            return NotImplemented
        return self.depth_scale == other.depth_scale and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class ColorFrame:
    """8-bit RGB image, shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.ndim != 3 or raw.shape[2] != 3:
            raise ValidationError(f"color data must have shape (h, w, 3), got {raw.shape}")
        object.__setattr__(self, "data", _frozen(raw, np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ColorFrame):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.bits)
        if raw.ndim != 2:
            raise ValidationError(f"mask must be 2-D, got ndim={raw.ndim}")
        object.__setattr__(self, "bits", _frozen(raw, bool))

    @classmethod
    def full(cls, width: int, height: int, value: bool = True) -> "BinaryMask":
        return cls(np.full((height, width), value, dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class Detection2D:
    class_id: int
    label: str
    confidence: float
    box: tuple[float, float, float, float]

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")
        if len(self.box) != 4:
            raise ValidationError("box must be (x1, y1, x2, y2)")
        x1, y1, x2, y2 = (float(b) for b in self.box)
        if not (x1 < x2 and y1 < y2):
            raise ValidationError(f"box {self.box} must satisfy x1 < x2 and y1 < y2")
        object.__setattr__(self, "box", (x1, y1, x2, y2))

    def clamped(self, width: int, height: int) -> "Detection2D":
        """Clip the box to the frame [0, width] x [0, height]."""
        x1, y1, x2, y2 = self.box
        box = (min(max(x1, 0.0), width), min(max(y1, 0.0), height),
               min(max(x2, 0.0), width), min(max(y2, 0.0), height))
        return Detection2D(self.class_id, self.label, self.confidence, box)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValidationError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts, np.float64))
        if self.colors is not None:
            col = np.asarray(self.colors)
            if col.size == 0:
                col = col.reshape(0, 3)
            if col.shape != pts.shape:
                raise ValidationError(
                    f"colors shape {col.shape} does not match points shape {pts.shape}"
                )
            object.__setattr__(self, "colors", _frozen(col, np.uint8))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        if (self.colors is None) != (other.colors is None):
            return False
        same_colors = self.colors is None or np.array_equal(self.colors, other.colors)
        return np.array_equal(self.points, other.points) and same_colors


@dataclass(frozen=True, eq=False)
class Aabb3:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.min, np.float64)
        hi = _frozen(self.max, np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValidationError("box corners must be 3-vectors")
        if np.any(lo > hi):
            raise ValidationError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, points, tol: float = 0.0) -> bool:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return bool(np.all(p >= self.min - tol) and np.all(p <= self.max + tol))

    def contains_box(self, other: "Aabb3", tol: float = 0.0) -> bool:
        return bool(np.all(other.min >= self.min - tol) and np.all(other.max <= self.max + tol))

    def face_errors(self, other: "Aabb3") -> np.ndarray:
        """Per-face absolute differences, ordered (min_x, min_y, min_z, max_x, max_y, max_z)."""
        return np.abs(np.concatenate([self.min - other.min, self.max - other.max]))

    def __eq__(self, other):
        if not isinstance(other, Aabb3):
            return NotImplemented
        return np.array_equal(self.min, other.min) and np.array_equal(self.max, other.max)

    def __repr__(self):
        return f"Aabb3(min={self.min.tolist()}, max={self.max.tolist()})"


@dataclass(frozen=True)
class LabeledCloud:
    label: str
    class_id: int
    cloud: PointCloud
    box: Aabb3

    def __post_init__(self):
        if len(self.cloud) and not self.box.contains(self.cloud.points):
            raise ValidationError(f"box of {self.label!r} does not enclose its cloud")


@dataclass(frozen=True)
class BoxParams:
    """Box as center + extent; units are whatever the caller uses consistently."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValidationError(f"box extent must be non-negative, got w={self.w}, h={self.h}")

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class VoxelParams:
    voxel_size: float = 0.005

    def __post_init__(self):
        if not (np.isfinite(self.voxel_size) and self.voxel_size > 0):
            raise ValidationError(f"voxel_size must be > 0, got {self.voxel_size}")


@dataclass(frozen=True)
class OutlierParams:
    k_neighbors: int = 300
    std_ratio: float = 2.0

    def __post_init__(self):
        if int(self.k_neighbors) != self.k_neighbors or self.k_neighbors < 1:
            raise ValidationError(f"k_neighbors must be an integer >= 1, got {self.k_neighbors}")
        if not self.std_ratio > 0:
            raise ValidationError(f"std_ratio must be > 0, got {self.std_ratio}")


@dataclass(frozen=True)
class FrameBundle:
    """One recorded capture: depth (+ color), calibration, detector and segmenter outputs."""

    depth: DepthFrame
    intrinsics_color: CameraIntrinsics
    intrinsics_depth: CameraIntrinsics
    extrinsics: RigidTransform
    detections: tuple[Detection2D, ...] = ()
    masks: tuple[BinaryMask, ...] = ()
    color: Optional[ColorFrame] = None

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "masks", tuple(self.masks))
        if len(self.masks) != len(self.detections):
            raise ValidationError(
                f"{len(self.masks)} masks for {len(self.detections)} detections"
            )
        w, h = self.intrinsics_color.width, self.intrinsics_color.height
        if self.color is not None and (self.color.width, self.color.height) != (w, h):
            raise ValidationError("color frame size does not match color intrinsics")
        for i, m in enumerate(self.masks):
            if (m.width, m.height) != (w, h):
                raise ValidationError(
                    f"mask {i} is {m.width}x{m.height}, color frame is {w}x{h}"
                )
        if (self.depth.width, self.depth.height) != (
            self.intrinsics_depth.width,
            self.intrinsics_depth.height,
        ):
            raise ValidationError("depth frame size does not match depth intrinsics")
