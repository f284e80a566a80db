"""Synthetic RGB-D scenes rendered from analytic primitives.

The renderer casts one ray through every pixel center, keeps the nearest
hit and stores its optical-axis depth quantized to depth units. Because the
scene is analytic, ground-truth masks, boxes and per-pixel surface points
are known exactly, which is what the rest of the test-suite leans on.

Scene coordinates are the depth camera's frame. Pass ``pose`` (a transform
from scene coordinates into another camera's frame) to render the same
scene from, say, the color camera.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    Aabb3,
    BinaryMask,
    CameraIntrinsics,
    ColorFrame,
    DepthFrame,
    Detection2D,
    FrameBundle,
    RigidTransform,
    UnsupportedError,
    ValidationError,
)


@dataclass(frozen=True, eq=False)
class Plane:
    """Points p with ``normal · p = offset``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if n.shape != (3,) or not np.linalg.norm(n) > 0:
            raise ValidationError("plane normal must be a non-zero 3-vector")
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "offset", float(self.offset) / float(np.linalg.norm(n)))


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64)
        if c.shape != (3,):
            raise ValidationError("sphere center must be a 3-vector")
        if not self.radius > 0:
            raise ValidationError(f"sphere radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True, eq=False)
class Box:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(lo > hi):
            raise ValidationError("box needs 3-vector corners with min <= max")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)


Shape = Union[Plane, Sphere, Box]


@dataclass(frozen=True)
class Primitive:
    shape: Shape
    label: str = "object"
    class_id: int = 0


@dataclass(frozen=True)
class SceneSpec:
    primitives: tuple[Primitive, ...]
    background: Optional[Plane] = None

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    dropout_rate: float = 0.0
    outlier_rate: float = 0.0
    outlier_magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        for name in ("dropout_rate", "outlier_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")


# ---------------------------------------------------------------- ray casting


def pixel_rays(K: CameraIntrinsics) -> np.ndarray:
    """Camera-frame ray directions through every pixel center, z-component 1.

    Shape (height, width, 3); hitting at parameter t means optical depth t.
    """
    u = np.arange(K.width, dtype=np.float64)
    v = np.arange(K.height, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    return np.stack([(uu - K.cx) / K.fx, (vv - K.cy) / K.fy, np.ones_like(uu)], axis=-1)


def intersect(shape: Shape, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Smallest positive ray parameter per ray, ``inf`` on a miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(shape, Plane):
            denom = dirs @ shape.normal
            t = (shape.offset - origin @ shape.normal) / denom
            return np.where((denom != 0) & (t > 0), t, np.inf)
        if isinstance(shape, Sphere):
            oc = origin - shape.center
            a = np.einsum("...i,...i->...", dirs, dirs)
            b = 2.0 * (dirs @ oc)
            c = oc @ oc - shape.radius**2
            disc = b * b - 4.0 * a * c
            root = np.sqrt(np.where(disc >= 0, disc, 0.0))
            t_near = (-b - root) / (2.0 * a)
            t_far = (-b + root) / (2.0 * a)
            t = np.where(t_near > 0, t_near, t_far)
            return np.where((disc >= 0) & (t > 0), t, np.inf)
        if isinstance(shape, Box):
            t1 = (shape.min - origin) / dirs
            t2 = (shape.max - origin) / dirs
            # axis-parallel ray inside the slab: no constraint on that axis
            inside = (origin >= shape.min) & (origin <= shape.max)
            lo = np.where(dirs == 0, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
            hi = np.where(dirs == 0, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
            t_near = lo.max(axis=-1)
            t_far = hi.min(axis=-1)
            t = np.where(t_near > 0, t_near, t_far)
            return np.where((t_near <= t_far) & (t > 0), t, np.inf)
    raise UnsupportedError(f"unknown primitive {type(shape).__name__}")


@dataclass(frozen=True, eq=False)
class RayCast:
    """Per-pixel nearest hit. ``index`` is the primitive index, -1 for the
    background plane and -2 for a miss; ``t`` is the optical depth in meters."""

    t: np.ndarray
    index: np.ndarray
    dirs: np.ndarray


def cast(scene: SceneSpec, K: CameraIntrinsics, pose: Optional[RigidTransform] = None) -> RayCast:
    dirs_cam = pixel_rays(K)
    if pose is None:
        origin = np.zeros(3)
        dirs = dirs_cam
    else:
        inv = pose.inverse()
        origin = inv.translation
        dirs = dirs_cam @ inv.rotation.T
    shapes = [p.shape for p in scene.primitives]
    if scene.background is not None:
        shapes.append(scene.background)
    if not shapes:
        t = np.full(dirs.shape[:2], np.inf)
        return RayCast(t, np.full(t.shape, -2), dirs_cam)
    ts = np.stack([intersect(s, origin, dirs) for s in shapes])
    nearest = np.argmin(ts, axis=0)
    t = np.take_along_axis(ts, nearest[None], axis=0)[0]
    index = np.where(np.isfinite(t), nearest, -2)
    if scene.background is not None:
        index = np.where(index == len(scene.primitives), -1, index)
    return RayCast(t, index, dirs_cam)


def quantize(t: np.ndarray, depth_scale: float) -> np.ndarray:
    """Meters to 16-bit depth units; unrepresentable depths become 0."""
    with np.errstate(invalid="ignore"):
        units = np.rint(np.where(np.isfinite(t), t / depth_scale, 0.0))
    units[(units < 1) | (units > 65535)] = 0
    return units.astype(np.uint16)


def render_depth(
    scene: SceneSpec,
    K: CameraIntrinsics,
    depth_scale: float = 0.001,
    pose: Optional[RigidTransform] = None,
) -> DepthFrame:
    rc = cast(scene, K, pose)
    return DepthFrame(quantize(rc.t, depth_scale), depth_scale)


def _object_visibility(rc: RayCast, depth_scale: float) -> np.ndarray:
    return quantize(rc.t, depth_scale) != 0


def ground_truth_mask(
    scene: SceneSpec,
    object_index: int,
    K: CameraIntrinsics,
    pose: Optional[RigidTransform] = None,
    depth_scale: float = 0.001,
) -> BinaryMask:
    """Pixels where primitive ``object_index`` is the nearest representable hit."""
    if not 0 <= object_index < len(scene.primitives):
        raise IndexError(f"object index {object_index} out of range for {len(scene.primitives)} primitives")
    rc = cast(scene, K, pose)
    return BinaryMask((rc.index == object_index) & _object_visibility(rc, depth_scale))


def ground_truth_masks(
    scene: SceneSpec, K: CameraIntrinsics, pose: Optional[RigidTransform] = None, depth_scale: float = 0.001
) -> list[BinaryMask]:
    rc = cast(scene, K, pose)
    vis = _object_visibility(rc, depth_scale)
    return [BinaryMask((rc.index == i) & vis) for i in range(len(scene.primitives))]


def ground_truth_aabb(primitive, transform: Optional[RigidTransform] = None) -> Aabb3:
    """Analytic box of a sphere or box primitive, optionally in another camera frame."""
    shape = primitive.shape if isinstance(primitive, Primitive) else primitive
    if isinstance(shape, Sphere):
        c = shape.center if transform is None else transform.apply(shape.center)
        return Aabb3(c - shape.radius, c + shape.radius)
    if isinstance(shape, Box):
        if transform is None:
            return Aabb3(shape.min, shape.max)
        corners = transform.apply(np.where(_CORNERS, shape.max, shape.min))
        return Aabb3(corners.min(axis=0), corners.max(axis=0))
    raise UnsupportedError(f"{type(shape).__name__} has no bounded box")


_CORNERS = np.array([[(i >> a) & 1 for a in range(3)] for i in range(8)], dtype=bool)


def visible_surface_points(
    scene: SceneSpec, object_index: int, K: CameraIntrinsics, depth_scale: float = 0.001
) -> np.ndarray:
    """Exact (unquantized) surface points seen through the pixel centers."""
    rc = cast(scene, K)
    sel = (rc.index == object_index) & _object_visibility(rc, depth_scale)
    return rc.dirs[sel] * rc.t[sel][:, None]


def visible_aabb(
    scene: SceneSpec,
    object_index: int,
    K: CameraIntrinsics,
    depth_scale: float = 0.001,
    transform: Optional[RigidTransform] = None,
) -> Aabb3:
    """Box around the part of an object the pixel grid actually samples.

    This is the reference a reconstructed box can be held to: it differs
    from the reconstruction only by depth quantization. ``transform`` maps
    the points into another camera frame before boxing.
    """
    pts = visible_surface_points(scene, object_index, K, depth_scale)
    if pts.size == 0:
        raise UnsupportedError(f"object {object_index} is not visible")
    if transform is not None:
        pts = transform.apply(pts)
    return Aabb3(pts.min(axis=0), pts.max(axis=0))


def visible_cap_aabb(sphere: Sphere) -> Aabb3:
    """Box around the continuous sphere cap visible from the camera center.

    The cap is bounded by the tangent circle of the viewing cone. Along each
    axis the extreme is the sphere's own extreme point if that lies on the
    cap, otherwise the tangent circle's extreme.
    """
    c, r = sphere.center, sphere.radius
    dist = np.linalg.norm(c)
    if dist <= r:
        raise UnsupportedError("camera inside the sphere")
    n = c / dist
    circle_center = c * (1.0 - r * r / dist**2)
    rho = r * np.sqrt(dist**2 - r * r) / dist
    spread = rho * np.sqrt(np.clip(1.0 - n * n, 0.0, None))
    lo = np.where(n >= r / dist, c - r, circle_center - spread)
    hi = np.where(-n >= r / dist, c + r, circle_center + spread)
    return Aabb3(lo, hi)


def mask_detection(mask: BinaryMask, label: str, class_id: int, confidence: float = 1.0) -> Optional[Detection2D]:
    """Tight pixel-edge box around a mask, or None for an empty mask."""
    rows, cols = np.nonzero(mask.bits)
    if rows.size == 0:
        return None
    box = (float(cols.min()), float(rows.min()), float(cols.max() + 1), float(rows.max() + 1))
    return Detection2D(class_id, label, confidence, box)


_PALETTE = np.array(
    [[230, 25, 75], [60, 180, 75], [0, 130, 200], [245, 130, 48], [145, 30, 180], [70, 240, 240]],
    dtype=np.uint8,
)


def render_color(scene: SceneSpec, K: CameraIntrinsics, pose: Optional[RigidTransform] = None) -> ColorFrame:
    """Flat-shaded label image: one color per primitive, gray background."""
    rc = cast(scene, K, pose)
    img = np.zeros(rc.t.shape + (3,), dtype=np.uint8)
    img[rc.index == -1] = 128
    for i in range(len(scene.primitives)):
        img[rc.index == i] = _PALETTE[i % len(_PALETTE)]
    return ColorFrame(img)


# ---------------------------------------------------------------- noise

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def counter_uniform(seed: int, stream: int, index: np.ndarray) -> np.ndarray:
    """Uniform (0, 1] values that depend only on (seed, stream, pixel index)."""
    with np.errstate(over="ignore"):
        key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
        key = _splitmix64(key ^ np.uint64(stream))
        bits = _splitmix64(key + np.asarray(index, dtype=np.uint64) * _GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def inject_noise(depth: DepthFrame, spec: NoiseSpec) -> DepthFrame:
    """Perturb valid pixels with Gaussian noise, dropouts and far outliers.

    Per valid pixel, independently: with probability ``dropout_rate`` it is
    invalidated; otherwise with probability ``outlier_rate`` it is pushed
    by ``±outlier_magnitude`` meters; every surviving pixel also receives
    N(0, sigma) noise. The draw for a pixel is keyed by (seed, pixel index)
    alone, so results are reproducible regardless of evaluation order.
    """
    idx = np.arange(depth.data.size, dtype=np.uint64)
    units = depth.data.reshape(-1).astype(np.float64)
    valid = units != 0

    u_drop = counter_uniform(spec.seed, 0, idx)
    u_out = counter_uniform(spec.seed, 1, idx)
    u_sign = counter_uniform(spec.seed, 2, idx)
    g1 = counter_uniform(spec.seed, 3, idx)
    g2 = counter_uniform(spec.seed, 4, idx)
    gauss = np.sqrt(-2.0 * np.log(g1)) * np.cos(2.0 * np.pi * g2)

    drop = valid & (u_drop <= spec.dropout_rate) if spec.dropout_rate > 0 else np.zeros_like(valid)
    outlier = valid & ~drop & (u_out <= spec.outlier_rate) if spec.outlier_rate > 0 else np.zeros_like(valid)
    shift = np.where(outlier, np.where(u_sign <= 0.5, -1.0, 1.0) * spec.outlier_magnitude, 0.0)
    shift = shift + gauss * spec.sigma

    new = np.rint(units + shift / depth.depth_scale)
    new[~valid | drop] = 0
    new[(new < 1) | (new > 65535)] = 0
    return DepthFrame(new.reshape(depth.data.shape).astype(np.uint16), depth.depth_scale)


# ---------------------------------------------------------------- bundles


def make_bundle(
    scene: SceneSpec,
    K_c: CameraIntrinsics,
    K_d: CameraIntrinsics,
    T_cd: RigidTransform,
    noise: Optional[NoiseSpec] = None,
    depth_scale: float = 0.001,
):
    """Render a complete frame bundle with ground truth.

    Depth is rendered from the depth camera (scene frame) and optionally
    noised; color, masks and detections come from the color camera. Returns
    ``(bundle, truth)`` where ``truth`` lists, per emitted detection, the
    primitive index, label, class id and visible pixel count.
    """
    depth = render_depth(scene, K_d, depth_scale)
    if noise is not None:
        depth = inject_noise(depth, noise)
    color = render_color(scene, K_c, T_cd)
    detections, masks, truth = [], [], []
    for i, m in enumerate(ground_truth_masks(scene, K_c, T_cd, depth_scale)):
        prim = scene.primitives[i]
        det = mask_detection(m, prim.label, prim.class_id)
        if det is None:
            continue
        detections.append(det)
        masks.append(m)
        truth.append({"index": i, "label": prim.label, "class_id": prim.class_id, "pixels": m.count()})
    return FrameBundle(depth, K_c, K_d, T_cd, detections, masks, color), truth
