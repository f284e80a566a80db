"""Pinhole projection and depth-to-color alignment."""

from __future__ import annotations

import numpy as np

from .core import (
    BehindCameraError,
    BinaryMask,
    CameraIntrinsics,
    DepthFrame,
    InvalidDepthError,
    RigidTransform,
    ShapeError,
)

# Projected coordinates within this distance of a half-integer round up;
# absorbs float error accumulated through back-project/transform/project.
HALF_PIXEL_SNAP = 1e-6


def backproject(u, v, z, K: CameraIntrinsics) -> np.ndarray:
    """Lift pixel (u, v) at optical-axis depth ``z`` meters to camera space."""
    if not z > 0:
        raise InvalidDepthError(f"depth must be positive, got {z}")
    return np.array([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, float(z)])


def project(p, K: CameraIntrinsics) -> tuple[float, float]:
    x, y, z = (float(c) for c in p)
    if not z > 0:
        raise BehindCameraError(f"point {tuple(p)} is not in front of the camera")
    return K.fx * x / z + K.cx, K.fy * y / z + K.cy


def backproject_pixels(u: np.ndarray, v: np.ndarray, z: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    """Vectorized ``backproject``; returns an (n, 3) array. No validity check on ``z``."""
    return np.column_stack([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z])


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5 + HALF_PIXEL_SNAP).astype(np.int64)


def align_depth_to_color(
    depth: DepthFrame, K_d: CameraIntrinsics, K_c: CameraIntrinsics, T_cd: RigidTransform
) -> DepthFrame:
    """Re-render a depth frame from the color camera's viewpoint.

    Every valid source pixel is back-projected with ``K_d``, moved into the
    color camera frame by ``T_cd`` and projected with ``K_c``, then splatted to
    the nearest target pixel. When several source pixels land on the same
    target the nearest depth wins, so the result does not depend on
    iteration order. Targets that receive nothing stay invalid (0); there is
    no hole filling.

    The returned frame has ``K_c``'s resolution and the source depth scale.
    """
    if (depth.width, depth.height) != (K_d.width, K_d.height):
        raise ShapeError(
            f"depth frame is {depth.width}x{depth.height}, depth intrinsics say {K_d.width}x{K_d.height}"
        )
    rows, cols = np.nonzero(depth.data)
    z = depth.data[rows, cols].astype(np.float64) * depth.depth_scale
    pts = T_cd.apply(backproject_pixels(cols.astype(np.float64), rows.astype(np.float64), z, K_d))

    out = np.zeros((K_c.height, K_c.width), dtype=np.uint16)
    zc = pts[:, 2]
    front = zc > 0
    pts, zc = pts[front], zc[front]
    u = round_half_up(K_c.fx * pts[:, 0] / zc + K_c.cx)
    v = round_half_up(K_c.fy * pts[:, 1] / zc + K_c.cy)
    units = np.rint(zc / depth.depth_scale)
    keep = (u >= 0) & (u < K_c.width) & (v >= 0) & (v < K_c.height) & (units >= 1) & (units <= 65535)
    u, v, units = u[keep], v[keep], units[keep].astype(np.int64)

    zbuf = np.full(K_c.width * K_c.height, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(zbuf, v * K_c.width + u, units)
    hit = zbuf != np.iinfo(np.int64).max
    out.reshape(-1)[hit] = zbuf[hit]
    return DepthFrame(out, depth.depth_scale)


def align_mask_to_depth_domain(mask: BinaryMask, aligned_depth: DepthFrame) -> BinaryMask:
    """Restrict ``mask`` to pixels that carry valid aligned depth."""
    if mask.bits.shape != aligned_depth.data.shape:
        raise ShapeError(
            f"mask is {mask.width}x{mask.height}, aligned depth is "
            f"{aligned_depth.width}x{aligned_depth.height}"
        )
    return BinaryMask(mask.bits & aligned_depth.valid)
