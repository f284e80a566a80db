"""Point clouds from (aligned) depth frames and instance masks."""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from .align import backproject_pixels
from .cloudproc import compute_aabb
from .core import (
    BinaryMask,
    CameraIntrinsics,
    ColorFrame,
    DepthFrame,
    Detection2D,
    LabeledCloud,
    PointCloud,
    ShapeError,
)

logger = logging.getLogger(__name__)


def depth_to_cloud(
    depth: DepthFrame,
    K: CameraIntrinsics,
    mask: Optional[BinaryMask] = None,
    color: Optional[ColorFrame] = None,
) -> PointCloud:
    """One point per valid (and masked) pixel, in row-major pixel order."""
    shape = depth.data.shape
    if mask is not None and mask.bits.shape != shape:
        raise ShapeError(f"mask shape {mask.bits.shape} != depth shape {shape}")
    if color is not None and color.data.shape[:2] != shape:
        raise ShapeError(f"color shape {color.data.shape[:2]} != depth shape {shape}")
    keep = depth.valid if mask is None else depth.valid & mask.bits
    # np.nonzero walks in C (row-major) order
    rows, cols = np.nonzero(keep)
    z = depth.data[rows, cols].astype(np.float64) * depth.depth_scale
    pts = backproject_pixels(cols.astype(np.float64), rows.astype(np.float64), z, K)
    colors = color.data[rows, cols] if color is not None else None
    return PointCloud(pts, colors)


def extract_objects(
    aligned_depth: DepthFrame,
    K_c: CameraIntrinsics,
    detections: Sequence[Detection2D],
    masks: Sequence[BinaryMask],
    color: Optional[ColorFrame] = None,
    min_points: int = 1,
    process=None,
) -> list[LabeledCloud]:
    """Build one labeled cloud per detection.

    ``process`` is an optional callable applied to each raw object cloud
    (downsampling, denoising) before the box is fitted. Objects whose final
    cloud has fewer than ``min_points`` points are skipped with a warning.
    """
    if len(detections) != len(masks):
        raise ShapeError(f"{len(masks)} masks for {len(detections)} detections")
    objects = []
    for i, (det, mask) in enumerate(zip(detections, masks)):
        cloud = depth_to_cloud(aligned_depth, K_c, mask, color)
        if process is not None:
            cloud = process(cloud)
        if len(cloud) < max(min_points, 1):
            logger.warning(
                "detection %d (%s) has %d points after processing, below min_points=%d; skipped",
                i, det.label, len(cloud), min_points,
            )
            continue
        objects.append(LabeledCloud(det.label, det.class_id, cloud, compute_aabb(cloud)))
    return objects
