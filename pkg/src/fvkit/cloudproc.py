"""Point-cloud post-processing: voxel downsampling, statistical outlier
removal and axis-aligned bounding boxes."""

from __future__ import annotations

import logging

import numpy as np
from scipy.spatial import cKDTree

from .core import Aabb3, EmptyInputError, OutlierParams, PointCloud, VoxelParams

logger = logging.getLogger(__name__)

_KNN_CHUNK = 512


def voxel_keys(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Integer voxel index ``floor(coord / voxel_size)`` per axis, shape (n, 3)."""
    return np.floor(np.asarray(points, dtype=np.float64) / voxel_size).astype(np.int64)


def voxel_downsample(cloud: PointCloud, params: VoxelParams = VoxelParams()) -> PointCloud:
    """Replace the points of every occupied voxel by their centroid.

    Output is ordered by ascending voxel key, comparing z first, then y,
    then x. Colors, when present, are averaged and rounded.
    """
    n = len(cloud)
    if n == 0:
        return cloud
    keys = voxel_keys(cloud.points, params.voxel_size)
    _, inverse, counts = np.unique(keys[:, ::-1], axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    m = counts.shape[0]
    sums = np.zeros((m, 3))
    np.add.at(sums, inverse, cloud.points)
    centroids = sums / counts[:, None]
    colors = None
    if cloud.colors is not None:
        csum = np.zeros((m, 3))
        np.add.at(csum, inverse, cloud.colors.astype(np.float64))
        colors = np.clip(np.rint(csum / counts[:, None]), 0, 255).astype(np.uint8)
    return PointCloud(centroids, colors)


def effective_k(n: int, k_neighbors: int) -> int:
    return max(0, min(k_neighbors, n - 1))


def mean_knn_distances(points: np.ndarray, k: int) -> np.ndarray:
    """Mean Euclidean distance from each point to its ``k`` nearest other points.

    A kd-tree selects the neighbours; distances are then recomputed as
    ``sqrt(dx² + dy² + dz²)`` and averaged in ascending order so the result
    does not depend on the tree's internal arithmetic.
    """
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    tree = cKDTree(points)
    out = np.empty(n)
    for start in range(0, n, _KNN_CHUNK):
        block = points[start:start + _KNN_CHUNK]
        _, idx = tree.query(block, k=k + 1)
        idx = idx.reshape(block.shape[0], k + 1)
        self_idx = np.arange(start, start + block.shape[0])
        is_self = idx == self_idx[:, None]
        # drop the query point itself; with duplicates it may be absent, then drop the farthest
        has_self = is_self.any(axis=1)
        is_self[~has_self, -1] = True
        nbr = idx[~is_self].reshape(block.shape[0], k)
        diff = points[nbr] - block[:, None, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        d.sort(axis=1)
        out[start:start + block.shape[0]] = d.mean(axis=1)
    return out


def remove_statistical_outliers(
    cloud: PointCloud, params: OutlierParams = OutlierParams()
) -> tuple[PointCloud, np.ndarray]:
    """Drop points whose mean k-NN distance exceeds ``mean + std_ratio * std``.

    ``std`` is the population standard deviation over all points and the
    comparison is strict. ``k`` is clamped to ``n - 1``. Returns the filtered
    cloud (input order preserved) and the sorted indices of removed points.
    """
    n = len(cloud)
    if n < 2:
        return cloud, np.empty(0, dtype=np.int64)
    k = effective_k(n, params.k_neighbors)
    if k < params.k_neighbors:
        logger.warning("k_neighbors=%d clamped to %d for a %d-point cloud", params.k_neighbors, k, n)
    d = mean_knn_distances(cloud.points, k)
    threshold = d.mean() + params.std_ratio * d.std()
    outlier = d > threshold
    removed = np.flatnonzero(outlier)
    keep = ~outlier
    colors = cloud.colors[keep] if cloud.colors is not None else None
    return PointCloud(cloud.points[keep], colors), removed


def compute_aabb(cloud: PointCloud) -> Aabb3:
    if len(cloud) == 0:
        raise EmptyInputError("cannot fit a bounding box to an empty cloud")
    return Aabb3(cloud.points.min(axis=0), cloud.points.max(axis=0))


# corner i takes max on axis a iff bit a of i is set
_CORNER_BITS = np.array([[(i >> a) & 1 for a in range(3)] for i in range(8)], dtype=bool)
WIREFRAME_EDGES = tuple(
    (i, i | (1 << a)) for a in range(3) for i in range(8) if not (i >> a) & 1
)


def aabb_wireframe(box: Aabb3) -> tuple[np.ndarray, tuple[tuple[int, int], ...]]:
    """Eight corners and the twelve axis-parallel edges joining them."""
    corners = np.where(_CORNER_BITS, box.max, box.min)
    return corners, WIREFRAME_EDGES
