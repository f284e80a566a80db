import itertools
import math

import numpy as np
import pytest

from fvkit.cloudproc import (
    aabb_wireframe,
    compute_aabb,
    mean_knn_distances,
    remove_statistical_outliers,
    voxel_downsample,
)
from fvkit.core import Aabb3, EmptyInputError, OutlierParams, PointCloud, VoxelParams
from oracles import brute_centroids, brute_mean_knn, brute_sor_removed, brute_voxel_census


def test_voxel_examples():
    out = voxel_downsample(PointCloud([[0, 0, 0], [1, 0, 0], [2, 0, 0]]), VoxelParams(5))
    np.testing.assert_array_equal(out.points, [[1, 0, 0]])
    pts = [[0, 0, 0], [10, 0, 0]]
    np.testing.assert_array_equal(voxel_downsample(PointCloud(pts), VoxelParams(5)).points, pts)
    assert len(voxel_downsample(PointCloud([]), VoxelParams(5))) == 0


def test_voxel_census_and_centroids(rng):
    for _ in range(20):
        pts = rng.uniform(0, 50, (1000, 3))
        out = voxel_downsample(PointCloud(pts), VoxelParams(5.0))
        assert len(out) == len(brute_voxel_census(pts, 5.0))
        ref = brute_centroids(pts, 5.0)
        assert np.max(np.abs(out.points - ref) / np.maximum(np.abs(ref), 1e-300)) <= 1e-12


def test_voxel_handles_negative_coordinates():
    out = voxel_downsample(PointCloud([[-0.001, 0, 0], [0.001, 0, 0]]), VoxelParams(0.005))
    assert len(out) == 2
    assert out.points[0, 0] < 0  # key -1 sorts before key 0


def test_voxel_order_is_z_then_y_then_x():
    pts = [[0.0, 0.0, 9.0], [9.0, 0.0, 0.0], [0.0, 9.0, 0.0], [0.0, 0.0, 0.0]]
    out = voxel_downsample(PointCloud(pts), VoxelParams(1.0))
    assert out.points.tolist() == [[0, 0, 0], [9, 0, 0], [0, 9, 0], [0, 0, 9]]


def test_voxel_colors_averaged():
    cloud = PointCloud([[0, 0, 0], [0.1, 0, 0]], colors=[[0, 10, 255], [2, 20, 253]])
    out = voxel_downsample(cloud, VoxelParams(1.0))
    assert out.colors.tolist() == [[1, 15, 254]]


def test_voxel_properties(rng):
    for _ in range(10):
        size = rng.uniform(0.2, 3.0)
        pts = rng.normal(0, 4, (800, 3))
        cloud = PointCloud(pts)
        once = voxel_downsample(cloud, VoxelParams(size))
        twice = voxel_downsample(once, VoxelParams(size))
        assert len(once) <= len(cloud)
        assert len(twice) <= len(once)
        assert compute_aabb(cloud).contains_box(compute_aabb(once), tol=1e-12)
        # each centroid stays within one voxel diagonal of some input point
        d = np.sqrt(((once.points[:, None, :] - pts[None, :, :]) ** 2).sum(-1)).min(axis=1)
        assert np.all(d <= size * math.sqrt(3))


def test_mean_knn_matches_bruteforce(rng):
    pts = rng.normal(0, 1, (300, 3))
    for k in (1, 7, 299):
        np.testing.assert_array_equal(mean_knn_distances(pts, k), brute_mean_knn(pts, k))


def test_sor_identical_points_removes_nothing():
    cloud = PointCloud(np.ones((20, 3)))
    out, removed = remove_statistical_outliers(cloud, OutlierParams(5, 2.0))
    assert len(removed) == 0 and len(out) == 20


def test_sor_tiny_clouds_unchanged():
    one = PointCloud([[1, 2, 3]])
    out, removed = remove_statistical_outliers(one)
    assert out == one and removed.size == 0


def test_sor_far_point_removed():
    grid = np.array(list(itertools.product(range(10), range(10), [0])), dtype=float)
    pts = np.vstack([grid, [[1000.0, 0, 0]]])
    out, removed = remove_statistical_outliers(PointCloud(pts), OutlierParams(10, 2.0))
    assert removed.tolist() == [100]
    assert brute_sor_removed(pts, 10, 2.0) == {100}
    np.testing.assert_array_equal(out.points, grid)


def test_sor_matches_oracle(rng):
    for i in range(10):
        n = int(rng.integers(2, 400))
        pts = np.vstack([rng.normal(0, 1, (n, 3)), rng.uniform(-8, 8, (max(1, n // 20), 3))])
        k = int(rng.choice([1, 5, 20, 300]))
        _, removed = remove_statistical_outliers(PointCloud(pts), OutlierParams(k, 2.0))
        assert set(removed.tolist()) == brute_sor_removed(pts, k, 2.0)


def test_sor_clamp_warning(caplog):
    pts = np.random.default_rng(0).normal(size=(50, 3))
    remove_statistical_outliers(PointCloud(pts), OutlierParams(300, 2.0))
    assert "clamped to 49" in caplog.text


def test_sor_conservative_and_order_preserving(rng):
    for _ in range(5):
        pts = rng.normal(0, 1, (200, 3))
        colors = rng.integers(0, 255, (200, 3))
        out, removed = remove_statistical_outliers(PointCloud(pts, colors), OutlierParams(8, 1.0))
        assert len(removed) < 200
        keep = np.setdiff1d(np.arange(200), removed)
        np.testing.assert_array_equal(out.points, pts[keep])
        np.testing.assert_array_equal(out.colors, colors[keep])


def test_sor_handles_duplicates(rng):
    base = rng.normal(0, 1, (30, 3))
    pts = np.vstack([base, base, base[:5]])  # many exact duplicates
    _, removed = remove_statistical_outliers(PointCloud(pts), OutlierParams(3, 1.0))
    assert set(removed.tolist()) == brute_sor_removed(pts, 3, 1.0)


def test_compute_aabb():
    p = np.array([[0.3, -1.0, 2.0]])
    box = compute_aabb(PointCloud(p))
    np.testing.assert_array_equal(box.min, p[0])
    np.testing.assert_array_equal(box.max, p[0])
    box = compute_aabb(PointCloud([[0, 0, 0], [1, 2, 3]]))
    assert box == Aabb3([0, 0, 0], [1, 2, 3])
    with pytest.raises(EmptyInputError):
        compute_aabb(PointCloud([]))


def test_wireframe():
    corners, edges = aabb_wireframe(Aabb3([0, 0, 0], [1, 1, 1]))
    assert corners.shape == (8, 3) and len(edges) == 12
    assert {tuple(c) for c in corners.tolist()} == set(itertools.product([0.0, 1.0], repeat=3))
    for i, j in edges:
        diff = corners[j] - corners[i]
        assert np.count_nonzero(diff) == 1
        assert np.linalg.norm(diff) == 1.0
    assert len({frozenset(e) for e in edges}) == 12

    flat, _ = aabb_wireframe(Aabb3([1, 2, 3], [1, 2, 3]))
    assert np.all(flat == [1, 2, 3])

    box = Aabb3([-1, 0, 2], [3, 0.5, 7])
    corners, edges = aabb_wireframe(box)
    for i, j in edges:
        differing = [a for a in range(3) if corners[i][a] != corners[j][a]]
        assert len(differing) == 1
        a = differing[0]
        assert {corners[i][a], corners[j][a]} == {box.min[a], box.max[a]}
