import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from fvkit.align import align_depth_to_color, align_mask_to_depth_domain, backproject, project
from fvkit.core import (
    BehindCameraError,
    BinaryMask,
    CameraIntrinsics,
    DepthFrame,
    InvalidDepthError,
    RigidTransform,
    ShapeError,
)
from oracles import brute_align_frame

K500 = CameraIntrinsics(500.0, 500.0, 320.0, 240.0, 640, 480)


def test_backproject_examples():
    np.testing.assert_array_equal(backproject(320, 240, 1.0, K500), [0, 0, 1.0])
    np.testing.assert_allclose(backproject(420, 240, 2.0, K500), [0.4, 0, 2.0], atol=1e-15)
    with pytest.raises(InvalidDepthError):
        backproject(1, 1, 0.0, K500)


def test_project_examples():
    assert project((0, 0, 1), K500) == (320.0, 240.0)
    u, v = project((0.4, 0, 2.0), K500)
    assert u == pytest.approx(420, abs=1e-12) and v == 240.0
    with pytest.raises(BehindCameraError):
        project((0, 0, -1), K500)


@settings(max_examples=300, deadline=None)
@given(u=st.floats(-100, 740), v=st.floats(-100, 580), z=st.floats(0.05, 60))
def test_project_backproject_roundtrip(u, v, z):
    pu, pv = project(backproject(u, v, z, K500), K500)
    assert abs(pu - u) <= 1e-9 and abs(pv - v) <= 1e-9


def _random_depth(rng, w, h, invalid=0.2):
    d = rng.integers(300, 5000, (h, w)).astype(np.uint16)
    d[rng.random((h, w)) < invalid] = 0
    return DepthFrame(d)


def test_identity_alignment_is_bit_exact(rng):
    K = CameraIntrinsics(40.0, 42.0, 15.5, 11.0, 32, 24)
    depth = _random_depth(rng, 32, 24)
    out = align_depth_to_color(depth, K, K, RigidTransform.identity())
    assert out == depth


def test_plane_shift_by_baseline():
    # plane at 1 m, 25 mm baseline, fx = 500: disparity 12.5 px rounds to 13
    depth = DepthFrame(np.full((480, 640), 1000, dtype=np.uint16))
    T = RigidTransform(np.eye(3), [0.025, 0, 0])
    out = align_depth_to_color(depth, K500, K500, T)
    assert np.all(out.data[:, 13:] == 1000)
    assert np.all(out.data[:, :13] == 0)


def test_z_buffer_keeps_nearest():
    K = CameraIntrinsics(1.0, 1.0, 0.0, 0.0, 4, 1)
    T = RigidTransform(np.eye(3), [2.0, 0, 0])
    d = np.zeros((1, 4), dtype=np.uint16)
    d[0, 0] = 1000  # x' = 0 + 2 at z = 1 -> u' = 2
    d[0, 1] = 2000  # x' = 2 + 2 at z = 2 -> u' = 2
    out = align_depth_to_color(DepthFrame(d), K, K, T)
    assert out.data[0, 2] == 1000
    assert out.data[0].tolist().count(0) == 3


def test_alignment_matches_bruteforce_eq(rng):
    Kd = CameraIntrinsics(30.0, 31.0, 11.5, 8.0, 24, 18)
    Kc = CameraIntrinsics(35.0, 34.0, 13.0, 9.5, 26, 20)
    for seed in range(3):
        R = Rotation.from_euler("xyz", rng.uniform(-0.05, 0.05, 3)).as_matrix()
        t = rng.uniform(-0.03, 0.03, 3)
        depth = _random_depth(rng, 24, 18)
        out = align_depth_to_color(depth, Kd, Kc, RigidTransform(R, t))
        ref = brute_align_frame(depth.data, depth.depth_scale, Kd.matrix, Kc.matrix, R, t, (20, 26))
        np.testing.assert_array_equal(out.data, ref)


def test_alignment_never_invents_depth(rng):
    Kd = CameraIntrinsics(30.0, 30.0, 12.0, 9.0, 24, 18)
    R = Rotation.from_euler("y", 0.03).as_matrix()
    t = np.array([0.02, -0.01, 0.005])
    T = RigidTransform(R, t)
    depth = _random_depth(rng, 24, 18)
    out = align_depth_to_color(depth, Kd, Kd, T)
    rows, cols = np.nonzero(depth.data)
    z = depth.data[rows, cols] * depth.depth_scale
    pts = np.column_stack([(cols - Kd.cx) * z / Kd.fx, (rows - Kd.cy) * z / Kd.fy, z])
    source_units = np.rint(T.apply(pts)[:, 2] / depth.depth_scale).astype(int)
    pool = list(source_units)
    for value in out.data[out.data > 0].tolist():
        assert value in pool
        pool.remove(value)


def test_alignment_deterministic(rng):
    depth = _random_depth(rng, 64, 48)
    K = CameraIntrinsics(60.0, 60.0, 32.0, 24.0, 64, 48)
    T = RigidTransform(Rotation.from_euler("z", 0.1).as_matrix(), [0.01, 0.0, 0.0])
    a = align_depth_to_color(depth, K, K, T)
    b = align_depth_to_color(depth, K, K, T)
    assert a == b


def test_alignment_resizes_to_color_camera(rng):
    Kd = CameraIntrinsics(30.0, 30.0, 12.0, 9.0, 24, 18)
    Kc = CameraIntrinsics(60.0, 60.0, 24.0, 18.0, 48, 36)
    out = align_depth_to_color(_random_depth(rng, 24, 18), Kd, Kc, RigidTransform.identity())
    assert (out.width, out.height) == (48, 36)
    with pytest.raises(ShapeError):
        align_depth_to_color(_random_depth(rng, 10, 10), Kd, Kc, RigidTransform.identity())


def test_mask_restriction(rng):
    full = BinaryMask.full(8, 6)
    valid = DepthFrame(np.ones((6, 8), dtype=np.uint16))
    invalid = DepthFrame(np.zeros((6, 8), dtype=np.uint16))
    assert align_mask_to_depth_domain(full, valid) == full
    assert align_mask_to_depth_domain(full, invalid).count() == 0
    m = rng.random((6, 8)) < 0.5
    d = (rng.random((6, 8)) < 0.5).astype(np.uint16) * 700
    out = align_mask_to_depth_domain(BinaryMask(m), DepthFrame(d))
    for r in range(6):
        for c in range(8):
            assert out.bits[r, c] == (bool(m[r, c]) and d[r, c] != 0)
    with pytest.raises(ShapeError):
        align_mask_to_depth_domain(BinaryMask.full(3, 3), valid)
