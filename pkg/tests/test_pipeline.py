import dataclasses

import numpy as np
import pytest

from fvkit.core import (
    BinaryMask,
    Detection2D,
    DepthFrame,
    FrameBundle,
    OutlierParams,
    ValidationError,
    VoxelParams,
)
from fvkit.pipeline import (
    STAGES,
    PipelineConfig,
    StageError,
    StageTiming,
    bench,
    run_pipeline,
    summarize_timings,
)
from fvkit.synth import visible_aabb

from scenes import IDENTITY, SPECKLE, VGA, bundle, sphere_scene, three_object_scene


@pytest.fixture(scope="module")
def sphere_bundle():
    return bundle(sphere_scene())[0]


@pytest.fixture(scope="module")
def speckled_bundle():
    return bundle(sphere_scene(), SPECKLE)[0]


def test_single_sphere_one_object_within_tolerance(speckled_bundle):
    result = run_pipeline(speckled_bundle)
    assert len(result.objects) == 1
    obj = result.objects[0]
    assert obj.label == "sphere" and obj.class_id == 0
    truth = visible_aabb(sphere_scene(), 0, VGA)
    # voxel centroids sit at most half a voxel inside the sampled extremes
    tol = 0.005 / 2 + 0.001 + 0.5 * 2.0 / VGA.fx
    assert obj.box.face_errors(truth).max() <= tol


def test_noiseless_denoise_only_trims(sphere_bundle):
    # With no outliers the distance spread is tiny, so the sparse grazing
    # rim crosses the threshold; the box can shrink but never grow.
    truth = visible_aabb(sphere_scene(), 0, VGA)
    raw = run_pipeline(sphere_bundle, PipelineConfig(denoise=False)).objects[0].box
    den = run_pipeline(sphere_bundle).objects[0].box
    assert raw.face_errors(truth).max() <= 0.0025 + 0.001 + 0.5 * 2.0 / VGA.fx
    assert raw.contains_box(den)
    assert den.min[2] == raw.min[2]  # the dense front cap survives


def test_stage_order_is_fixed(sphere_bundle):
    result = run_pipeline(sphere_bundle)
    assert tuple(t.stage for t in result.timings) == STAGES
    assert all(t.ms >= 0 for t in result.timings)


def test_disabled_stages_are_omitted(sphere_bundle):
    cfg = PipelineConfig(downsample=False, denoise=False)
    stages = [t.stage for t in run_pipeline(sphere_bundle, cfg).timings]
    assert stages == [s for s in STAGES if s not in ("downsample", "denoise")]


def test_zero_detections_still_times_align_and_full_cloud(sphere_bundle):
    empty = dataclasses.replace(sphere_bundle, detections=(), masks=())
    result = run_pipeline(empty)
    assert result.objects == []
    stages = [t.stage for t in result.timings]
    assert stages[:2] == ["align", "full_cloud"]
    assert result.timings[1].points == result.full_view_points == int(sphere_bundle.depth.valid.sum())


def test_denoise_never_grows_the_box(speckled_bundle):
    on = run_pipeline(speckled_bundle, PipelineConfig()).objects[0].box
    off = run_pipeline(speckled_bundle, PipelineConfig(denoise=False)).objects[0].box
    assert on.volume <= off.volume
    assert off.contains_box(on)


def test_deterministic(speckled_bundle):
    a = run_pipeline(speckled_bundle)
    b = run_pipeline(speckled_bundle)
    assert len(a.objects) == len(b.objects)
    for x, y in zip(a.objects, b.objects):
        assert np.array_equal(x.cloud.points, y.cloud.points)
        assert np.array_equal(x.cloud.colors, y.cloud.colors)
        assert x.box == y.box
    assert [t.points for t in a.timings] == [t.points for t in b.timings]


def test_point_reduction_below_fifteen_percent():
    b, truth = bundle(three_object_scene())
    coverage = sum(t["pixels"] for t in truth) / b.depth.valid.sum()
    assert coverage < 0.15
    result = run_pipeline(b)
    assert len(result.objects) == 3
    assert result.retained_points / result.full_view_points < 0.15


def test_full_view_density_all_valid_vga():
    depth = DepthFrame(np.full((480, 640), 1500, dtype=np.uint16))
    b = FrameBundle(depth, VGA, VGA, IDENTITY)
    result = run_pipeline(b)
    assert result.full_view_points == 307200
    report = bench(b, repetitions=1)
    assert report.stages[1].stage == "full_cloud" and report.stages[1].points == 307200


def test_min_points_skips_with_warning(sphere_bundle):
    result = run_pipeline(sphere_bundle, PipelineConfig(min_points=10**7))
    assert result.objects == []
    assert len(result.warnings) == 1 and "min_points" in result.warnings[0]


def test_empty_mask_is_a_warning_not_a_failure(sphere_bundle):
    blank = BinaryMask.full(640, 480, False)
    det = Detection2D(5, "ghost", 0.5, (0, 0, 10, 10))
    b = dataclasses.replace(
        sphere_bundle,
        detections=tuple(sphere_bundle.detections) + (det,),
        masks=tuple(sphere_bundle.masks) + (blank,),
    )
    result = run_pipeline(b)
    assert [o.label for o in result.objects] == ["sphere"]
    assert any("ghost" in w for w in result.warnings)


def test_raw_clouds_emitted_before_post_processing(sphere_bundle):
    result = run_pipeline(sphere_bundle, PipelineConfig(emit_raw_clouds=True))
    extract = next(t for t in result.timings if t.stage == "extract")
    assert len(result.raw_clouds) == 1
    assert len(result.raw_clouds[0]) == extract.points
    assert len(result.raw_clouds[0]) > len(result.objects[0].cloud)


def test_stage_failure_is_tagged(sphere_bundle, monkeypatch):
    import fvkit.pipeline as pl

    def boom(*a, **k):
        raise RuntimeError("kd-tree exploded")

    monkeypatch.setattr(pl, "remove_statistical_outliers", boom)
    with pytest.raises(StageError) as info:
        run_pipeline(sphere_bundle)
    assert info.value.stage == "denoise"
    assert isinstance(info.value.cause, RuntimeError)


# ---------------------------------------------------------------- config


def test_config_round_trip_and_override():
    cfg = PipelineConfig.from_dict({
        "voxel": {"voxel_size": 0.01},
        "outlier": {"k_neighbors": 20, "std_ratio": 1.5},
        "min_points": 10,
        "emit_wireframes": True,
    })
    assert cfg.voxel == VoxelParams(0.01)
    assert cfg.outlier == OutlierParams(20, 1.5)
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    o = cfg.override(voxel_size=0.02, std_ratio=3.0, denoise=False, emit_raw_clouds=None)
    assert o.voxel.voxel_size == 0.02
    assert o.outlier == OutlierParams(20, 3.0)
    assert o.denoise is False and o.emit_raw_clouds is False and o.min_points == 10


def test_config_defaults():
    cfg = PipelineConfig()
    assert cfg.voxel.voxel_size == 0.005
    assert cfg.outlier == OutlierParams(300, 2.0)


@pytest.mark.parametrize("doc", [
    {"voxel": {"voxel_size": -1}},
    {"outlier": {"k_neighbors": 0}},
    {"min_points": -2},
    {"bogus": 1},
    [],
])
def test_config_rejects_bad_values(doc):
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict(doc)


# ---------------------------------------------------------------- bench


def _run(ms_list, points=None):
    return [StageTiming(s, ms, None if points is None else points[i])
            for i, (s, ms) in enumerate(zip(STAGES, ms_list))]


def test_bench_single_repetition_equals_one_run():
    run = _run([1.0, 2.0, 0.5, 0.25, 3.0, 4.0, 0.125], points=list(range(7)))
    rep = summarize_timings([run], 100, 10)
    assert [s.median_ms for s in rep.stages] == [t.ms for t in run]
    assert [s.points for s in rep.stages] == list(range(7))
    assert rep.total_median_ms == sum(t.ms for t in run)
    assert rep.fps == pytest.approx(1000.0 / 10.875)


def test_bench_median_ignores_one_slow_run():
    base = [1.0, 2.0, 0.5, 0.25, 3.0, 4.0, 0.125]
    runs = [_run(base), _run(base), _run(base)]
    slow = _run([x * 1000 for x in base])
    a = summarize_timings(runs)
    b = summarize_timings(runs[:2] + [slow])
    assert [s.median_ms for s in a.stages] == [s.median_ms for s in b.stages]
    assert a.total_median_ms == b.total_median_ms
    assert b.total_mean_ms > a.total_mean_ms


def test_bench_cumulative_time_monotone(sphere_bundle):
    rep = bench(sphere_bundle, repetitions=3)
    cum = [s.cumulative_ms for s in rep.stages]
    assert all(b >= a for a, b in zip(cum, cum[1:]))
    assert rep.stages[-1].cumulative_ms == pytest.approx(sum(s.median_ms for s in rep.stages))
    rows = rep.rows()
    assert set(rows[0]) == {"process", "ms", "fps", "points"}
    assert [r["process"] for r in rows[:2]] == ["detector", "segmenter"]
    assert rows[0]["ms"] == "external"
    fps = [r["fps"] for r in rows[2:]]
    assert all(b <= a for a, b in zip(fps, fps[1:]))


def test_bench_rejects_zero_repetitions(sphere_bundle):
    with pytest.raises(ValidationError):
        bench(sphere_bundle, repetitions=0)
