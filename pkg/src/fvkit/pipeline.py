"""Per-frame orchestration: align, extract, post-process and box every
detected object, timing each stage."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .align import align_depth_to_color, align_mask_to_depth_domain
from .cloud import depth_to_cloud
from .cloudproc import compute_aabb, remove_statistical_outliers, voxel_downsample
from .core import FrameBundle, FvError, LabeledCloud, OutlierParams, PointCloud, ValidationError, VoxelParams

logger = logging.getLogger(__name__)

# Stages of the recorded-bundle pipeline, in execution order. The detector
# and segmenter run upstream; their outputs arrive inside the bundle.
STAGES = (
    "align",
    "full_cloud",
    "mask_restrict",
    "extract",
    "downsample",
    "denoise",
    "aabb",
)
EXTERNAL_STAGES = ("detector", "segmenter")


class StageError(FvError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    voxel: VoxelParams = VoxelParams()
    outlier: OutlierParams = OutlierParams()
    min_points: int = 1
    emit_raw_clouds: bool = False
    emit_wireframes: bool = False
    downsample: bool = True
    denoise: bool = True

    def __post_init__(self):
        if int(self.min_points) != self.min_points or self.min_points < 0:
            raise ValidationError(f"min_points must be a non-negative integer, got {self.min_points}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        if not isinstance(doc, dict):
            raise ValidationError("pipeline config must be an object")
        voxel = doc.get("voxel", {})
        outlier = doc.get("outlier", {})
        try:
            return cls(
                voxel=VoxelParams(**voxel),
                outlier=OutlierParams(**outlier),
                **{k: v for k, v in doc.items() if k not in ("voxel", "outlier", "schema")},
            )
        except TypeError as exc:
            raise ValidationError(f"pipeline config: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "voxel": {"voxel_size": self.voxel.voxel_size},
            "outlier": {"k_neighbors": self.outlier.k_neighbors, "std_ratio": self.outlier.std_ratio},
            "min_points": self.min_points,
            "emit_raw_clouds": self.emit_raw_clouds,
            "emit_wireframes": self.emit_wireframes,
            "downsample": self.downsample,
            "denoise": self.denoise,
        }

    def override(self, voxel_size=None, k_neighbors=None, std_ratio=None, **flags) -> "PipelineConfig":
        """Copy with any non-None value replaced."""
        cfg = self
        if voxel_size is not None:
            cfg = replace(cfg, voxel=VoxelParams(voxel_size))
        if k_neighbors is not None or std_ratio is not None:
            cfg = replace(cfg, outlier=OutlierParams(
                k_neighbors if k_neighbors is not None else cfg.outlier.k_neighbors,
                std_ratio if std_ratio is not None else cfg.outlier.std_ratio,
            ))
        return replace(cfg, **{k: v for k, v in flags.items() if v is not None})


@dataclass(frozen=True)
class StageTiming:
    stage: str
    ms: float
    points: Optional[int] = None


@dataclass
class PipelineResult:
    objects: list[LabeledCloud]
    timings: list[StageTiming]
    full_view_points: int
    raw_clouds: Optional[list[PointCloud]] = None
    warnings: list[str] = field(default_factory=list)

    @property
    def retained_points(self) -> int:
        return sum(len(o.cloud) for o in self.objects)


class _Timer:
    def __init__(self, timings: list, stage: str):
        self.timings, self.stage = timings, stage
        self.points: Optional[int] = None

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None:
            if isinstance(exc, StageError):
                return False
            raise StageError(self.stage, exc) from exc
        ms = (time.perf_counter() - self.t0) * 1e3
        self.timings.append(StageTiming(self.stage, ms, self.points))
        return False


def run_pipeline(bundle: FrameBundle, config: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Process one frame bundle.

    Stages run in the order of ``STAGES``; disabled post-processing stages
    are omitted from the timings. A failing stage raises ``StageError``.
    Detections whose cloud ends up below ``config.min_points`` are dropped
    with a warning.
    """
    timings: list[StageTiming] = []
    warnings: list[str] = []
    K_c = bundle.intrinsics_color

    with _Timer(timings, "align") as t:
        aligned = align_depth_to_color(bundle.depth, bundle.intrinsics_depth, K_c, bundle.extrinsics)
        t.points = int(aligned.valid.sum())
    with _Timer(timings, "full_cloud") as t:
        full = depth_to_cloud(aligned, K_c)
        t.points = len(full)
    with _Timer(timings, "mask_restrict") as t:
        masks = [align_mask_to_depth_domain(m, aligned) for m in bundle.masks]
        t.points = sum(m.count() for m in masks)
    with _Timer(timings, "extract") as t:
        clouds = [depth_to_cloud(aligned, K_c, m, bundle.color) for m in masks]
        t.points = sum(len(c) for c in clouds)
    raw = list(clouds) if config.emit_raw_clouds else None
    if config.downsample:
        with _Timer(timings, "downsample") as t:
            clouds = [voxel_downsample(c, config.voxel) for c in clouds]
            t.points = sum(len(c) for c in clouds)
    if config.denoise:
        with _Timer(timings, "denoise") as t:
            clouds = [remove_statistical_outliers(c, config.outlier)[0] for c in clouds]
            t.points = sum(len(c) for c in clouds)
    with _Timer(timings, "aabb") as t:
        objects = []
        for i, (det, cloud) in enumerate(zip(bundle.detections, clouds)):
            if len(cloud) < max(config.min_points, 1):
                msg = (f"detection {i} ({det.label}) has {len(cloud)} points, "
                       f"below min_points={config.min_points}; skipped")
                logger.warning(msg)
                warnings.append(msg)
                continue
            objects.append(LabeledCloud(det.label, det.class_id, cloud, compute_aabb(cloud)))
        t.points = sum(len(o.cloud) for o in objects)
    return PipelineResult(objects, timings, len(full), raw, warnings)


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class StageSummary:
    stage: str
    median_ms: float
    mean_ms: float
    points: Optional[int]
    cumulative_ms: float
    fps: float


@dataclass
class BenchReport:
    repetitions: int
    stages: list[StageSummary]
    total_median_ms: float
    total_mean_ms: float
    fps: float
    full_view_points: int
    retained_points: int

    def rows(self) -> list[dict]:
        """Table rows: process, processing time (ms), frame rate (fps), point-cloud density."""
        out = [
            {"process": name, "ms": "external", "fps": "external", "points": "-"}
            for name in EXTERNAL_STAGES
        ]
        for s in self.stages:
            out.append({
                "process": f"+ {s.stage}",
                "ms": round(s.cumulative_ms, 4),
                "fps": round(s.fps, 2),
                "points": s.points if s.points is not None else "-",
            })
        return out

    def to_dict(self) -> dict:
        return {
            "schema": "fv-bench/1",
            "repetitions": self.repetitions,
            "total_median_ms": self.total_median_ms,
            "total_mean_ms": self.total_mean_ms,
            "fps": self.fps,
            "full_view_points": self.full_view_points,
            "retained_points": self.retained_points,
            "stages": [s.__dict__ for s in self.stages],
            "table": self.rows(),
            "note": "computation time only; sensor latency and detector/segmenter inference are not measured",
        }


def _fps(ms: float) -> float:
    return 1000.0 / ms if ms > 0 else float("inf")


def summarize_timings(runs: list[list[StageTiming]], full_view_points: int = 0,
                      retained_points: int = 0) -> BenchReport:
    """Median/mean per stage over repeated runs; fps is 1000 / median total ms."""
    if not runs:
        raise ValidationError("need at least one run")
    names = [t.stage for t in runs[0]]
    stages, cumulative = [], 0.0
    for i, name in enumerate(names):
        samples = [run[i].ms for run in runs]
        med = statistics.median(samples)
        cumulative += med
        stages.append(StageSummary(name, med, statistics.fmean(samples), runs[0][i].points,
                                   cumulative, _fps(cumulative)))
    totals = [sum(t.ms for t in run) for run in runs]
    total_median = statistics.median(totals)
    return BenchReport(len(runs), stages, total_median, statistics.fmean(totals), _fps(total_median),
                       full_view_points, retained_points)


def bench(bundle: FrameBundle, config: PipelineConfig = PipelineConfig(), repetitions: int = 5) -> BenchReport:
    """Run the pipeline ``repetitions`` times sequentially and summarize."""
    if repetitions < 1:
        raise ValidationError(f"repetitions must be >= 1, got {repetitions}")
    runs, result = [], None
    for _ in range(repetitions):
        result = run_pipeline(bundle, config)
        runs.append(result.timings)
    return summarize_timings(runs, result.full_view_points, result.retained_points)
