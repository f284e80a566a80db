"""Post-detection RGB-D object reconstruction: depth alignment, masked
back-projection, voxel downsampling, statistical denoising and 3D boxes,
with a synthetic scene renderer to test against."""

from .core import (
    Aabb3,
    BinaryMask,
    CameraIntrinsics,
    ColorFrame,
    DepthFrame,
    Detection2D,
    FrameBundle,
    FvError,
    LabeledCloud,
    OutlierParams,
    PointCloud,
    RigidTransform,
    VoxelParams,
)
from .pipeline import PipelineConfig, StageError, bench, run_pipeline

__version__ = "0.1.0"
