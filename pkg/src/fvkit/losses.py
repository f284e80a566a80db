"""Reference implementations of the detector training losses.

Pure scalar functions with their analytic derivatives with respect to the
prediction. There is no training loop here; these exist to document and
verify the formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BoxParams, FocalParams, ShapeError

EPS = 1e-12


def _clamp(p: float) -> float:
    return min(max(float(p), EPS), 1.0 - EPS)


def objectness_loss(y: float, y_hat: float) -> float:
    """Binary cross-entropy for object presence in a grid cell."""
    p = _clamp(y_hat)
    return -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))


def objectness_grad(y: float, y_hat: float) -> float:
    p = _clamp(y_hat)
    return -y / p + (1.0 - y) / (1.0 - p)


def classification_loss(y, y_hat) -> float:
    """Cross-entropy between a one-hot target and predicted class probabilities."""
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(y_hat, dtype=np.float64)
    if y.shape != q.shape:
        raise ShapeError(f"target has {y.shape} entries, prediction has {q.shape}")
    q = np.clip(q, EPS, 1.0 - EPS)
    return float(-(y * np.log(q)).sum())


def classification_grad(y, y_hat) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(y_hat, dtype=np.float64)
    if y.shape != q.shape:
        raise ShapeError(f"target has {y.shape} entries, prediction has {q.shape}")
    return -y / np.clip(q, EPS, 1.0 - EPS)


def bbox_loss(y: BoxParams, y_hat: BoxParams) -> float:
    """Sum of squared differences over (cx, cy, w, h)."""
    diff = y.as_array() - y_hat.as_array()
    return float((diff * diff).sum())


def bbox_grad(y: BoxParams, y_hat: BoxParams) -> np.ndarray:
    """Gradient w.r.t. the predicted (cx, cy, w, h)."""
    return -2.0 * (y.as_array() - y_hat.as_array())


def center_focal_loss(y_center: float, y_hat_center: float, params: FocalParams = FocalParams()) -> float:
    """Focal-weighted log loss on the center prediction.

    There is no ``(1 - y)`` term, so the loss is identically zero when
    ``y_center == 0``.
    """
    p = _clamp(y_hat_center)
    return -params.alpha * (1.0 - p) ** params.gamma * y_center * math.log(p)


def center_focal_grad(y_center: float, y_hat_center: float, params: FocalParams = FocalParams()) -> float:
    p = _clamp(y_hat_center)
    a, g = params.alpha, params.gamma
    dweight = -g * (1.0 - p) ** (g - 1.0) if g != 0 else 0.0
    return -a * y_center * (dweight * math.log(p) + (1.0 - p) ** g / p)


@dataclass(frozen=True)
class LossWeights:
    objectness: float = 1.0
    classification: float = 1.0
    bbox: float = 1.0
    center: float = 1.0


def total_loss(
    y_obj, y_hat_obj, y_cls, y_hat_cls, y_box, y_hat_box, y_center, y_hat_center,
    focal: FocalParams = FocalParams(), weights: LossWeights = LossWeights(),
) -> float:
    """Weighted sum of the four losses for a single cell."""
    return (
        weights.objectness * objectness_loss(y_obj, y_hat_obj)
        + weights.classification * classification_loss(y_cls, y_hat_cls)
        + weights.bbox * bbox_loss(y_box, y_hat_box)
        + weights.center * center_focal_loss(y_center, y_hat_center, focal)
    )
