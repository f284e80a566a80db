"""Detection and segmentation evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BinaryMask, EmptyInputError, ShapeError, UndefinedMetricError, ValidationError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def pred_empty(self) -> bool:
        return self.tp + self.fp == 0

    @property
    def gt_empty(self) -> bool:
        return self.tp + self.fn == 0


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    median: float
    mad: float


def bbox_iou(a, b) -> float:
    """IoU of two (x1, y1, x2, y2) boxes; zero-area boxes give 0."""
    ax1, ay1, ax2, ay2 = (float(x) for x in a)
    bx1, by1, bx2, by2 = (float(x) for x in b)
    area_a = max(ax2 - ax1, 0.0) * max(ay2 - ay1, 0.0)
    area_b = max(bx2 - bx1, 0.0) * max(by2 - by1, 0.0)
    if area_a == 0.0 or area_b == 0.0:
        return 0.0
    iw = max(min(ax2, bx2) - max(ax1, bx1), 0.0)
    ih = max(min(ay2, by2) - max(ay1, by1), 0.0)
    inter = iw * ih
    return inter / (area_a + area_b - inter)


def _bits(m) -> np.ndarray:
    return m.bits if isinstance(m, BinaryMask) else np.asarray(m, dtype=bool)


def mask_confusion(pred, gt) -> ConfusionCounts:
    p, g = _bits(pred), _bits(gt)
    if p.shape != g.shape:
        raise ShapeError(f"prediction shape {p.shape} != ground-truth shape {g.shape}")
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def mask_union(masks: Iterable) -> np.ndarray:
    """OR together instance masks into one binary image."""
    masks = [_bits(m) for m in masks]
    if not masks:
        raise EmptyInputError("no masks to merge")
    out = np.zeros_like(masks[0])
    for m in masks:
        if m.shape != out.shape:
            raise ShapeError("instance masks differ in size")
        out |= m
    return out


# Zero denominators: 1.0 when prediction and ground truth are both empty, else 0.0.

def _ratio(num: int, den: int, c: ConfusionCounts) -> float:
    if den == 0:
        return 1.0 if (c.pred_empty and c.gt_empty) else 0.0
    return num / den


def jaccard(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp + c.fn, c)


def dice(c: ConfusionCounts) -> float:
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, c)


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp, c)


def recall(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn, c)


def f1(c: ConfusionCounts) -> float:
    # 2PR/(P+R) reduces to 2tp/(2tp+fp+fn); the reduced form is exact in floating point
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, c)


def pixel_accuracy(c: ConfusionCounts) -> float:
    return _ratio(c.tp + c.tn, c.total, c)


MASK_METRICS = {
    "jaccard": jaccard,
    "dice": dice,
    "precision": precision,
    "recall": recall,
    "f1": f1,
    "pixel_accuracy": pixel_accuracy,
}


def roc_auc(pred, gt) -> float:
    """Area under the ROC curve of soft scores against a binary ground truth.

    Each distinct score is a threshold (score >= t is positive); the curve
    also includes (0, 0) and (1, 1) and is integrated with the trapezoid rule.
    """
    s = np.asarray(pred, dtype=np.float64).reshape(-1)
    g = _bits(gt).reshape(-1)
    if s.shape != g.shape:
        raise ShapeError(f"score map has {s.size} pixels, ground truth has {g.size}")
    n_pos = int(g.sum())
    n_neg = g.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC AUC needs both positive and negative ground-truth pixels")
    order = np.argsort(-s, kind="stable")
    s, g = s[order], g[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.diff(s) != 0)
    ends = np.append(ends, s.size - 1)
    tps = np.cumsum(g)[ends]
    fps = (ends + 1) - tps
    tpr = np.concatenate([[0.0], tps / n_pos, [1.0]])
    fpr = np.concatenate([[0.0], fps / n_neg, [1.0]])
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


@dataclass(frozen=True)
class MatchResult:
    per_class: dict
    overall: float
    true_positives: int
    predictions: int


def match_detections(preds: Sequence, gts: Sequence, iou_threshold: float = 0.5) -> MatchResult:
    """Greedy detection matching and per-class precision.

    Predictions are visited by descending confidence; each one takes the
    unmatched same-class ground truth with the highest IoU, counting as a
    true positive when that IoU reaches ``iou_threshold``. Ground truths are
    ``Detection2D``-like objects or ``(class_id, box)`` pairs.
    """
    if not 0 < iou_threshold <= 1:
        raise ValidationError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    gt_items = [(g.class_id, g.box) if hasattr(g, "box") else (int(g[0]), tuple(g[1])) for g in gts]
    used = [False] * len(gt_items)
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    tp_by: dict[int, int] = {}
    n_by: dict[int, int] = {}
    for i in order:
        p = preds[i]
        n_by[p.class_id] = n_by.get(p.class_id, 0) + 1
        best, best_j = -1.0, -1
        for j, (cls, box) in enumerate(gt_items):
            if used[j] or cls != p.class_id:
                continue
            iou = bbox_iou(p.box, box)
            if iou > best:
                best, best_j = iou, j
        if best_j >= 0 and best >= iou_threshold:
            used[best_j] = True
            tp_by[p.class_id] = tp_by.get(p.class_id, 0) + 1
    classes = sorted(set(n_by) | {cls for cls, _ in gt_items})
    per_class = {c: (tp_by.get(c, 0) / n_by[c] if n_by.get(c) else 0.0) for c in classes}
    n_tp = sum(tp_by.values())
    if not preds:
        overall = 1.0 if not gt_items else 0.0
    else:
        overall = n_tp / len(preds)
    return MatchResult(per_class, overall, n_tp, len(preds))


def _lower_median(sorted_vals: np.ndarray) -> float:
    return float(sorted_vals[(sorted_vals.size - 1) // 2])


def aggregate(values) -> MetricSummary:
    """Mean, population std, lower median and median absolute deviation."""
    x = np.asarray(list(values), dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("cannot aggregate an empty sequence")
    med = _lower_median(np.sort(x))
    mad = _lower_median(np.sort(np.abs(x - med)))
    return MetricSummary(float(x.mean()), float(x.std()), med, mad)
