"""Segmentation evaluation measures: region J, contour F, J&F, IoU variants,
Precision@K, and grouped report assembly.

Aggregation is done on pooled integer pixel counts, so results do not depend
on the order in which frames or instances are scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .masks import as_mask, boundary, dilate, intersection_union, iou

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


class LengthMismatch(ValueError):
    """Prediction and ground-truth sequences differ in length."""


class EmptySequence(ValueError):
    """An aggregate was requested over zero items."""


EmptyList = EmptySequence


def default_tolerance(height: int, width: int) -> int:
    """Boundary matching radius: ceil(0.8% of the image diagonal), at least 1."""
    return max(1, math.ceil(0.008 * math.hypot(height, width)))


def region_j(pred: np.ndarray, gt: np.ndarray) -> float:
    """Region similarity J, the intersection over union of the two masks."""
    return iou(pred, gt)


def contour_f(pred: np.ndarray, gt: np.ndarray, tolerance: int) -> float:
    """Contour accuracy F: boundary precision/recall F-measure under a
    Chebyshev pixel tolerance.

    1.0 when both boundaries are empty, 0.0 when exactly one is.
    """
    pred = as_mask(pred)
    gt = as_mask(gt)
    if pred.shape != gt.shape:
        raise LengthMismatch(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    pred_b = boundary(pred)
    gt_b = boundary(gt)
    n_pred = int(pred_b.sum())
    n_gt = int(gt_b.sum())
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    precision = int((pred_b & dilate(gt_b, tolerance)).sum()) / n_pred
    recall = int((gt_b & dilate(pred_b, tolerance)).sum()) / n_gt
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class JFScore:
    mean_j: float
    mean_f: float
    jf: float


def jf_instance(
    preds: Sequence[np.ndarray], gts: Sequence[np.ndarray], tolerance: int
) -> JFScore:
    """Per-instance J&F: frame-mean J, frame-mean F, and their average."""
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise EmptySequence("no frames to score")
    js = [region_j(p, g) for p, g in zip(preds, gts)]
    fs = [contour_f(p, g, tolerance) for p, g in zip(preds, gts)]
    mean_j = float(np.mean(js))
    mean_f = float(np.mean(fs))
    return JFScore(mean_j=mean_j, mean_f=mean_f, jf=(mean_j + mean_f) / 2)


def overall_iou(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> float:
    """Dataset-pooled IoU: summed intersections over summed unions."""
    if not pairs:
        raise EmptySequence("no mask pairs")
    inter = 0
    union = 0
    for pred, gt in pairs:
        i, u = intersection_union(pred, gt)
        inter += i
        union += u
    if union == 0:
        return 1.0
    return inter / union


def mean_iou(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]], grouping: Sequence[str]
) -> float:
    """Unweighted mean over instances of the per-instance pooled IoU.

    `grouping` assigns each pair to its instance; an instance's frames are
    pooled before averaging across instances.
    """
    if not pairs:
        raise EmptySequence("no mask pairs")
    if len(grouping) != len(pairs):
        raise LengthMismatch(f"{len(pairs)} pairs vs {len(grouping)} group ids")
    counts: dict[str, list[int]] = {}
    order: list[str] = []
    for (pred, gt), key in zip(pairs, grouping):
        i, u = intersection_union(pred, gt)
        if key not in counts:
            counts[key] = [0, 0]
            order.append(key)
        counts[key][0] += i
        counts[key][1] += u
    ious = [_pooled_iou(*counts[key]) for key in order]
    return float(np.mean(ious))


def _pooled_iou(inter: int, union: int) -> float:
    return 1.0 if union == 0 else inter / union


def precision_at(
    instance_ious: Sequence[float], thresholds: Sequence[float] = DEFAULT_THRESHOLDS
) -> dict[float, float]:
    """Fraction of instances whose IoU strictly exceeds each threshold."""
    if not instance_ious:
        raise EmptySequence("no instance IoUs")
    for k in thresholds:
        if not 0 < k < 1:
            raise ValueError(f"threshold must be in (0, 1), got {k}")
    n = len(instance_ious)
    return {k: sum(v > k for v in instance_ious) / n for k in thresholds}


@dataclass(frozen=True)
class InstanceResult:
    """Scores for one evaluated (instance, phrase): per-frame J and F plus
    pooled pixel counts for the IoU aggregates."""

    instance_id: str
    frame_j: tuple[float, ...]
    frame_f: tuple[float, ...]
    intersection: int
    union: int

    @property
    def mean_j(self) -> float:
        return float(np.mean(self.frame_j))

    @property
    def mean_f(self) -> float:
        return float(np.mean(self.frame_f))

    @property
    def jf(self) -> float:
        return (self.mean_j + self.mean_f) / 2

    @property
    def iou(self) -> float:
        return _pooled_iou(self.intersection, self.union)


def score_instance(
    instance_id: str,
    preds: Sequence[np.ndarray],
    gts: Sequence[np.ndarray],
    tolerance: int,
) -> InstanceResult:
    """Score one instance's frame sequence against its ground truth."""
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise EmptySequence("no frames to score")
    js = []
    fs = []
    inter = 0
    union = 0
    for pred, gt in zip(preds, gts):
        js.append(region_j(pred, gt))
        fs.append(contour_f(pred, gt, tolerance))
        i, u = intersection_union(pred, gt)
        inter += i
        union += u
    return InstanceResult(
        instance_id=instance_id,
        frame_j=tuple(js),
        frame_f=tuple(fs),
        intersection=inter,
        union=union,
    )


@dataclass(frozen=True)
class InstanceScore:
    mean_j: float
    mean_f: float
    jf: float
    iou: float


@dataclass
class EvalReport:
    """Aggregate scores plus optional per-group sub-reports."""

    per_instance: dict[str, InstanceScore]
    overall_iou: float
    mean_iou: float
    precision_at: dict[float, float]
    groups: dict[str, "EvalReport"] = field(default_factory=dict)

    def validate(self) -> None:
        for iid, score in self.per_instance.items():
            if abs(score.jf - (score.mean_j + score.mean_f) / 2) > 1e-12:
                raise ValueError(f"jf inconsistent for {iid}")
            for v in (score.mean_j, score.mean_f, score.jf, score.iou):
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"score out of [0,1] for {iid}: {v}")
        for v in (self.overall_iou, self.mean_iou, *self.precision_at.values()):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"aggregate out of [0,1]: {v}")
        for sub in self.groups.values():
            sub.validate()

    def to_json(self) -> dict:
        doc = {
            "per_instance": {
                iid: {
                    "mean_j": s.mean_j,
                    "mean_f": s.mean_f,
                    "jf": s.jf,
                    "iou": s.iou,
                }
                for iid, s in self.per_instance.items()
            },
            "overall_iou": self.overall_iou,
            "mean_iou": self.mean_iou,
            "precision_at": {str(k): v for k, v in self.precision_at.items()},
        }
        if self.groups:
            doc["groups"] = {label: sub.to_json() for label, sub in self.groups.items()}
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "EvalReport":
        return cls(
            per_instance={
                iid: InstanceScore(**vals) for iid, vals in doc["per_instance"].items()
            },
            overall_iou=doc["overall_iou"],
            mean_iou=doc["mean_iou"],
            precision_at={float(k): v for k, v in doc["precision_at"].items()},
            groups={
                label: cls.from_json(sub) for label, sub in doc.get("groups", {}).items()
            },
        )


def build_report(
    results: Sequence[InstanceResult],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> EvalReport:
    """Assemble an EvalReport (no groups) from scored instances."""
    if not results:
        raise EmptySequence("no results to report")
    per_instance = {
        r.instance_id: InstanceScore(mean_j=r.mean_j, mean_f=r.mean_f, jf=r.jf, iou=r.iou)
        for r in results
    }
    inter = sum(r.intersection for r in results)
    union = sum(r.union for r in results)
    report = EvalReport(
        per_instance=per_instance,
        overall_iou=_pooled_iou(inter, union),
        mean_iou=float(np.mean([r.iou for r in results])),
        precision_at=precision_at([r.iou for r in results], thresholds),
    )
    report.validate()
    return report


def grouped_report(
    results: Sequence[InstanceResult],
    group_fn: Callable[[InstanceResult], Iterable[str]],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> EvalReport:
    """Top-level report over all results plus one sub-report per group label.

    A result may belong to any number of groups; labels with no members are
    simply absent from the output.
    """
    report = build_report(results, thresholds)
    members: dict[str, list[InstanceResult]] = {}
    for result in results:
        for label in group_fn(result):
            members.setdefault(label, []).append(result)
    report.groups = {
        label: build_report(group, thresholds) for label, group in members.items()
    }
    return report
