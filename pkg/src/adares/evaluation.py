"""Average precision at fixed IoU thresholds (AP50, AP70, ...).

Matching is greedy by descending score; each detection claims the unmatched
ground-truth box it overlaps most, and counts as a true positive when that
overlap reaches the threshold. Flags are pooled per class across all images,
sorted globally by score, and integrated with all-point interpolation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotations import BoundingBox, DatasetManifest
from .errors import IoError, ParseError, UnknownImageId, ValidationError


@dataclass(frozen=True)
class Detection:
    image_id: str
    box: BoundingBox
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValidationError(f"score must lie in [0, 1], got {self.score}")

    def to_json(self) -> dict:
        b = self.box
        return {"image_id": self.image_id, "cls": b.class_id, "x": b.x_min, "y": b.y_min, "w": b.width, "h": b.height,
                "score": self.score}

    @classmethod
    def from_json(cls, data: dict) -> "Detection":
        box = BoundingBox(float(data["x"]), float(data["y"]), float(data["w"]), float(data["h"]), int(data["cls"]))
        return cls(str(data["image_id"]), box, float(data["score"]))


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class EvalReport:
    per_class_ap: dict[tuple[int, float], float]
    mean_ap: dict[float, float]
    counts: dict[tuple[int, float], ClassCounts]
    class_names: dict[int, str] = field(default_factory=dict)

    def ap(self, iou_threshold: float, class_id: int | None = None) -> float:
        if class_id is None:
            return self.mean_ap[iou_threshold]
        return self.per_class_ap[(class_id, iou_threshold)]

    def to_json(self) -> dict:
        per_class: dict[str, dict[str, dict]] = {}
        for (cls, thr), ap in sorted(self.per_class_ap.items()):
            c = self.counts[(cls, thr)]
            per_class.setdefault(str(cls), {})[_thr_key(thr)] = {"ap": ap, "tp": c.tp, "fp": c.fp, "fn": c.fn}
        return {
            "mean_ap": {_thr_key(t): v for t, v in sorted(self.mean_ap.items())},
            "per_class": per_class,
            "class_names": {str(k): v for k, v in sorted(self.class_names.items())},
        }

    def table(self) -> str:
        thresholds = sorted(self.mean_ap)
        header = ["class"] + [f"AP{round(t * 100)}" for t in thresholds]
        rows = []
        for cls in sorted({c for c, _ in self.per_class_ap}):
            name = self.class_names.get(cls, str(cls))
            rows.append([name] + [f"{self.per_class_ap[(cls, t)]:.4f}" for t in thresholds])
        rows.append(["mean"] + [f"{self.mean_ap[t]:.4f}" for t in thresholds])
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        fmt = lambda r: "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths)))
        return "\n".join([fmt(header)] + [fmt(r) for r in rows]) + "\n"


def _thr_key(t: float) -> str:
    return f"{t:g}"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # corner subtraction can overshoot the true extent by an ulp
    return min(1.0, inter / (a.area + b.area - inter))


def _score_order(dets: Sequence[Detection]) -> list[int]:
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].image_id, i))


def match_detections(
    dets: Sequence[Detection], gts: Sequence[BoundingBox], iou_threshold: float
) -> list[tuple[Detection, bool]]:
    """Greedy one-to-one matching; returns ``(detection, is_tp)`` in descending score order.

    All inputs are assumed to come from the same image and class.
    """
    free = list(range(len(gts)))
    out = []
    for i in _score_order(dets):
        det = dets[i]
        best, best_iou = None, -1.0
        for g in free:
            v = iou(det.box, gts[g])
            if v > best_iou:
                best, best_iou = g, v
        hit = best is not None and best_iou >= iou_threshold
        if hit:
            free.remove(best)
        out.append((det, hit))
    return out


def average_precision(flags: Sequence[bool], n_gt: int) -> float:
    """All-point interpolated AP: area under the monotone precision envelope."""
    if n_gt <= 0 or len(flags) == 0:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    fp = np.cumsum(1.0 - np.asarray(flags, dtype=np.float64))
    recall = tp / n_gt
    precision = tp / (tp + fp)
    mrec = np.concatenate(([0.0], recall))
    mpre = np.concatenate(([0.0], precision))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    return float(np.sum((mrec[1:] - mrec[:-1]) * mpre[1:]))


def evaluate(
    dets: Iterable[Detection], manifest: DatasetManifest, thresholds: Sequence[float] = (0.5, 0.7)
) -> EvalReport:
    dets = list(dets)
    records = manifest.by_id()
    for d in dets:
        if d.image_id not in records:
            raise UnknownImageId("detection refers to an image missing from the manifest", image_id=d.image_id)

    # (class, image) -> boxes / detections
    gts: dict[int, dict[str, list[BoundingBox]]] = {}
    for rec in manifest.records:
        for b in rec.boxes:
            gts.setdefault(b.class_id, {}).setdefault(rec.image_id, []).append(b)
    by_cls: dict[int, dict[str, list[Detection]]] = {}
    for d in dets:
        by_cls.setdefault(d.box.class_id, {}).setdefault(d.image_id, []).append(d)

    classes = sorted(set(gts) | set(by_cls))
    per_class_ap: dict[tuple[int, float], float] = {}
    counts: dict[tuple[int, float], ClassCounts] = {}
    mean_ap: dict[float, float] = {}
    for thr in thresholds:
        thr = float(thr)
        scored = []
        for cls in classes:
            pooled: list[tuple[Detection, bool]] = []
            cls_gts = gts.get(cls, {})
            for image_id, image_dets in by_cls.get(cls, {}).items():
                pooled.extend(match_detections(image_dets, cls_gts.get(image_id, []), thr))
            pooled.sort(key=lambda m: (-m[0].score, m[0].image_id))
            flags = [hit for _, hit in pooled]
            n_gt = sum(len(v) for v in cls_gts.values())
            ap = average_precision(flags, n_gt)
            per_class_ap[(cls, thr)] = ap
            tp = sum(flags)
            counts[(cls, thr)] = ClassCounts(tp=tp, fp=len(flags) - tp, fn=n_gt - tp)
            if n_gt > 0:
                scored.append(ap)
        mean_ap[thr] = float(np.mean(scored)) if scored else 0.0
    return EvalReport(per_class_ap, mean_ap, counts, dict(manifest.class_names))


def dump_detections(dets: Iterable[Detection]) -> str:
    return "".join(json.dumps(d.to_json()) + "\n" for d in dets)


def parse_detections(text: str) -> list[Detection]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(Detection.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid detection: {exc}", line=lineno) from exc
    return out


def read_detections(path: str | Path) -> list[Detection]:
    try:
        return parse_detections(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read detections {path}: {exc}") from exc
