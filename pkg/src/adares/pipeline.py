"""End-to-end stages chained by the CLI and the experiment scripts."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .annotations import DatasetManifest, ImageRecord
from .camera import CameraProfile
from .errors import UnknownImageId
from .evaluation import Detection, EvalReport, evaluate
from .planner import (
    ReferenceSpec,
    ResizePlan,
    ResizePolicy,
    apply_resize,
    inverse_transform_boxes,
    plan_dataset,
    plan_longer_edge,
    transform_boxes,
)
from .raster import read_pgm
from .synthetic import DetectorConfig, calibrate_detector, reference_detector

ImageSource = Callable[[ImageRecord], np.ndarray]


def file_source(root: str | Path) -> ImageSource:
    """Load each record's raster from ``root / record.file_path``."""
    root = Path(root)
    return lambda rec: read_pgm(root / rec.file_path)


def list_source(manifest: DatasetManifest, rasters: Sequence[np.ndarray]) -> ImageSource:
    index = {r.image_id: img for r, img in zip(manifest.records, rasters)}
    return lambda rec: index[rec.image_id]


def adaptive_plans(
    manifest: DatasetManifest, profile: CameraProfile, spec: ReferenceSpec, policy: ResizePolicy = ResizePolicy()
) -> list[ResizePlan]:
    return plan_dataset(manifest, profile, spec, policy)[0]


def fixed_plans(manifest: DatasetManifest, long_side_px: int) -> list[ResizePlan]:
    return [plan_longer_edge(r.image_id, (r.width_px, r.height_px), long_side_px) for r in manifest.records]


def identity_plan(record: ImageRecord) -> ResizePlan:
    w, h = record.width_px, record.height_px
    return ResizePlan(record.image_id, 1.0, w, h, w, h, False)


def plans_by_id(plans: Sequence[ResizePlan]) -> dict[str, ResizePlan]:
    return {p.image_id: p for p in plans}


def detect_record(
    image: np.ndarray, record: ImageRecord, plan: ResizePlan, config: DetectorConfig, class_id: int = 0
) -> list[Detection]:
    """Resize, detect, and map detections back to the original image frame."""
    resized = apply_resize(image, plan)
    found = reference_detector(resized, config, record.image_id, class_id)
    boxes = inverse_transform_boxes([d.box for d in found], plan)
    return [Detection(d.image_id, b, d.score) for d, b in zip(found, boxes)]


def run_detection(
    manifest: DatasetManifest,
    source: ImageSource,
    plans: Sequence[ResizePlan] | None,
    config: DetectorConfig,
    class_id: int = 0,
    jobs: int = 1,
) -> list[Detection]:
    """Detections for every record, in manifest order. ``plans=None`` means no resizing."""
    lookup = plans_by_id(plans) if plans is not None else {}

    def one(rec):
        if plans is None:
            plan = identity_plan(rec)
        elif rec.image_id in lookup:
            plan = lookup[rec.image_id]
        else:
            raise UnknownImageId("no resize plan for record", image_id=rec.image_id)
        return detect_record(source(rec), rec, plan, config, class_id)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            per_image = list(pool.map(one, manifest.records))
    else:
        per_image = [one(r) for r in manifest.records]
    return [d for dets in per_image for d in dets]


def resized_long_sides(manifest: DatasetManifest, plans: Sequence[ResizePlan]) -> list[float]:
    """Ground-truth long sides as they appear after each record's resize."""
    lookup = plans_by_id(plans)
    return [b.long_side for r in manifest.records for b in transform_boxes(r.boxes, lookup[r.image_id])]


def train_and_evaluate(
    train: DatasetManifest,
    test: DatasetManifest,
    plans: Sequence[ResizePlan],
    source: ImageSource,
    thresholds: Sequence[float] = (0.5,),
    margin: float = 1.25,
) -> tuple[DetectorConfig, EvalReport]:
    """Calibrate the size window on ``train`` (in resized space), then evaluate on ``test``."""
    config = calibrate_detector(resized_long_sides(train, plans), margin)
    dets = run_detection(test, source, plans, config)
    return config, evaluate(dets, test, thresholds)
