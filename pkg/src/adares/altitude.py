"""Recover per-image GSD and altitude from ground-truth boxes.

When flight logs are missing or too coarse, the boxes themselves tell the
scale: a class of known metric length (cars are ~4.5 m) spanning ``n`` pixels
implies a GSD of ``length / n``. The per-box estimates are pooled with the
lower median and pushed through the inverse GSD relation.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .annotations import BoundingBox, DatasetManifest, ImageRecord
from .camera import CameraProfile, altitude_from_gsd
from .errors import IoError, NoPriorCoveredBox, ValidationError


@dataclass(frozen=True)
class ClassSizePrior:
    class_id: int
    real_long_side_m: float

    def __post_init__(self):
        if not self.real_long_side_m > 0:
            raise ValidationError(f"prior for class {self.class_id} must be positive, got {self.real_long_side_m}")


@dataclass(frozen=True)
class AnnotationReport:
    filled: tuple[str, ...]
    retained: tuple[str, ...]
    failed: tuple[str, ...]


def _prior_map(priors: Iterable[ClassSizePrior]) -> dict[int, float]:
    return {p.class_id: p.real_long_side_m for p in priors}


def estimate_gsd_from_boxes(boxes: Iterable[BoundingBox], priors: Iterable[ClassSizePrior]) -> float:
    sizes = _prior_map(priors)
    per_box = sorted(sizes[b.class_id] / b.long_side for b in boxes if b.class_id in sizes)
    if not per_box:
        raise NoPriorCoveredBox("no box belongs to a class with a size prior")
    return per_box[(len(per_box) - 1) // 2]


def estimate_altitude(record: ImageRecord, profile: CameraProfile, priors: Sequence[ClassSizePrior]) -> float:
    try:
        gsd = estimate_gsd_from_boxes(record.boxes, priors)
    except NoPriorCoveredBox as exc:
        raise exc.with_image_id(record.image_id) from None
    return altitude_from_gsd(profile, gsd, record.width_px)


def annotate_dataset(
    manifest: DatasetManifest,
    profile: CameraProfile,
    priors: Sequence[ClassSizePrior],
    overwrite: bool = False,
    jobs: int = 1,
) -> tuple[DatasetManifest, AnnotationReport]:
    """Fill in missing altitudes (all of them with ``overwrite``).

    Records without any prior-covered box keep their current altitude and are
    listed in ``report.failed``; nothing here raises per record.
    """
    priors = list(priors)

    def one(rec: ImageRecord):
        if rec.altitude_m is not None and not overwrite:
            return rec, "retained"
        try:
            return replace(rec, altitude_m=estimate_altitude(rec, profile, priors)), "filled"
        except NoPriorCoveredBox:
            return rec, "failed"

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, manifest.records))
    else:
        results = [one(r) for r in manifest.records]

    groups: dict[str, list[str]] = {"filled": [], "retained": [], "failed": []}
    for rec, status in results:
        groups[status].append(rec.image_id)
    report = AnnotationReport(tuple(groups["filled"]), tuple(groups["retained"]), tuple(groups["failed"]))
    return manifest.with_records(r for r, _ in results), report


def parse_priors(data: list, class_names: Mapping[int, str] | None = None) -> list[ClassSizePrior]:
    """Priors arrive as ``[{"class": 0 | "car", "meters": 4.5}, ...]``; names resolve via ``class_names``."""
    by_name = {v: k for k, v in (class_names or {}).items()}
    priors = []
    for item in data:
        try:
            cls, meters = item["class"], float(item["meters"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid prior entry {item!r}") from exc
        if isinstance(cls, str) and not cls.isdigit():
            if cls not in by_name:
                raise ValidationError(f"prior names unknown class {cls!r}")
            cls = by_name[cls]
        priors.append(ClassSizePrior(int(cls), meters))
    return priors


def load_priors(path: str | Path, class_names: Mapping[int, str] | None = None) -> list[ClassSizePrior]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read priors {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"priors file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValidationError("priors file must hold a JSON array")
    return parse_priors(data, class_names)
