"""Dataset manifest: images, per-image altitude/view metadata, and ground-truth boxes.

Manifests are JSON Lines. An optional first line ``{"classes": {"0": "car", ...}}``
names the classes; every other line is one image::

    {"image_id": "a", "file": "images/a.pgm", "width": 1024, "height": 768,
     "altitude_m": 45.0, "view": "bev", "boxes": [{"cls": 0, "x": 10, "y": 20, "w": 45, "h": 18}]}

Boxes are ``(x_min, y_min, width, height)`` in continuous pixel units with the
origin at the top-left corner; area is ``width * height``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DuplicateImageId, IoError, ParseError, UnknownClassId, ValidationError

VIEWS = ("bev", "oblique", "front", "unknown")


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    width: float
    height: float
    class_id: int = 0

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.width, self.height)
        if not all(math.isfinite(c) for c in coords):
            raise ValidationError(f"box coordinates must be finite: {coords}")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"box width and height must be positive: {coords}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def long_side(self) -> float:
        return max(self.width, self.height)

    def to_json(self) -> dict:
        return {"cls": self.class_id, "x": self.x_min, "y": self.y_min, "w": self.width, "h": self.height}

    @classmethod
    def from_json(cls, data: Mapping) -> "BoundingBox":
        return cls(float(data["x"]), float(data["y"]), float(data["w"]), float(data["h"]), int(data["cls"]))


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    file_path: str
    width_px: int
    height_px: int
    altitude_m: float | None = None
    view: str = "unknown"
    boxes: tuple[BoundingBox, ...] = ()
    # ingest notes (e.g. clipped boxes); not serialized, not part of equality
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "file": self.file_path,
            "width": self.width_px,
            "height": self.height_px,
            "altitude_m": self.altitude_m,
            "view": self.view,
            "boxes": [b.to_json() for b in self.boxes],
        }


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...] = ()
    class_names: Mapping[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.image_id: r for r in self.records}

    def with_records(self, records: Iterable[ImageRecord]) -> "DatasetManifest":
        return DatasetManifest(tuple(records), dict(self.class_names))


def _clip_box(raw: BoundingBox, width: int, height: int) -> BoundingBox | None:
    x0 = min(max(raw.x_min, 0.0), width)
    y0 = min(max(raw.y_min, 0.0), height)
    x1 = min(max(raw.x_max, 0.0), width)
    y1 = min(max(raw.y_max, 0.0), height)
    if x1 <= x0 or y1 <= y0:
        return None
    if (x0, y0, x1, y1) == (raw.x_min, raw.y_min, raw.x_max, raw.y_max):
        return raw
    return BoundingBox(x0, y0, x1 - x0, y1 - y0, raw.class_id)


def _parse_record(obj: dict, lineno: int) -> ImageRecord:
    try:
        image_id = str(obj["image_id"])
        width = int(obj["width"])
        height = int(obj["height"])
        if width <= 0 or height <= 0 or width != obj["width"] or height != obj["height"]:
            raise ValueError(f"image dimensions must be positive integers, got {obj['width']}x{obj['height']}")
        altitude = obj.get("altitude_m")
        if altitude is not None:
            altitude = float(altitude)
            if not math.isfinite(altitude) or altitude < 0:
                raise ValueError(f"altitude_m must be finite and >= 0, got {altitude}")
        view = obj.get("view", "unknown")
        if view not in VIEWS:
            raise ValueError(f"unknown view tag {view!r}")
        raw_boxes = [BoundingBox.from_json(b) for b in obj.get("boxes", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{type(exc).__name__}: {exc}", line=lineno) from exc

    boxes, warnings = [], []
    for i, raw in enumerate(raw_boxes):
        clipped = _clip_box(raw, width, height)
        if clipped is None:
            warnings.append(f"box {i} lies outside the image and was dropped")
        else:
            if clipped is not raw:
                warnings.append(f"box {i} clipped to image bounds")
            boxes.append(clipped)
    return ImageRecord(
        image_id=image_id,
        file_path=str(obj.get("file", "")),
        width_px=width,
        height_px=height,
        altitude_m=altitude,
        view=view,
        boxes=tuple(boxes),
        warnings=tuple(warnings),
    )


def parse_manifest(stream: str | Iterable[str]) -> DatasetManifest:
    """Parse manifest JSON Lines from a string or an iterable of lines.

    Boxes poking out of the image are clipped (noted in ``record.warnings``);
    malformed lines raise :class:`ParseError` carrying the 1-based line number.
    """
    lines = stream.splitlines() if isinstance(stream, str) else stream
    class_names: dict[int, str] | None = None
    records: list[ImageRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", line=lineno)
        if "classes" in obj and "image_id" not in obj:
            if records or class_names is not None:
                raise ParseError("class header must be the first line", line=lineno)
            try:
                class_names = {int(k): str(v) for k, v in obj["classes"].items()}
            except (AttributeError, ValueError) as exc:
                raise ParseError(f"invalid class header: {exc}", line=lineno) from exc
            continue
        record = _parse_record(obj, lineno)
        if record.image_id in seen:
            raise DuplicateImageId(f"line {lineno}: duplicate image_id", image_id=record.image_id)
        seen.add(record.image_id)
        if class_names is not None:
            for box in record.boxes:
                if box.class_id not in class_names:
                    raise UnknownClassId(f"line {lineno}: class id {box.class_id} not in header", image_id=record.image_id)
        records.append(record)

    if class_names is None:
        ids = sorted({b.class_id for r in records for b in r.boxes})
        class_names = {i: str(i) for i in ids}
    return DatasetManifest(tuple(records), class_names)


def dump_manifest(manifest: DatasetManifest) -> str:
    """Serialize to JSON Lines with a class header and a fixed field order."""
    header = {"classes": {str(k): v for k, v in sorted(manifest.class_names.items())}}
    lines = [json.dumps(header)]
    lines.extend(json.dumps(r.to_json()) for r in manifest.records)
    return "\n".join(lines) + "\n"


def read_manifest(path: str | Path) -> DatasetManifest:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    return parse_manifest(text)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    try:
        Path(path).write_text(dump_manifest(manifest))
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def merge_classes(manifest: DatasetManifest, mapping: Mapping[int, int]) -> DatasetManifest:
    """Rewrite box classes through ``mapping``; ids missing from the mapping pass through."""
    records = []
    for rec in manifest.records:
        boxes = tuple(
            replace(b, class_id=mapping.get(b.class_id, b.class_id)) if b.class_id in mapping else b
            for b in rec.boxes
        )
        records.append(replace(rec, boxes=boxes))
    names: dict[int, str] = {}
    for cid, name in sorted(manifest.class_names.items()):
        target = mapping.get(cid, cid)
        names.setdefault(target, manifest.class_names.get(target, name))
    return DatasetManifest(tuple(records), names)


def filter_view(manifest: DatasetManifest, view: str) -> DatasetManifest:
    return manifest.with_records(r for r in manifest.records if r.view == view)
