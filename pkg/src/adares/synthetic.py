"""Synthetic nadir scenes with exact ground truth, plus a deliberately scale-narrow detector.

Scenes are flat backgrounds with bright axis-aligned rectangles whose pixel
size follows from the camera, the altitude, and the metric object size. The
reference detector only accepts blobs within a fixed pixel-size window, so it
works on a corpus exactly when the corpus has been brought to a single scale.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from .annotations import BoundingBox, DatasetManifest, ImageRecord, write_manifest
from .camera import CameraProfile, gsd_from_altitude, save_camera, validate_profile
from .errors import ObjectTooLargeForFrame, PlacementOverflow, ValidationError
from .evaluation import Detection
from .raster import write_pgm

# 10.24 mm x 7.68 mm sensor, 10 mm lens, 1024 x 768 pixels: GSD = altitude / 1000
PSYN = CameraProfile(10.24, 7.68, 10.0, 1024, 768, name="psyn")

MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SceneConfig:
    profile: CameraProfile = PSYN
    image_dims: tuple[int, int] = (1024, 768)
    object_real_dims_m: Mapping[int, tuple[float, float]] = field(default_factory=lambda: {0: (4.5, 1.8)})
    class_names: Mapping[int, str] = field(default_factory=lambda: {0: "car"})
    objects_per_image: tuple[int, int] = (1, 4)
    background_level: float = 0.2
    object_level: float = 0.8
    noise_sigma: float = 0.02
    # free ground between objects, so blobs stay separate after any resize
    min_gap_m: float = 0.5
    seed: int = 0

    def __post_init__(self):
        validate_profile(self.profile)
        if min(self.image_dims) < 64:
            raise ValidationError(f"image dims must be >= 64, got {self.image_dims}")
        if self.object_level - self.background_level < 0.3:
            raise ValidationError("object_level must exceed background_level by at least 0.3")
        if not (0 <= self.background_level <= 1 and 0 <= self.object_level <= 1):
            raise ValidationError("intensity levels must lie in [0, 1]")
        lo, hi = self.objects_per_image
        if not 0 <= lo <= hi:
            raise ValidationError(f"invalid objects_per_image range {self.objects_per_image}")
        if self.noise_sigma < 0 or self.min_gap_m < 0:
            raise ValidationError("noise_sigma and min_gap_m must be non-negative")
        if not self.object_real_dims_m:
            raise ValidationError("need at least one object class")


@dataclass(frozen=True)
class DetectorConfig:
    intensity_threshold: float = 0.5
    min_long_side_px: int = 16
    max_long_side_px: int = 64
    connectivity: int = 8

    def __post_init__(self):
        if not 0 < self.intensity_threshold < 1:
            raise ValidationError(f"intensity_threshold must lie in (0, 1), got {self.intensity_threshold}")
        if not 1 <= self.min_long_side_px <= self.max_long_side_px:
            raise ValidationError("need 1 <= min_long_side_px <= max_long_side_px")
        if self.connectivity not in (4, 8):
            raise ValidationError(f"connectivity must be 4 or 8, got {self.connectivity}")

    @property
    def reference_mid(self) -> float:
        return (self.min_long_side_px + self.max_long_side_px) / 2


@dataclass(frozen=True)
class AltitudeSampler:
    kind: str  # "uniform" or "fixed"
    low: float = 0.0
    high: float = 0.0
    values: tuple[float, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "AltitudeSampler":
        """``uniform:10:110`` or ``fixed:45,100`` (a bare ``45,100`` also means fixed)."""
        head, _, rest = text.partition(":")
        try:
            if head == "uniform":
                lo, hi = (float(v) for v in rest.split(":"))
                if not 0 < lo <= hi:
                    raise ValueError("need 0 < low <= high")
                return cls("uniform", lo, hi)
            values = tuple(float(v) for v in (rest if head in ("fixed", "list") else text).split(","))
            if not values or min(values) <= 0:
                raise ValueError("altitudes must be positive")
            return cls("fixed", values=values)
        except ValueError as exc:
            raise ValidationError(f"bad altitude sampler {text!r}: {exc}") from None

    def sample(self, n: int, seed: int) -> list[float]:
        if self.kind == "uniform":
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
            return [float(a) for a in rng.uniform(self.low, self.high, size=n)]
        return [self.values[i % len(self.values)] for i in range(n)]


def scene_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, index)))


def scene_id(index: int) -> str:
    return f"scene_{index:05d}"


def _place(rng, frame, size, gap, placed):
    W, H = frame
    w, h = size
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        x = int(rng.integers(0, W - w + 1))
        y = int(rng.integers(0, H - h + 1))
        if all(
            x + w + gap <= px or px + pw + gap <= x or y + h + gap <= py or py + ph + gap <= y
            for px, py, pw, ph in placed
        ):
            return x, y
    return None


def generate_scene(config: SceneConfig, altitude: float, index: int = 0) -> tuple[np.ndarray, ImageRecord]:
    """Render one scene; output depends only on ``(config, altitude, index)``."""
    rng = scene_rng(config.seed, index)
    W, H = config.image_dims
    gsd = gsd_from_altitude(config.profile, altitude, W)
    if gsd <= 0:
        raise ValidationError(f"altitude must be positive, got {altitude}")
    gap = int(math.ceil(config.min_gap_m / gsd))
    classes = sorted(config.object_real_dims_m)

    lo, hi = config.objects_per_image
    n_objects = int(rng.integers(lo, hi + 1))
    placed: list[tuple[int, int, int, int]] = []
    boxes: list[BoundingBox] = []
    for _ in range(n_objects):
        cls = classes[int(rng.integers(len(classes)))]
        long_m, short_m = config.object_real_dims_m[cls]
        w = max(1, int(round(long_m / gsd)))
        h = max(1, int(round(short_m / gsd)))
        if rng.integers(2):
            w, h = h, w
        if w > W or h > H:
            raise ObjectTooLargeForFrame(
                f"{w}x{h} px object does not fit a {W}x{H} frame at {altitude} m", image_id=scene_id(index)
            )
        spot = _place(rng, (W, H), (w, h), gap, placed)
        if spot is None:
            raise PlacementOverflow(
                f"could not place object {len(placed) + 1} of {n_objects} after {MAX_PLACEMENT_ATTEMPTS} attempts",
                image_id=scene_id(index),
            )
        placed.append((*spot, w, h))
        boxes.append(BoundingBox(float(spot[0]), float(spot[1]), float(w), float(h), cls))

    canvas = np.full((H, W), config.background_level, dtype=np.float64)
    for x, y, w, h in placed:
        canvas[y:y + h, x:x + w] = config.object_level
    if config.noise_sigma > 0:
        canvas += rng.normal(0.0, config.noise_sigma, size=canvas.shape)
    raster = np.rint(np.clip(canvas, 0.0, 1.0) * 255).astype(np.uint8)

    sid = scene_id(index)
    record = ImageRecord(sid, f"images/{sid}.pgm", W, H, float(altitude), "bev", tuple(boxes))
    return raster, record


def generate_corpus(
    config: SceneConfig,
    altitudes: AltitudeSampler | str | Sequence[float],
    n_images: int,
    out_dir: str | Path | None = None,
    jobs: int = 1,
) -> tuple[DatasetManifest, list[np.ndarray]]:
    """Generate ``n_images`` scenes; with ``out_dir``, also write images/*.pgm, manifest.jsonl and camera.json."""
    if n_images < 1:
        raise ValidationError(f"n_images must be >= 1, got {n_images}")
    if isinstance(altitudes, str):
        altitudes = AltitudeSampler.parse(altitudes)
    if isinstance(altitudes, AltitudeSampler):
        alts = altitudes.sample(n_images, config.seed)
    else:
        alts = [float(a) for a in altitudes]
        alts = [alts[i % len(alts)] for i in range(n_images)]

    def one(i):
        return generate_scene(config, alts[i], i)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            scenes = list(pool.map(one, range(n_images)))
    else:
        scenes = [one(i) for i in range(n_images)]

    manifest = DatasetManifest(tuple(r for _, r in scenes), dict(config.class_names))
    rasters = [img for img, _ in scenes]
    if out_dir is not None:
        out = Path(out_dir)
        (out / "images").mkdir(parents=True, exist_ok=True)
        for img, rec in scenes:
            write_pgm(out / rec.file_path, img)
        write_manifest(manifest, out / "manifest.jsonl")
        save_camera(config.profile, out / "camera.json")
    return manifest, rasters


def _structure(connectivity: int) -> np.ndarray:
    return ndimage.generate_binary_structure(2, 2 if connectivity == 8 else 1)


def reference_detector(
    image: np.ndarray, config: DetectorConfig = DetectorConfig(), image_id: str = "", class_id: int = 0
) -> list[Detection]:
    """Threshold, label connected components, and keep blobs whose long side is in the size window.

    ``uint8`` images are read as ``value / 255``. The score peaks at the middle
    of the window and is floored at 0.01.
    """
    level = config.intensity_threshold * 255 if image.dtype == np.uint8 else config.intensity_threshold
    labels, _ = ndimage.label(image > level, structure=_structure(config.connectivity))
    mid = config.reference_mid
    dets = []
    for sl in ndimage.find_objects(labels):
        if sl is None:
            continue
        ys, xs = sl
        w, h = xs.stop - xs.start, ys.stop - ys.start
        long_side = max(w, h)
        if not config.min_long_side_px <= long_side <= config.max_long_side_px:
            continue
        score = max(0.01, 1.0 - abs(long_side - mid) / mid)
        box = BoundingBox(float(xs.start), float(ys.start), float(w), float(h), class_id)
        dets.append(Detection(image_id, box, score))
    return dets


def calibrate_detector(
    long_sides: Iterable[float], margin: float = 1.25, intensity_threshold: float = 0.5, connectivity: int = 8
) -> DetectorConfig:
    """Fit the detector's size window to observed object sizes.

    This is the desk-scale stand-in for training: the detector learns the
    range of pixel sizes present in its training split, widened by ``margin``,
    and nothing outside it.
    """
    sizes = list(long_sides)
    if not sizes:
        raise ValidationError("cannot calibrate a detector without any boxes")
    lo = max(1, int(math.floor(min(sizes) / margin)))
    hi = max(lo, int(math.ceil(max(sizes) * margin)))
    return DetectorConfig(intensity_threshold, lo, hi, connectivity)
