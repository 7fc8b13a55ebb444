"""Per-image adaptive resize plans.

The reference class (e.g. cars, 4.5 m long) should measure ``reference_px``
pixels on every resized image. That fixes a desired GSD of
``real_long_side_m / reference_px``; an image whose native GSD at its capture
altitude is ``g`` is then rescaled by ``g / desired``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotations import BoundingBox, DatasetManifest
from .camera import CameraProfile, gsd_from_altitude, validate_profile
from .errors import (
    AdaresError,
    DegenerateTarget,
    DimensionMismatch,
    IoError,
    MissingAltitude,
    ParseError,
    ValidationError,
    ZeroAltitude,
)

DEFAULT_BIN_WIDTH_PX = 128


@dataclass(frozen=True)
class ReferenceSpec:
    anchor_class: int = 0
    real_long_side_m: float = 4.5
    reference_px: int = 32

    def __post_init__(self):
        if not self.real_long_side_m > 0:
            raise ValidationError(f"real_long_side_m must be positive, got {self.real_long_side_m}")
        if self.reference_px < 1:
            raise ValidationError(f"reference_px must be >= 1, got {self.reference_px}")


@dataclass(frozen=True)
class ResizePolicy:
    stride: int = 1
    max_upscale: float = 2.0
    max_long_side_px: int = 4096
    min_long_side_px: int = 32

    def __post_init__(self):
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if self.max_upscale < 1:
            raise ValidationError(f"max_upscale must be >= 1, got {self.max_upscale}")
        if not 1 <= self.min_long_side_px <= self.max_long_side_px:
            raise ValidationError(
                f"need 1 <= min_long_side_px <= max_long_side_px, got {self.min_long_side_px}, {self.max_long_side_px}"
            )


@dataclass(frozen=True)
class ResizePlan:
    image_id: str
    scale: float
    target_width_px: int
    target_height_px: int
    source_width_px: int
    source_height_px: int
    clamped: bool = False

    @property
    def scale_x(self) -> float:
        return self.target_width_px / self.source_width_px

    @property
    def scale_y(self) -> float:
        return self.target_height_px / self.source_height_px

    @property
    def target_long_side(self) -> int:
        return max(self.target_width_px, self.target_height_px)

    @property
    def target_pixels(self) -> int:
        return self.target_width_px * self.target_height_px

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "scale": self.scale,
            "target_w": self.target_width_px,
            "target_h": self.target_height_px,
            "source_w": self.source_width_px,
            "source_h": self.source_height_px,
            "clamped": self.clamped,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResizePlan":
        return cls(
            image_id=str(data["image_id"]),
            scale=float(data["scale"]),
            target_width_px=int(data["target_w"]),
            target_height_px=int(data["target_h"]),
            source_width_px=int(data["source_w"]),
            source_height_px=int(data["source_h"]),
            clamped=bool(data.get("clamped", False)),
        )


@dataclass(frozen=True)
class SizeHistogram:
    bin_width_px: int
    bins: tuple[tuple[int, int], ...]
    total_images: int

    def nonzero(self) -> dict[int, int]:
        return {lo: n for lo, n in self.bins if n}

    def to_csv(self) -> str:
        rows = ["bin_lower_px,count"] + [f"{lo},{n}" for lo, n in self.bins]
        return "\n".join(rows) + "\n"


def desired_gsd(spec: ReferenceSpec) -> float:
    """Metres per pixel at which the reference object spans ``reference_px`` pixels."""
    return spec.real_long_side_m / spec.reference_px


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _stride_round(n: float, stride: int) -> int:
    # nearest multiple, ties up, never below one stride
    return max(stride, _round_half_up(n / stride) * stride)


def _dims_for_scale(source: tuple[int, int], scale: float, stride: int) -> tuple[int, int]:
    sw, sh = source
    return (
        _stride_round(_round_half_up(sw * scale), stride),
        _stride_round(_round_half_up(sh * scale), stride),
    )


def plan_from_scale(
    image_id: str, source_dims: tuple[int, int], scale: float, policy: ResizePolicy = ResizePolicy()
) -> ResizePlan:
    """Build a plan for an already-chosen scale, applying the policy's rounding and clamps."""
    sw, sh = source_dims
    if sw < 1 or sh < 1:
        raise ValidationError(f"source dims must be >= 1, got {source_dims}")
    if not (math.isfinite(scale) and scale > 0):
        raise DegenerateTarget(f"scale must be positive and finite, got {scale}")

    clamped = False
    if scale > policy.max_upscale:
        scale, clamped = policy.max_upscale, True
    tw, th = _dims_for_scale(source_dims, scale, policy.stride)

    source_long = max(sw, sh)
    long_side = max(tw, th)
    if long_side > policy.max_long_side_px:
        clamped = True
        scale = policy.max_long_side_px / source_long
        tw, th = (
            max(1, int(math.floor(sw * scale / policy.stride)) * policy.stride),
            max(1, int(math.floor(sh * scale / policy.stride)) * policy.stride),
        )
        if max(tw, th) > policy.max_long_side_px or min(tw, th) < policy.stride:
            raise DegenerateTarget(
                f"cannot fit {source_dims} under max_long_side_px={policy.max_long_side_px} with stride {policy.stride}",
                image_id=image_id,
            )
    elif long_side < policy.min_long_side_px:
        clamped = True
        scale = policy.min_long_side_px / source_long
        tw, th = (
            int(math.ceil(sw * scale / policy.stride - 1e-9)) * policy.stride,
            int(math.ceil(sh * scale / policy.stride - 1e-9)) * policy.stride,
        )
        tw, th = max(tw, policy.stride), max(th, policy.stride)
        if max(tw, th) > policy.max_long_side_px:
            raise DegenerateTarget(
                f"cannot satisfy both side limits for {source_dims} with stride {policy.stride}", image_id=image_id
            )
    if tw < 1 or th < 1:
        raise DegenerateTarget(f"target dims {tw}x{th} are empty", image_id=image_id)
    return ResizePlan(image_id, scale, tw, th, sw, sh, clamped)


def plan_resize(
    profile: CameraProfile,
    altitude: float,
    source_dims: tuple[int, int],
    desired: float,
    policy: ResizePolicy = ResizePolicy(),
    image_id: str = "",
) -> ResizePlan:
    """Plan the resize that brings an image shot at ``altitude`` to the ``desired`` GSD."""
    validate_profile(profile)
    if altitude is None:
        raise MissingAltitude("record has no altitude", image_id=image_id or None)
    if altitude <= 0:
        raise ZeroAltitude(f"altitude must be > 0 to plan a resize, got {altitude}", image_id=image_id or None)
    if not desired > 0:
        raise ValidationError(f"desired GSD must be positive, got {desired}")
    native = gsd_from_altitude(profile, altitude, source_dims[0])
    return plan_from_scale(image_id, source_dims, native / desired, policy)


def plan_longer_edge(image_id: str, source_dims: tuple[int, int], long_side_px: int) -> ResizePlan:
    """Fixed-size baseline: scale so the longer edge equals ``long_side_px``, aspect preserved."""
    scale = long_side_px / max(source_dims)
    policy = ResizePolicy(max_upscale=max(1.0, scale), max_long_side_px=long_side_px, min_long_side_px=1)
    return plan_from_scale(image_id, source_dims, scale, policy)


def size_histogram(plans: Sequence[ResizePlan], bin_width_px: int = DEFAULT_BIN_WIDTH_PX) -> SizeHistogram:
    """Histogram of the longer target edge; bins are contiguous from 0 up to the largest occupied bin."""
    if bin_width_px < 1:
        raise ValidationError(f"bin width must be >= 1, got {bin_width_px}")
    if not plans:
        return SizeHistogram(bin_width_px, (), 0)
    idx = [p.target_long_side // bin_width_px for p in plans]
    counts = np.bincount(idx)
    bins = tuple((i * bin_width_px, int(c)) for i, c in enumerate(counts))
    return SizeHistogram(bin_width_px, bins, len(plans))


def plan_dataset(
    manifest: DatasetManifest,
    profile: CameraProfile,
    spec: ReferenceSpec,
    policy: ResizePolicy = ResizePolicy(),
    bin_width_px: int = DEFAULT_BIN_WIDTH_PX,
    jobs: int = 1,
) -> tuple[list[ResizePlan], SizeHistogram]:
    validate_profile(profile)
    desired = desired_gsd(spec)

    def one(rec):
        try:
            return plan_resize(profile, rec.altitude_m, (rec.width_px, rec.height_px), desired, policy, rec.image_id)
        except AdaresError as exc:
            raise exc if exc.image_id else exc.with_image_id(rec.image_id)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            plans = list(pool.map(one, manifest.records))
    else:
        plans = [one(r) for r in manifest.records]
    return plans, size_histogram(plans, bin_width_px)


def _axis_weights(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # pixel centres aligned: dst pixel j samples source coordinate (j + 0.5) * src / dst - 0.5
    u = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    u = np.clip(u, 0.0, src - 1)
    i0 = np.floor(u).astype(np.intp)
    i1 = np.minimum(i0 + 1, src - 1)
    return i0, i1, u - i0


def bilinear_resize(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Separable bilinear resampling with half-pixel-centre alignment and edge clamping.

    Integer inputs are resampled in float64 and rounded back to their dtype.
    """
    src_h, src_w = image.shape[:2]
    if (src_w, src_h) == (width, height):
        return image.copy()
    data = image.astype(np.float64, copy=False)

    i0, i1, w = _axis_weights(src_h, height)
    w = w.reshape((-1,) + (1,) * (data.ndim - 1))
    a = data[i0]
    rows = a + w * (data[i1] - a)

    j0, j1, w = _axis_weights(src_w, width)
    w = w.reshape((1, -1) + (1,) * (data.ndim - 2))
    a = rows[:, j0]
    out = a + w * (rows[:, j1] - a)

    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(image.dtype)
    return out.astype(image.dtype, copy=False)


def apply_resize(image: np.ndarray, plan: ResizePlan) -> np.ndarray:
    h, w = image.shape[:2]
    if (w, h) != (plan.source_width_px, plan.source_height_px):
        raise DimensionMismatch(
            f"image is {w}x{h} but plan expects {plan.source_width_px}x{plan.source_height_px}",
            image_id=plan.image_id or None,
        )
    return bilinear_resize(image, plan.target_width_px, plan.target_height_px)


def transform_boxes(boxes: Iterable[BoundingBox], plan: ResizePlan) -> list[BoundingBox]:
    """Map source-space boxes onto the resized image (per-axis scaling, no snapping)."""
    sx, sy = plan.scale_x, plan.scale_y
    return [BoundingBox(b.x_min * sx, b.y_min * sy, b.width * sx, b.height * sy, b.class_id) for b in boxes]


def inverse_transform_boxes(boxes: Iterable[BoundingBox], plan: ResizePlan) -> list[BoundingBox]:
    sx, sy = plan.scale_x, plan.scale_y
    return [BoundingBox(b.x_min / sx, b.y_min / sy, b.width / sx, b.height / sy, b.class_id) for b in boxes]


def dump_plans(plans: Iterable[ResizePlan]) -> str:
    return "".join(json.dumps(p.to_json()) + "\n" for p in plans)


def parse_plans(text: str) -> list[ResizePlan]:
    plans = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            plans.append(ResizePlan.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid plan: {exc}", line=lineno) from exc
    return plans


def read_plans(path: str | Path) -> list[ResizePlan]:
    try:
        return parse_plans(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read plans {path}: {exc}") from exc

