"""Pinhole ground-sample-distance arithmetic for nadir (bird's-eye-view) cameras.

For a fixed camera, the ground footprint of one pixel depends only on the
flight altitude::

    gsd_vertical   = sensor_width_mm  / (focal_length_mm * image_width_px)  * altitude_m
    gsd_horizontal = sensor_height_mm / (focal_length_mm * image_height_px) * altitude_m

Sensor size and focal length are both in millimetres, so the ratio is unitless
and the GSD comes out in metres per pixel. Downstream code plans with the
vertical (width-based) value; :func:`validate_profile` rejects cameras whose
two values would disagree.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import IoError, NonPositiveIntrinsic, NonSquarePixels, ValidationError

SQUARE_PIXEL_TOLERANCE = 1e-3


@dataclass(frozen=True)
class CameraProfile:
    sensor_width_mm: float
    sensor_height_mm: float
    focal_length_mm: float
    native_width_px: int
    native_height_px: int
    name: str = "camera"

    @property
    def pixel_pitch_w(self) -> float:
        """Sensor millimetres per native pixel along the width."""
        return self.sensor_width_mm / self.native_width_px

    @property
    def pixel_pitch_h(self) -> float:
        return self.sensor_height_mm / self.native_height_px

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CameraProfile":
        try:
            return cls(
                sensor_width_mm=float(data["sensor_width_mm"]),
                sensor_height_mm=float(data["sensor_height_mm"]),
                focal_length_mm=float(data["focal_length_mm"]),
                native_width_px=_as_int(data["native_width_px"], "native_width_px"),
                native_height_px=_as_int(data["native_height_px"], "native_height_px"),
                name=str(data.get("name", "camera")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"invalid camera profile: {exc}") from exc


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or float(value) != int(value):
        raise ValueError(f"{field} must be an integer, got {value!r}")
    return int(value)


def validate_profile(profile: CameraProfile) -> CameraProfile:
    """Return ``profile`` unchanged if its intrinsics are usable.

    Raises :class:`NonPositiveIntrinsic` for any non-positive or non-finite
    length or pixel count, and :class:`NonSquarePixels` when the relative
    difference between the two pixel pitches exceeds 1e-3.
    """
    for field in ("sensor_width_mm", "sensor_height_mm", "focal_length_mm"):
        value = getattr(profile, field)
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveIntrinsic(f"{field} must be positive and finite, got {value!r}")
    for field in ("native_width_px", "native_height_px"):
        value = getattr(profile, field)
        if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
            raise NonPositiveIntrinsic(f"{field} must be a positive integer, got {value!r}")

    pw, ph = profile.pixel_pitch_w, profile.pixel_pitch_h
    mismatch = abs(pw - ph) / pw
    if mismatch > SQUARE_PIXEL_TOLERANCE:
        raise NonSquarePixels(
            f"pixel pitch {pw:.6g} mm (width) vs {ph:.6g} mm (height) differs by {mismatch:.2%}"
        )
    return profile


def _check_altitude(altitude: float) -> float:
    altitude = float(altitude)
    if not math.isfinite(altitude) or altitude < 0:
        raise ValidationError(f"altitude must be finite and >= 0, got {altitude!r}")
    return altitude


def _check_width(width_px: int | float) -> None:
    if not width_px > 0:
        raise ValidationError(f"image width must be positive, got {width_px!r}")


def gsd_from_altitude(profile: CameraProfile, altitude: float, image_width_px: int | float) -> float:
    """Vertical GSD in metres/pixel of an image ``image_width_px`` wide shot at ``altitude`` metres."""
    altitude = _check_altitude(altitude)
    _check_width(image_width_px)
    return profile.sensor_width_mm / (profile.focal_length_mm * image_width_px) * altitude


def horizontal_gsd(profile: CameraProfile, altitude: float, image_height_px: int | float) -> float:
    altitude = _check_altitude(altitude)
    _check_width(image_height_px)
    return profile.sensor_height_mm / (profile.focal_length_mm * image_height_px) * altitude


def altitude_from_gsd(profile: CameraProfile, gsd: float, image_width_px: int | float) -> float:
    """Invert :func:`gsd_from_altitude`: the altitude at which one pixel covers ``gsd`` metres."""
    gsd = float(gsd)
    if not math.isfinite(gsd) or gsd < 0:
        raise ValidationError(f"gsd must be finite and >= 0, got {gsd!r}")
    _check_width(image_width_px)
    return gsd * profile.focal_length_mm * image_width_px / profile.sensor_width_mm


def load_camera(path: str | Path) -> CameraProfile:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read camera file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"camera file {path} is not valid JSON: {exc}") from exc
    return validate_profile(CameraProfile.from_dict(data))


def save_camera(profile: CameraProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2) + "\n")
