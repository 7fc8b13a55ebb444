"""Altitude-adaptive resizing for bird's-eye-view UAV imagery."""

from .camera import CameraProfile, altitude_from_gsd, gsd_from_altitude, validate_profile
from .planner import (
    ReferenceSpec,
    ResizePlan,
    ResizePolicy,
    apply_resize,
    desired_gsd,
    inverse_transform_boxes,
    plan_dataset,
    plan_resize,
    transform_boxes,
)

__version__ = "0.1.0"

__all__ = [
    "CameraProfile",
    "ReferenceSpec",
    "ResizePlan",
    "ResizePolicy",
    "altitude_from_gsd",
    "apply_resize",
    "desired_gsd",
    "gsd_from_altitude",
    "inverse_transform_boxes",
    "plan_dataset",
    "plan_resize",
    "transform_boxes",
    "validate_profile",
]
