"""Altitude-ordered train/holdout partitions for domain-transfer experiments.

Records are sorted by ``(altitude_m, image_id)``. ``BELOW25`` trains on the
lowest quarter of images, ``ABOVE75`` on the highest quarter, and so on; the
holdout is everything else.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .annotations import DatasetManifest
from .errors import EmptyManifest, MissingAltitude, ValidationError


class SplitKind(enum.Enum):
    BELOW25 = ("below", 25)
    BELOW50 = ("below", 50)
    ABOVE50 = ("above", 50)
    ABOVE75 = ("above", 75)

    @property
    def train_percent(self) -> int:
        side, q = self.value
        return q if side == "below" else 100 - q

    @classmethod
    def parse(cls, text: str) -> "SplitKind":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValidationError(f"unknown split kind {text!r}; expected one of {[k.name.lower() for k in cls]}") from None


@dataclass(frozen=True)
class SplitResult:
    train: DatasetManifest
    holdout: DatasetManifest
    threshold_altitude_m: float


def build_split(manifest: DatasetManifest, kind: SplitKind) -> SplitResult:
    if not manifest.records:
        raise EmptyManifest("cannot split an empty manifest")
    for rec in manifest.records:
        if rec.altitude_m is None:
            raise MissingAltitude("record has no altitude_m", image_id=rec.image_id)

    ordered = sorted(manifest.records, key=lambda r: (r.altitude_m, r.image_id))
    n = len(ordered)
    k = max(1, n * kind.train_percent // 100)
    if kind.value[0] == "below":
        train, holdout = ordered[:k], ordered[k:]
        threshold = train[-1].altitude_m
    else:
        train, holdout = ordered[n - k:], ordered[: n - k]
        threshold = train[0].altitude_m

    # both halves keep the input manifest's record order
    train_ids = {r.image_id for r in train}
    return SplitResult(
        train=manifest.with_records(r for r in manifest.records if r.image_id in train_ids),
        holdout=manifest.with_records(r for r in manifest.records if r.image_id not in train_ids),
        threshold_altitude_m=threshold,
    )
