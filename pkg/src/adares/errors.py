"""Exception hierarchy.

Every error carries an ``exit_code`` that the CLI maps straight to its process
exit status (2 for data/validation problems, 3 for I/O problems).
"""

from __future__ import annotations


class AdaresError(Exception):
    exit_code = 2

    def __init__(self, message: str = "", *, image_id: str | None = None):
        self.image_id = image_id or None
        if image_id and not message.startswith(f"{image_id}:"):
            message = f"{image_id}: {message}" if message else image_id
        super().__init__(message)

    def with_image_id(self, image_id: str) -> "AdaresError":
        """Return a copy of this error annotated with the offending image."""
        err = type(self).__new__(type(self))
        AdaresError.__init__(err, str(self), image_id=image_id)
        for key, value in vars(self).items():
            if key != "image_id":
                setattr(err, key, value)
        return err


class ValidationError(AdaresError, ValueError):
    exit_code = 2


class NonPositiveIntrinsic(ValidationError):
    pass


class NonSquarePixels(ValidationError):
    pass


class ZeroAltitude(ValidationError):
    pass


class DegenerateTarget(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str = "", *, line: int | None = None, image_id: str | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, image_id=image_id)


class DuplicateImageId(ValidationError):
    pass


class UnknownClassId(ValidationError):
    pass


class NoPriorCoveredBox(ValidationError):
    pass


class MissingAltitude(ValidationError):
    pass


class EmptyManifest(ValidationError):
    pass


class UnknownImageId(ValidationError):
    pass


class ObjectTooLargeForFrame(ValidationError):
    pass


class PlacementOverflow(ValidationError):
    pass


class EmptyPlans(ValidationError):
    pass


class IoError(AdaresError, OSError):
    exit_code = 3
