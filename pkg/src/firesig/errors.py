"""Exception types shared across the package."""


class FiresigError(Exception):
    """Base class for all firesig errors."""


class DegenerateShape(FiresigError):
    """Shape too small or thin to analyse (max chord 0, < 16 pixels, ...)."""


class EmptyMask(DegenerateShape):
    """Mask contains no foreground pixels at all."""


class InsufficientData(FiresigError):
    """Training set too small for the requested forest."""


class DimensionMismatch(FiresigError):
    """Feature vector length does not match the model."""


class NoPlanesFound(FiresigError):
    """Plane segmentation found no candidate above the inlier floor."""


class DegenerateBasis(FiresigError):
    """Cannot build an in-plane chart (normal parallel to gravity on a wall)."""


class EmptyProjection(FiresigError):
    """No cloud point fell on the projected mask foreground."""


class DanglingReference(FiresigError):
    """Scene graph input references an unknown node id."""


class SceneFileError(FiresigError):
    """Scene description file violates the schema.

    ``field`` names the offending entry, e.g. ``patterns[2].scale``.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class MaskFileError(FiresigError):
    """Mask file unreadable or not a supported format."""


class ClipWarning(UserWarning):
    """Mask placement extends beyond the host segment's bounding rectangle."""
