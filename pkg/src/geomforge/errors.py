"""Exception types shared across the package."""

from __future__ import annotations


class GeomforgeError(Exception):
    """Base class for all package-specific errors."""


class ParamOutOfRange(GeomforgeError, ValueError):
    """A construction parameter lies outside its documented range."""


class GenerationExhausted(GeomforgeError, RuntimeError):
    """Rejection sampling failed to produce a valid shape within the attempt budget."""

    def __init__(self, kind: str, attempts: int):
        super().__init__(f"no valid {kind} after {attempts} attempts")
        self.kind = kind
        self.attempts = attempts


class DegenerateAngle(GeomforgeError, ValueError):
    """Angle bisector requested at a (near-)collinear vertex."""


class NotTangential(GeomforgeError, ValueError):
    """Angle bisectors are not concurrent: the quadrilateral has no incircle."""


class CanvasOverflow(GeomforgeError, ValueError):
    """Requested raster exceeds the maximum canvas dimension."""


class DimensionMismatch(GeomforgeError, ValueError):
    """Operands have incompatible pixel dimensions."""


class DegenerateResult(GeomforgeError, ValueError):
    """An operation produced a geometrically meaningless result (e.g. <3 vertices)."""


class MalformedSequence(GeomforgeError, ValueError):
    """A polygon token sequence failed to parse.

    `reason` is one of: "unbalanced", "odd_count", "range", "not_integer".
    """

    def __init__(self, reason: str, detail: str = ""):
        msg = f"malformed token sequence ({reason})" + (f": {detail}" if detail else "")
        super().__init__(msg)
        self.reason = reason


class InvalidPolygon(GeomforgeError, ValueError):
    """A polygon is unusable for geometric buffering (e.g. self-intersecting)."""


class NoTemplate(GeomforgeError, KeyError):
    """No referring-expression template exists for a (target kind, level) pair."""


class ManifestMismatch(GeomforgeError, ValueError):
    """A prediction references an id that the ground-truth manifest does not contain."""
