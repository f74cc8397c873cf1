"""Binary-mask morphology, thinning, and elastic deformation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, ParamOutOfRange
from .raster import BinaryMask, RasterImage

ELASTIC_ALPHA = 2.0  # default displacement amplitude, px
ELASTIC_SIGMA = 8.0  # default smoothing kernel width, px

TRAIN_DILATION_RADII = (2, 3, 4)  # per-sample training-mask dilation choices


@dataclass(frozen=True)
class StructuringElement:
    """Euclidean disk on the integer grid."""

    radius: int

    def __post_init__(self):
        if self.radius < 1 or int(self.radius) != self.radius:
            raise ParamOutOfRange("disk radius must be an integer >= 1")

    def contains(self, dy: int, dx: int) -> bool:
        return dy * dy + dx * dx <= self.radius * self.radius

    def offsets(self) -> list:
        r = self.radius
        return [(dy, dx)
                for dy in range(-r, r + 1)
                for dx in range(-r, r + 1)
                if dy * dy + dx * dx <= r * r]


def _require_radius(r) -> None:
    if r < 0:
        raise ParamOutOfRange(f"radius {r} must be >= 0")


def dilate(m: BinaryMask, r) -> BinaryMask:
    """Foreground grows to every pixel within Euclidean distance r."""
    _require_radius(r)
    fg = m.bits.astype(bool)
    if r == 0 or not fg.any():
        return BinaryMask.from_array(fg.astype(np.uint8))
    dist = ndimage.distance_transform_edt(~fg)
    return BinaryMask.from_array((dist <= r).astype(np.uint8))


def erode(m: BinaryMask, r) -> BinaryMask:
    """Foreground shrinks by r; pixels outside the frame count as background."""
    _require_radius(r)
    fg = m.bits.astype(bool)
    if r == 0:
        return BinaryMask.from_array(fg.astype(np.uint8))
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    dist = ndimage.distance_transform_edt(padded)
    return BinaryMask.from_array((dist[1:-1, 1:-1] > r).astype(np.uint8))


def close(m: BinaryMask, r) -> BinaryMask:
    return erode(dilate(m, r), r)


_PHASES = ((0, 0), (0, 1), (1, 0), (1, 1))


def _deletable(fg: np.ndarray, first_subiter: bool) -> np.ndarray:
    """Zhang-Suen deletion test evaluated on every pixel at once."""
    p = np.pad(fg, 1, mode="constant", constant_values=False)
    p2 = p[:-2, 1:-1]
    p3 = p[:-2, 2:]
    p4 = p[1:-1, 2:]
    p5 = p[2:, 2:]
    p6 = p[2:, 1:-1]
    p7 = p[2:, :-2]
    p8 = p[1:-1, :-2]
    p9 = p[:-2, :-2]
    ring = (p2, p3, p4, p5, p6, p7, p8, p9)
    b = sum(n.astype(np.uint8) for n in ring)
    a = sum(((~ring[i]) & ring[(i + 1) % 8]).astype(np.uint8)
            for i in range(8))
    cond = fg & (b >= 2) & (b <= 6) & (a == 1)
    if first_subiter:
        cond &= ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
    else:
        cond &= ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
    return cond


def thin(m: BinaryMask) -> BinaryMask:
    """Two-subiteration grid thinning run to a fixed point.

    Within each subiteration, deletions are serialized over the four
    classes of a 2x2 pixel coloring.  Same-class pixels are never
    8-adjacent, so each batch of deletions is equivalent to deleting
    one simple point at a time, which keeps every component connected
    and never removes a component outright (a known hazard of fully
    simultaneous deletion on 2x2 blobs).
    """
    fg = m.bits.astype(bool).copy()
    h, w = fg.shape
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    changed = True
    while changed:
        changed = False
        for first in (True, False):
            for py, px in _PHASES:
                phase = ((rows % 2) == py) & ((cols % 2) == px)
                kill = _deletable(fg, first) & phase
                if kill.any():
                    fg &= ~kill
                    changed = True
    return BinaryMask.from_array(fg.astype(np.uint8))


@dataclass(frozen=True)
class ElasticField:
    """Smooth per-pixel displacement with bounded amplitude."""

    dx: np.ndarray
    dy: np.ndarray
    alpha: float
    sigma: float

    def __post_init__(self):
        if self.dx.shape != self.dy.shape:
            raise DimensionMismatch("dx and dy must have identical shape")
        magnitude = np.hypot(self.dx, self.dy)
        if magnitude.size and float(magnitude.max()) > self.alpha + 1e-9:
            raise ParamOutOfRange("displacement exceeds the field amplitude")


def make_elastic_field(shape, rng: np.random.Generator,
                       alpha: float = ELASTIC_ALPHA,
                       sigma: float = ELASTIC_SIGMA) -> ElasticField:
    """Gaussian-smoothed uniform noise rescaled to peak amplitude alpha."""
    dx = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, size=shape), sigma)
    dy = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, size=shape), sigma)
    peak = float(np.hypot(dx, dy).max())
    if peak > 0.0:
        dx = dx * (alpha / peak)
        dy = dy * (alpha / peak)
    return ElasticField(dx=dx, dy=dy, alpha=alpha, sigma=sigma)


def elastic_deform(img: RasterImage, masks, field: ElasticField):
    """Warp the image (bilinear) and its masks (nearest) by one field."""
    shape = (img.height_px, img.width_px)
    if field.dx.shape != shape:
        raise DimensionMismatch(
            f"field {field.dx.shape} does not match image {shape}")
    for m in masks:
        if (m.height_px, m.width_px) != shape:
            raise DimensionMismatch(
                f"mask {(m.height_px, m.width_px)} does not match image {shape}")
    yy, xx = np.meshgrid(np.arange(shape[0], dtype=float),
                         np.arange(shape[1], dtype=float), indexing="ij")
    coords = [yy + field.dy, xx + field.dx]
    channels = [ndimage.map_coordinates(img.pixels[..., c].astype(float),
                                        coords, order=1, mode="constant",
                                        cval=255.0)
                for c in range(3)]
    warped_img = RasterImage.from_array(
        np.clip(np.rint(np.stack(channels, axis=-1)), 0, 255).astype(np.uint8))
    warped_masks = [
        BinaryMask.from_array(
            ndimage.map_coordinates(m.bits, coords, order=0, mode="constant",
                                    cval=0).astype(np.uint8))
        for m in masks]
    return warped_img, warped_masks
