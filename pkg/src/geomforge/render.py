"""Deterministic scene rasterization, dual-pass masks, TikZ emission.

Geometry is evaluated in pixel space: world coordinates (1 unit = 1 cm)
map through an affine scale of dpi/2.54 with a y-flip.  Antialiasing is
supersample-then-box-downsample: every output pixel averages an s-by-s
grid of point samples, each classified exactly against the stroke
supports.  The canvas is padded symmetrically to a whole number of
inches so pixel dimensions are an exact multiple of the DPI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional

import numpy as np

from . import glyphs
from .errors import CanvasOverflow, ParamOutOfRange
from .geom import Point2
from .raster import BinaryMask, RasterImage
from .scene import (
    Circle,
    Dot,
    ElementId,
    PolygonOutline,
    Scene,
    Segment,
    Target,
    TextLabel,
)

CM_PER_INCH = 2.54
MAX_CANVAS_PX = 4096
DEFAULT_TAU = 50.0

# density of the point-sample grid inside each output pixel
DEFAULT_SUPERSAMPLE = 4

# stroke chunks this long (output px) keep bounding boxes tight on
# diagonal strokes, so only a thin band of samples is ever evaluated
CHUNK_LEN_PX = 48.0

# joins sharper than this ratio of miter length to stroke half-width
# fall back to a bevel, matching common vector-stroke semantics
MITER_LIMIT = 4.0

DOT_RADIUS_FACTOR = 1.5  # filled-dot radius in stroke widths

RGB = tuple[int, int, int]


@dataclass(frozen=True)
class RenderStyle:
    dpi: int = 300
    supersample_factor: int = DEFAULT_SUPERSAMPLE
    ink: RGB = (0, 0, 0)
    background: RGB = (255, 255, 255)
    highlight: RGB = (255, 0, 0)

    def __post_init__(self):
        if not 72 <= self.dpi <= 600:
            raise ParamOutOfRange(f"dpi {self.dpi} outside [72, 600]")
        if int(self.dpi) != self.dpi:
            raise ParamOutOfRange("dpi must be an integer pixel density")
        if self.supersample_factor < 1:
            raise ParamOutOfRange("supersample_factor must be >= 1")
        for name in ("ink", "background", "highlight"):
            rgb = getattr(self, name)
            if len(rgb) != 3 or any(not 0 <= c <= 255 for c in rgb):
                raise ParamOutOfRange(f"{name} must be an RGB triple in 0..255")


@dataclass(frozen=True)
class _Frame:
    """Canvas placement: world window and the world-to-pixel transform."""

    width_px: int
    height_px: int
    wx0: float  # world x of the left canvas edge
    wy1: float  # world y of the top canvas edge
    scale: float  # px per world unit

    def to_px(self, p: Point2) -> tuple[float, float]:
        return ((p.x - self.wx0) * self.scale, (self.wy1 - p.y) * self.scale)


def _canvas_frame(scene: Scene, style: RenderStyle,
                  max_px: int = MAX_CANVAS_PX) -> _Frame:
    x0, y0, x1, y1 = scene.canvas
    if not (x1 > x0 and y1 > y0):
        raise ParamOutOfRange(f"degenerate canvas {scene.canvas}")
    w_in = max(1, math.ceil((x1 - x0) / CM_PER_INCH - 1e-9))
    h_in = max(1, math.ceil((y1 - y0) / CM_PER_INCH - 1e-9))
    width_px = w_in * style.dpi
    height_px = h_in * style.dpi
    if width_px > max_px or height_px > max_px:
        raise CanvasOverflow(
            f"{width_px}x{height_px} px exceeds the {max_px} px canvas cap")
    pad_x = (w_in * CM_PER_INCH - (x1 - x0)) / 2.0
    pad_y = (h_in * CM_PER_INCH - (y1 - y0)) / 2.0
    return _Frame(width_px=width_px, height_px=height_px,
                  wx0=x0 - pad_x, wy1=y1 + pad_y,
                  scale=style.dpi / CM_PER_INCH)


# ---------------------------------------------------------------------------
# sample-point membership predicates, evaluated over small pixel boxes

Chunk = tuple[float, float, float, float, "object"]  # bbox + predicate


def _grid(ix0: int, iy0: int, ix1: int, iy1: int, s: int):
    """Sample-point coordinates (pixel units) for pixel box [ix0,ix1)x[iy0,iy1)."""
    xs = ix0 + (np.arange((ix1 - ix0) * s) + 0.5) / s
    ys = iy0 + (np.arange((iy1 - iy0) * s) + 0.5) / s
    return xs[None, :], ys[:, None]


def _capsule_pred(a, b, hw):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    len2 = dx * dx + dy * dy
    hw2 = hw * hw

    def pred(xs, ys):
        if len2 < 1e-18:
            return (xs - ax) ** 2 + (ys - ay) ** 2 <= hw2
        t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / len2, 0.0, 1.0)
        ex = ax + t * dx - xs
        ey = ay + t * dy - ys
        return ex * ex + ey * ey <= hw2

    return pred


def _capsule_chunks(a, b, hw) -> Iterator[Chunk]:
    ax, ay = a
    bx, by = b
    length = math.hypot(bx - ax, by - ay)
    n = max(1, math.ceil(length / CHUNK_LEN_PX))
    for i in range(n):
        t0, t1 = i / n, (i + 1) / n
        cx0, cy0 = ax + (bx - ax) * t0, ay + (by - ay) * t0
        cx1, cy1 = ax + (bx - ax) * t1, ay + (by - ay) * t1
        yield (min(cx0, cx1) - hw, min(cy0, cy1) - hw,
               max(cx0, cx1) + hw, max(cy0, cy1) + hw,
               _capsule_pred((cx0, cy0), (cx1, cy1), hw))


def _annulus_chunks(c, r, hw) -> Iterator[Chunk]:
    cx, cy = c
    r_out = r + hw
    r_in = max(r - hw, 0.0)
    out2, in2 = r_out * r_out, r_in * r_in

    def pred(xs, ys):
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        return (d2 >= in2) & (d2 <= out2)

    # horizontal slabs; each contributes the box(es) the ring passes through
    slab = 32.0
    y = cy - r_out
    while y < cy + r_out:
        y0, y1 = y, min(y + slab, cy + r_out)
        y = y1
        dy_min = 0.0 if y0 <= cy <= y1 else min(abs(y0 - cy), abs(y1 - cy))
        dy_max = max(abs(y0 - cy), abs(y1 - cy))
        half = math.sqrt(max(out2 - dy_min * dy_min, 0.0))
        if half <= 0.0:
            continue
        hole = math.sqrt(max(in2 - dy_max * dy_max, 0.0))
        if hole > 1.0:
            yield (cx - half, y0, cx - hole + 1.0, y1, pred)
            yield (cx + hole - 1.0, y0, cx + half, y1, pred)
        else:
            yield (cx - half, y0, cx + half, y1, pred)


def _disk_chunks(c, r) -> Iterator[Chunk]:
    cx, cy = c
    r2 = r * r

    def pred(xs, ys):
        return (xs - cx) ** 2 + (ys - cy) ** 2 <= r2

    yield (cx - r, cy - r, cx + r, cy + r, pred)


def _quad_pred(corners):
    n = len(corners)
    # orientation from the signed area so the half-plane tests agree
    area2 = 0.0
    for i in range(n):
        x0, y0 = corners[i]
        x1, y1 = corners[(i + 1) % n]
        area2 += x0 * y1 - x1 * y0
    sign = 1.0 if area2 >= 0.0 else -1.0

    def pred(xs, ys):
        inside = None
        for i in range(n):
            x0, y0 = corners[i]
            x1, y1 = corners[(i + 1) % n]
            cr = sign * ((x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0))
            ok = cr >= 0.0
            inside = ok if inside is None else (inside & ok)
        return inside

    return pred


def _quad_chunks(outer_a, outer_b, inner_b, inner_a) -> Iterator[Chunk]:
    """Convex band piece between an outer and an inner offset edge."""
    length = math.hypot(outer_b[0] - outer_a[0], outer_b[1] - outer_a[1])
    n = max(1, math.ceil(length / CHUNK_LEN_PX))

    def lerp(p, q, t):
        return (p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t)

    for i in range(n):
        t0, t1 = i / n, (i + 1) / n
        corners = (lerp(outer_a, outer_b, t0), lerp(outer_a, outer_b, t1),
                   lerp(inner_a, inner_b, t1), lerp(inner_a, inner_b, t0))
        xs = [p[0] for p in corners]
        ys = [p[1] for p in corners]
        yield (min(xs), min(ys), max(xs), max(ys), _quad_pred(corners))


def _line_meet(n1, c1, n2, c2):
    """Intersection of lines n1.p = c1 and n2.p = c2."""
    det = n1[0] * n2[1] - n1[1] * n2[0]
    if abs(det) < 1e-12:
        raise ParamOutOfRange("outline has parallel adjacent edges")
    x = (c1 * n2[1] - c2 * n1[1]) / det
    y = (n1[0] * c2 - n2[0] * c1) / det
    return (x, y)


def _outline_chunks(points, hw) -> Iterator[Chunk]:
    """Closed convex outline stroked with miter joins and a bevel fallback.

    One rectangle per edge covers the band along the edge; each vertex
    contributes a join piece on the outer side, a quad reaching the
    miter point when the join is blunt enough and a bevel triangle past
    the miter limit.  The union of the pieces is exactly the stroked
    region; overlaps near inner corners are harmless under OR.
    """
    n = len(points)
    gx = sum(p[0] for p in points) / n
    gy = sum(p[1] for p in points) / n
    normals = []
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        elen = math.hypot(ex, ey)
        if elen < 1e-12:
            raise ParamOutOfRange("outline has a zero-length edge")
        nx, ny = ey / elen, -ex / elen
        if nx * (x0 - gx) + ny * (y0 - gy) < 0.0:
            nx, ny = -nx, -ny
        normals.append((nx, ny))
    for i in range(n):
        p0, p1 = points[i], points[(i + 1) % n]
        nx, ny = normals[i]
        yield from _quad_chunks((p0[0] + nx * hw, p0[1] + ny * hw),
                                (p1[0] + nx * hw, p1[1] + ny * hw),
                                (p1[0] - nx * hw, p1[1] - ny * hw),
                                (p0[0] - nx * hw, p0[1] - ny * hw))
    for i in range(n):
        vx, vy = points[i]
        npx, npy = normals[i - 1]
        nnx, nny = normals[i]
        o_prev = (vx + npx * hw, vy + npy * hw)
        o_next = (vx + nnx * hw, vy + nny * hw)
        meet = _line_meet((npx, npy), npx * vx + npy * vy + hw,
                          (nnx, nny), nnx * vx + nny * vy + hw)
        if math.hypot(meet[0] - vx, meet[1] - vy) <= MITER_LIMIT * hw:
            corners = (o_prev, meet, o_next, (vx, vy))
        else:
            corners = (o_prev, o_next, (vx, vy))
        xs = [p[0] for p in corners]
        ys = [p[1] for p in corners]
        yield (min(xs), min(ys), max(xs), max(ys), _quad_pred(corners))


def _element_chunks(el_primitive, scene: Scene, frame: _Frame) -> Iterator[Chunk]:
    hw = 0.5 * scene.stroke_width * frame.scale
    prim = el_primitive
    if isinstance(prim, Segment):
        yield from _capsule_chunks(frame.to_px(prim.p1), frame.to_px(prim.p2), hw)
    elif isinstance(prim, PolygonOutline):
        yield from _outline_chunks([frame.to_px(p) for p in prim.points], hw)
    elif isinstance(prim, Circle):
        yield from _annulus_chunks(frame.to_px(prim.center),
                                   prim.radius * frame.scale, hw)
    elif isinstance(prim, Dot):
        yield from _disk_chunks(frame.to_px(prim.p),
                                DOT_RADIUS_FACTOR * scene.stroke_width
                                * frame.scale)
    elif isinstance(prim, TextLabel):
        ghw = 0.5 * glyphs.STROKE_WIDTH_CM * frame.scale
        for a, b in glyphs.text_strokes(prim.text, prim.anchor, prim.placement):
            yield from _capsule_chunks(frame.to_px(a), frame.to_px(b), ghw)
    else:
        raise TypeError(f"unknown primitive {type(prim).__name__}")


# ---------------------------------------------------------------------------
# support accumulation and shading


class _RasterState:
    """Per-(scene, style) sample-point tallies shared by both passes."""

    def __init__(self, frame: _Frame, s: int,
                 union_counts: np.ndarray,
                 element_counts: dict):
        self.frame = frame
        self.s = s
        self.s2 = s * s
        self.union_counts = union_counts  # (H, W) uint16
        self.element_counts = element_counts  # id -> (iy0, ix0, uint16 array)


def _pixel_box(bx0, by0, bx1, by1, frame: _Frame):
    ix0 = max(0, math.floor(bx0))
    iy0 = max(0, math.floor(by0))
    ix1 = min(frame.width_px, math.ceil(bx1))
    iy1 = min(frame.height_px, math.ceil(by1))
    return ix0, iy0, ix1, iy1


@lru_cache(maxsize=2)
def _rasterize(scene: Scene, style: RenderStyle, max_px: int) -> _RasterState:
    frame = _canvas_frame(scene, style, max_px)
    s = style.supersample_factor
    union_super = np.zeros((frame.height_px * s, frame.width_px * s),
                           dtype=bool)
    element_counts: dict = {}
    for el in scene.elements:
        boxes = []
        chunks = []
        for bx0, by0, bx1, by1, pred in _element_chunks(el.primitive, scene,
                                                        frame):
            box = _pixel_box(bx0, by0, bx1, by1, frame)
            if box[0] >= box[2] or box[1] >= box[3]:
                continue
            boxes.append(box)
            chunks.append((box, pred))
        if not boxes:
            continue
        ex0 = min(b[0] for b in boxes)
        ey0 = min(b[1] for b in boxes)
        ex1 = max(b[2] for b in boxes)
        ey1 = max(b[3] for b in boxes)
        local = np.zeros(((ey1 - ey0) * s, (ex1 - ex0) * s), dtype=bool)
        for (ix0, iy0, ix1, iy1), pred in chunks:
            xs, ys = _grid(ix0, iy0, ix1, iy1, s)
            hit = pred(xs, ys)
            local[(iy0 - ey0) * s:(iy1 - ey0) * s,
                  (ix0 - ex0) * s:(ix1 - ex0) * s] |= hit
        counts = local.reshape(ey1 - ey0, s, ex1 - ex0, s).sum(
            axis=(1, 3), dtype=np.uint16)
        element_counts[el.id] = (ey0, ex0, counts)
        union_super[ey0 * s:ey1 * s, ex0 * s:ex1 * s] |= local
    union_counts = union_super.reshape(frame.height_px, s,
                                       frame.width_px, s).sum(
        axis=(1, 3), dtype=np.uint16)
    return _RasterState(frame, s, union_counts, element_counts)


def _shade(numerator: np.ndarray, s2: int) -> np.ndarray:
    """Round-half-up of numerator/s2 where numerator sums 0..255 values."""
    return ((2 * numerator + s2) // (2 * s2)).astype(np.uint8)


def render_pass(scene: Scene, style: RenderStyle,
                highlight: Optional[Target] = None,
                max_px: int = MAX_CANVAS_PX) -> RasterImage:
    """Rasterize one pass; the highlighted target, if any, is drawn last."""
    state = _rasterize(scene, style, max_px)
    u = state.union_counts.astype(np.int32)
    s2 = state.s2
    if highlight is not None:
        if scene.find(highlight.element_id) is None:
            raise ValueError(f"target {highlight.element_id} not in scene")
        t = np.zeros_like(u)
        entry = state.element_counts.get(highlight.element_id)
        if entry is not None:
            iy0, ix0, counts = entry
            h, w = counts.shape
            t[iy0:iy0 + h, ix0:ix0 + w] = counts
    else:
        t = np.zeros_like(u)
    white = s2 - u
    black = u - t
    channels = []
    for c in range(3):
        num = (style.background[c] * white + style.ink[c] * black
               + style.highlight[c] * t)
        channels.append(_shade(num, s2))
    return RasterImage.from_array(np.stack(channels, axis=-1))


def render_scene(scene: Scene, style: RenderStyle,
                 max_px: int = MAX_CANVAS_PX) -> RasterImage:
    """Main pass: every element in ink on the background color."""
    return render_pass(scene, style, highlight=None, max_px=max_px)


def channel_mask(img: RasterImage, tau: float = DEFAULT_TAU) -> BinaryMask:
    """Per-pixel red-excess test: 1 where R - G/2 - B/2 > tau."""
    px = img.pixels.astype(np.int16)
    excess2 = 2 * px[..., 0] - px[..., 1] - px[..., 2]
    return BinaryMask.from_array((excess2 > 2.0 * tau).astype(np.uint8))


def render_mask(scene: Scene, target: Target, style: RenderStyle,
                tau: float = DEFAULT_TAU,
                max_px: int = MAX_CANVAS_PX) -> BinaryMask:
    """Dual-pass ground truth: target in highlight red, rest in ink."""
    if tuple(style.highlight) != (255, 0, 0):
        raise ParamOutOfRange("mask pass requires a pure red highlight")
    img = render_pass(scene, style, highlight=target, max_px=max_px)
    return channel_mask(img, tau)


def render_sample(scene: Scene, targets: Iterable[Target], style: RenderStyle,
                  tau: float = DEFAULT_TAU,
                  max_px: int = MAX_CANVAS_PX
                  ) -> tuple[RasterImage, dict[str, BinaryMask]]:
    """Main image plus one mask per target, sharing one rasterization."""
    image = render_scene(scene, style, max_px=max_px)
    masks = {str(t.element_id): render_mask(scene, t, style, tau, max_px)
             for t in targets}
    return image, masks


# ---------------------------------------------------------------------------
# TikZ emission


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def emit_tikz(scene: Scene) -> str:
    """Standalone TikZ source for the scene (vector-format twin)."""
    width = f"{scene.stroke_width:g}cm"
    names: dict[Point2, str] = {}
    lines = [
        r"\documentclass{standalone}",
        r"\usepackage{tikz}",
        r"\usetikzlibrary{angles, quotes}",
        r"\usepackage{tkz-euclide}",
        "",
        r"\begin{document}",
        r"\begin{tikzpicture}",
    ]
    if scene.shape_meta is not None:
        for label, vertex in zip(scene.shape_meta.labels,
                                 scene.shape_meta.vertices):
            names[vertex] = label
            lines.append(rf"  \coordinate ({label}) at "
                         rf"({_fmt(vertex.x)}, {_fmt(vertex.y)});")
        lines.append("")

    def ref(p: Point2) -> str:
        if p in names:
            return f"({names[p]})"
        return f"({_fmt(p.x)}, {_fmt(p.y)})"

    for el in scene.elements:
        prim = el.primitive
        if isinstance(prim, PolygonOutline):
            path = " -- ".join(ref(p) for p in prim.points)
            lines.append(rf"  \draw[line width={width}, black] {path} -- cycle;")
        elif isinstance(prim, Segment):
            lines.append(rf"  \draw[line width={width}, black] "
                         rf"{ref(prim.p1)} -- {ref(prim.p2)};")
        elif isinstance(prim, Circle):
            lines.append(rf"  \draw[line width={width}, black] "
                         rf"({_fmt(prim.center.x)}, {_fmt(prim.center.y)}) "
                         rf"circle [radius={_fmt(prim.radius)}];")
        elif isinstance(prim, Dot):
            lines.append(rf"  \fill[black] ({_fmt(prim.p.x)}, {_fmt(prim.p.y)}) "
                         rf"circle [radius={_fmt(DOT_RADIUS_FACTOR * scene.stroke_width)}];")
        elif isinstance(prim, TextLabel):
            lines.append(rf"  \node[{prim.placement}] at {ref(prim.anchor)} "
                         rf"{{{prim.text}}};")
    lines.append(r"\end{tikzpicture}")
    lines.append(r"\end{document}")
    return "\n".join(lines) + "\n"
