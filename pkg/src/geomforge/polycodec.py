"""Polygon mask codec: contours, simplification, tokens, RLE baseline.

Pixel-space convention: pixel (row i, col j) sits at coordinate (j, i)
(its center), occupying [j-0.5, j+0.5] x [i-0.5, i+0.5]; the y axis
points down (row direction).  Coordinate (0, 0) is the first pixel and
(width-1, height-1) the last, matching the token quantization range.
Tracing follows the cracks between foreground and background with
foreground on the left, then emits the midpoint of each crack edge as
a vertex; filling tests pixel centers with the even-odd rule, closure
inclusive (a center exactly on the boundary is foreground, so the
full-frame polygon covers the full frame).  Mid-crack loops keep every
foreground center strictly inside and every background center strictly
outside, so extract -> rasterize reproduces the mask exactly before
any simplification or quantization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResult, MalformedSequence, ParamOutOfRange
from .geom import Point2
from .raster import BinaryMask

THIN_TARGET_DILATION = 2  # thin masks get representable area before tracing

SEG_OPEN = "<seg>"
SEG_CLOSE = "</seg>"

COORD_MAX = 255


@dataclass(frozen=True)
class Contour:
    """Closed vertex loop; closure is implicit (first vertex not repeated)."""

    points: tuple
    is_hole: bool = False

    def __post_init__(self):
        if len(self.points) < 3:
            raise DegenerateResult("contour needs at least 3 vertices")


@dataclass(frozen=True)
class QuantizedPolygon:
    """Vertex loop with both coordinates quantized to integers in [0, 255]."""

    vertices: tuple  # of (x, y) integer pairs

    def __post_init__(self):
        if not self.vertices:
            raise ParamOutOfRange("quantized polygon has no vertices")
        for x, y in self.vertices:
            if not (0 <= x <= COORD_MAX and 0 <= y <= COORD_MAX):
                raise ParamOutOfRange(f"coordinate ({x}, {y}) outside [0, 255]")


@dataclass(frozen=True)
class RleMask:
    """Alternating run lengths, background first, row-major."""

    runs: tuple
    width_px: int
    height_px: int

    def __post_init__(self):
        if sum(self.runs) != self.width_px * self.height_px:
            raise ParamOutOfRange("run lengths must sum to width x height")
        if any(r < 0 for r in self.runs):
            raise ParamOutOfRange("run lengths must be non-negative")


# ---------------------------------------------------------------------------
# contour extraction (crack following)

# outgoing crack directions ranked right, straight, left, back relative
# to the incoming direction; the right-hand preference keeps diagonally
# touching foreground pixels on a single boundary loop (8-connected
# foreground, 4-connected background)
_RIGHT_OF = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
_LEFT_OF = {v: k for k, v in _RIGHT_OF.items()}


def _boundary_edges(fg: np.ndarray) -> dict:
    """Directed cracks with foreground on the left, keyed by start corner."""
    h, w = fg.shape
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    edges: dict = {}

    def add(y0, x0, y1, x1):
        edges.setdefault((x0, y0), []).append((x1, y1))

    # north side exposed: walk west along y=i from (j+1, i) to (j, i)
    ii, jj = np.nonzero(fg & ~padded[:-2, 1:-1])
    for i, j in zip(ii.tolist(), jj.tolist()):
        add(i, j + 1, i, j)
    # south side exposed: walk east along y=i+1
    ii, jj = np.nonzero(fg & ~padded[2:, 1:-1])
    for i, j in zip(ii.tolist(), jj.tolist()):
        add(i + 1, j, i + 1, j + 1)
    # west side exposed: walk south along x=j
    ii, jj = np.nonzero(fg & ~padded[1:-1, :-2])
    for i, j in zip(ii.tolist(), jj.tolist()):
        add(i, j, i + 1, j)
    # east side exposed: walk north along x=j+1
    ii, jj = np.nonzero(fg & ~padded[1:-1, 2:])
    for i, j in zip(ii.tolist(), jj.tolist()):
        add(i + 1, j + 1, i, j + 1)
    return edges


def _signed_area2(points) -> float:
    total = 0.0
    for k in range(len(points)):
        x0, y0 = points[k]
        x1, y1 = points[(k + 1) % len(points)]
        total += x0 * y1 - x1 * y0
    return total


def _compress_collinear(loop):
    out = []
    n = len(loop)
    for k in range(n):
        x0, y0 = loop[k - 1]
        x1, y1 = loop[k]
        x2, y2 = loop[(k + 1) % n]
        if (x1 - x0) * (y2 - y1) != (y1 - y0) * (x2 - x1):
            out.append(loop[k])
    return out


def _midcrack(loop):
    """Midpoints of consecutive corner pairs, in pixel-center coordinates.

    Mid-crack vertices track the region boundary with half the staircase
    amplitude of the corner lattice (a 45-degree edge becomes exactly
    straight), which roughly halves the polygon fitting error after
    simplification while keeping pixel centers strictly off the loop.
    The corner lattice has pixel (i, j) spanning corners (j, i) to
    (j+1, i+1); shifting by half a pixel lands in center coordinates.
    """
    n = len(loop)
    return [((loop[k][0] + loop[(k + 1) % n][0]) / 2.0 - 0.5,
             (loop[k][1] + loop[(k + 1) % n][1]) / 2.0 - 0.5)
            for k in range(n)]


def extract_contours(m: BinaryMask) -> list:
    """Boundary loops of the mask: outer contours and flagged holes."""
    fg = m.bits.astype(bool)
    if not fg.any():
        return []
    edges = _boundary_edges(fg)
    contours = []
    # deterministic start order: sorted corner, then sorted first step
    for start in sorted(edges):
        while edges.get(start):
            step = min(edges[start])
            loop = [start]
            prev, cur = start, step
            edges[start].remove(step)
            while cur != start:
                loop.append(cur)
                din = (cur[0] - prev[0], cur[1] - prev[1])
                outs = edges.get(cur, ())
                chosen = None
                for d in (_RIGHT_OF[din], din, _LEFT_OF[din]):
                    nxt = (cur[0] + d[0], cur[1] + d[1])
                    if nxt in outs:
                        chosen = nxt
                        break
                if chosen is None:
                    raise AssertionError("boundary tracing broke a loop")
                edges[cur].remove(chosen)
                prev, cur = cur, chosen
            loop = _compress_collinear(_midcrack(loop))
            # foreground-on-left tracing winds outers negative in
            # y-down coordinates
            is_hole = _signed_area2(loop) > 0
            contours.append(Contour(points=tuple(Point2(float(x), float(y))
                                                 for x, y in loop),
                                    is_hole=is_hole))
    contours.sort(key=lambda c: (c.is_hole, min((p.y, p.x) for p in c.points)))
    return contours


# ---------------------------------------------------------------------------
# Douglas-Peucker simplification on closed loops


def _point_segment_dist(p, a, b) -> float:
    px, py = p.x - a.x, p.y - a.y
    bx, by = b.x - a.x, b.y - a.y
    len2 = bx * bx + by * by
    if len2 == 0.0:
        return float(np.hypot(px, py))
    t = min(1.0, max(0.0, (px * bx + py * by) / len2))
    return float(np.hypot(a.x + t * bx - p.x, a.y + t * by - p.y))


def _dp_open(points, eps):
    """Keep-flags for an open chain; endpoints always kept."""
    n = len(points)
    keep = [False] * n
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        best_d, best_k = -1.0, None
        for k in range(lo + 1, hi):
            d = _point_segment_dist(points[k], points[lo], points[hi])
            if d > best_d:
                best_d, best_k = d, k
        if best_d > eps:
            keep[best_k] = True
            stack.append((lo, best_k))
            stack.append((best_k, hi))
    return keep


def _fit_line(pts):
    """Total-least-squares line: (centroid, unit direction)."""
    arr = np.asarray(pts, dtype=float)
    centroid = arr.mean(axis=0)
    centered = arr - centroid
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    return centroid, vecs[:, -1]


def _line_cross(c1, d1, c2, d2):
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-9:
        return None
    t = ((c2[0] - c1[0]) * d2[1] - (c2[1] - c1[1]) * d2[0]) / det
    return (c1[0] + t * d1[0], c1[1] + t * d1[1])


def _refit_vertices(pts, kept_idx, eps):
    """Recenter kept vertices on least-squares fits of their edge spans.

    Vertex-subset chords sit off the boundary midline by up to the full
    staircase amplitude; fitting each retained edge through all of the
    original points it replaces removes that bias.  Junctions that the
    fit would move more than max(1, eps) px keep their original spot.
    """
    m = len(kept_idx)
    n = len(pts)
    lines = []
    for a in range(m):
        i0, i1 = kept_idx[a], kept_idx[(a + 1) % m]
        span = range(i0, i1 + 1) if i1 > i0 else [*range(i0, n), *range(0, i1 + 1)]
        seg = [(pts[k].x, pts[k].y) for k in span]
        if len(seg) < 3:
            p, q = seg[0], seg[-1]
            d = np.array([q[0] - p[0], q[1] - p[1]], dtype=float)
            norm = np.hypot(*d)
            lines.append((np.array(p, dtype=float),
                          d / norm if norm else np.array([1.0, 0.0])))
        else:
            lines.append(_fit_line(seg))
    limit = max(1.0, eps)
    out = []
    for a in range(m):
        anchor = pts[kept_idx[a]]
        c1, d1 = lines[a - 1]
        c2, d2 = lines[a]
        hit = _line_cross(c1, d1, c2, d2)
        if hit is None or np.hypot(hit[0] - anchor.x, hit[1] - anchor.y) > limit:
            out.append(anchor)
        else:
            out.append(Point2(float(hit[0]), float(hit[1])))
    return out


def simplify(c: Contour, eps: float) -> Contour:
    """Douglas-Peucker on the closed loop; split at the two farthest anchors.

    Retained edges are then refit by total least squares over the points
    they span (skipped at eps=0, which only drops exactly-collinear
    vertices and must return a vertex subset).
    """
    if eps < 0:
        raise ParamOutOfRange("epsilon must be >= 0")
    pts = list(c.points)
    n = len(pts)
    far = max(range(1, n),
              key=lambda k: (pts[k].x - pts[0].x) ** 2
              + (pts[k].y - pts[0].y) ** 2)
    first = pts[:far + 1]
    second = pts[far:] + [pts[0]]
    keep_first = _dp_open(first, eps)
    keep_second = _dp_open(second, eps)
    kept_idx = [k for k in range(far + 1) if keep_first[k]]
    kept_idx += [far + k for k in range(1, n - far) if keep_second[k]]
    if len(kept_idx) < 3:
        raise DegenerateResult(
            f"simplification at eps={eps} leaves {len(kept_idx)} vertices")
    if eps > 0:
        kept = _refit_vertices(pts, kept_idx, eps)
    else:
        kept = [pts[k] for k in kept_idx]
    return Contour(points=tuple(kept), is_hole=c.is_hole)


# ---------------------------------------------------------------------------
# quantization


def _axis_quant(value: float, size_px: int) -> int:
    q = int(np.floor(value * COORD_MAX / (size_px - 1) + 0.5))
    return min(COORD_MAX, max(0, q))


def quantize(c: Contour, width_px: int, height_px: int) -> QuantizedPolygon:
    if width_px < 2 or height_px < 2:
        raise ParamOutOfRange("image dims must be at least 2 px")
    return QuantizedPolygon(vertices=tuple(
        (_axis_quant(p.x, width_px), _axis_quant(p.y, height_px))
        for p in c.points))


def dequantize(q: QuantizedPolygon, width_px: int, height_px: int) -> Contour:
    pts = tuple(Point2(x * (width_px - 1) / COORD_MAX,
                       y * (height_px - 1) / COORD_MAX)
                for x, y in q.vertices)
    if len(pts) < 3:
        # too short for the Contour type; used only via rasterization
        raise DegenerateResult("dequantized polygon has fewer than 3 vertices")
    return Contour(points=pts)


# ---------------------------------------------------------------------------
# token sequences


def encode_tokens(polys) -> str:
    blocks = []
    for poly in polys:
        coords = ", ".join(f"{x},{y}" for x, y in poly.vertices)
        blocks.append(f"{SEG_OPEN} {coords} {SEG_CLOSE}")
    return " ".join(blocks)


def decode_tokens(text: str) -> list:
    """Parse `<seg> x1,y1, x2,y2, ... </seg>` blocks, whitespace-tolerant."""
    fields = text.split()
    blocks = []
    current = None
    for field in fields:
        if field == SEG_OPEN:
            if current is not None:
                raise MalformedSequence("unbalanced", "nested <seg>")
            current = []
        elif field == SEG_CLOSE:
            if current is None:
                raise MalformedSequence("unbalanced", "</seg> without <seg>")
            blocks.append(current)
            current = None
        else:
            if current is None:
                raise MalformedSequence("unbalanced",
                                        f"data outside <seg>: {field!r}")
            current.append(field)
    if current is not None:
        raise MalformedSequence("unbalanced", "<seg> never closed")
    polys = []
    for block in blocks:
        raw = " ".join(block)
        pieces = [piece.strip() for piece in raw.split(",")]
        pieces = [piece for piece in pieces if piece]
        numbers = []
        for piece in pieces:
            try:
                value = int(piece)
            except ValueError:
                raise MalformedSequence("not_integer", repr(piece)) from None
            if not 0 <= value <= COORD_MAX:
                raise MalformedSequence("range", str(value))
            numbers.append(value)
        if len(numbers) % 2:
            raise MalformedSequence("odd_count", f"{len(numbers)} coordinates")
        if not numbers:
            raise MalformedSequence("odd_count", "empty <seg> block")
        vertices = tuple(zip(numbers[0::2], numbers[1::2]))
        polys.append(QuantizedPolygon(vertices=vertices))
    return polys


def token_count(polys) -> int:
    """One token per coordinate plus the two delimiters of each polygon."""
    return sum(2 * len(p.vertices) + 2 for p in polys)


# ---------------------------------------------------------------------------
# rasterization


def _draw_stroke(bits: np.ndarray, vertices) -> None:
    """1-px Bresenham stroke through the vertex chain."""
    h, w = bits.shape
    # vertices arrive already dequantized to pixel units by the caller
    pts = [(int(round(x)), int(round(y))) for x, y in vertices]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] or pts):
        dx = abs(x1 - x0)
        dy = abs(y1 - y0)
        sx = 1 if x1 >= x0 else -1
        sy = 1 if y1 >= y0 else -1
        err = dx - dy
        x, y = x0, y0
        while True:
            if 0 <= y < h and 0 <= x < w:
                bits[y, x] = 1
            if x == x1 and y == y1:
                break
            e2 = 2 * err
            if e2 > -dy:
                err -= dy
                x += sx
            if e2 < dx:
                err += dx
                y += sy


_TIE_NUDGE = 1.0 / 1024.0


def _parity_fill(bits: np.ndarray, loops, dx: float, dy: float) -> None:
    """Even-odd parity at sample points (j + dx, i + dy), OR-ed into bits."""
    h, w = bits.shape
    crossings: dict = {}
    for loop in loops:
        n = len(loop)
        for k in range(n):
            x0, y0 = loop[k]
            x1, y1 = loop[(k + 1) % n]
            if y0 == y1:
                continue
            if y0 > y1:
                x0, y0, x1, y1 = x1, y1, x0, y0
            # rows whose sample y = i + dy lies in the half-open [y0, y1)
            first = int(np.ceil(y0 - dy))
            last = int(np.ceil(y1 - dy)) - 1
            for i in range(max(0, first), min(h - 1, last) + 1):
                ys = i + dy
                crossings.setdefault(i, []).append(
                    x0 + (ys - y0) * (x1 - x0) / (y1 - y0))
    inside = np.zeros_like(bits)
    for i, xs in crossings.items():
        xs.sort()
        for a, b in zip(xs[0::2], xs[1::2]):
            lo = max(0, int(np.ceil(a - dx)))
            hi = min(w, int(np.ceil(b - dx)))
            if hi > lo:
                inside[i, lo:hi] ^= True
    bits |= inside


def _fill_even_odd(bits: np.ndarray, loops) -> None:
    """Joint even-odd fill at pixel centers, closure inclusive.

    The interior test runs at the four points (j -+ eps, i -+ eps); a
    center lying exactly on a polygon edge counts as inside, so a
    polygon spanning the full coordinate range fills the full frame.
    """
    if not loops:
        return
    t = _TIE_NUDGE
    for dx, dy in ((t, t), (t, -t), (-t, t), (-t, -t)):
        _parity_fill(bits, loops, dx, dy)


def rasterize_polygons(polys, width_px: int, height_px: int) -> BinaryMask:
    """Even-odd fill of dequantized polygons; degenerate ones as strokes."""
    if width_px < 1 or height_px < 1:
        raise ParamOutOfRange("mask dims must be >= 1 px")
    bits = np.zeros((height_px, width_px), dtype=bool)
    loops = []
    strokes = []
    for poly in polys:
        pts = [(x * (width_px - 1) / COORD_MAX,
                y * (height_px - 1) / COORD_MAX)
               for x, y in poly.vertices]
        if len(set(poly.vertices)) < 3:
            strokes.append(pts)
        else:
            loops.append(pts)
    _fill_even_odd(bits, loops)
    out = bits.astype(np.uint8)
    for pts in strokes:
        _draw_stroke(out, pts)
    return BinaryMask.from_array(out)


def rasterize_contours(contours, width_px: int, height_px: int) -> BinaryMask:
    """Exact even-odd fill of unquantized contours (tracing inverse)."""
    bits = np.zeros((height_px, width_px), dtype=bool)
    _fill_even_odd(bits, [[(p.x, p.y) for p in c.points] for c in contours])
    return BinaryMask.from_array(bits.astype(np.uint8))


# ---------------------------------------------------------------------------
# RLE baseline


def rle_encode(m: BinaryMask) -> RleMask:
    flat = m.bits.reshape(-1)
    changes = np.flatnonzero(np.diff(flat)) + 1
    boundaries = [0, *changes.tolist(), flat.size]
    runs = [] if flat.size and flat[0] == 0 else [0]
    runs += [b - a for a, b in zip(boundaries, boundaries[1:])]
    if not runs:
        runs = [0]
    return RleMask(runs=tuple(runs), width_px=m.width_px,
                   height_px=m.height_px)


def rle_decode(rle: RleMask) -> BinaryMask:
    flat = np.zeros(rle.width_px * rle.height_px, dtype=np.uint8)
    pos = 0
    value = 0
    for run in rle.runs:
        if value:
            flat[pos:pos + run] = 1
        pos += run
        value ^= 1
    return BinaryMask.from_array(flat.reshape(rle.height_px, rle.width_px))


def rle_token_count(rle: RleMask) -> int:
    return len(rle.runs)


# ---------------------------------------------------------------------------
# mask <-> token pipeline


def default_epsilon(width_px: int, height_px: int) -> float:
    """Simplification tolerance matched to the token grid.

    Coordinates quantize to 256 levels across the image, so one grid
    step spans (size-1)/255 px.  A tolerance of 0.3 steps keeps the
    polygon within what the tokens can express; the 0.5 px floor
    collapses digitization staircases (amplitude 0.5 px) at any size.
    """
    step = (max(width_px, height_px) - 1) / COORD_MAX
    return max(0.5, 0.3 * step)


def mask_to_tokens(m: BinaryMask, eps: float = None) -> str:
    """extract -> simplify -> quantize -> encode; keeps originals on collapse."""
    if eps is None:
        eps = default_epsilon(m.width_px, m.height_px)
    polys = []
    for contour in extract_contours(m):
        try:
            contour = simplify(contour, eps)
        except DegenerateResult:
            pass
        polys.append(quantize(contour, m.width_px, m.height_px))
    return encode_tokens(polys)


def tokens_to_mask(text: str, width_px: int, height_px: int) -> BinaryMask:
    return rasterize_polygons(decode_tokens(text), width_px, height_px)
