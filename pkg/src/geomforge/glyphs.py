"""Embedded vector-stroke glyphs (A-Z, 0-9) for diagram labels.

Each glyph is a list of polylines on a 4x6 grid, y up. Rendered size is
nominal 12 pt: the 6-unit grid height maps to a 12 pt cap height.
"""

from __future__ import annotations

from .geom import Point2

# 12 pt at 72 pt/inch, cap height ~0.70 em, in cm
CAP_HEIGHT_CM = 12.0 / 72.0 * 2.54 * 0.70
GLYPH_ASPECT = 4.0 / 6.0  # grid width over grid height
CHAR_GAP_EM = 0.25  # horizontal gap between glyphs, fraction of cap height
ANCHOR_GAP_CM = 0.15  # clearance between a label box and its anchor point
STROKE_WIDTH_CM = 0.030

_G = {
    "A": [[(0, 0), (2, 6), (4, 0)], [(1, 2.2), (3, 2.2)]],
    "B": [[(0, 0), (0, 6), (3, 6), (4, 5), (4, 4), (3, 3), (0, 3)],
          [(3, 3), (4, 2), (4, 1), (3, 0), (0, 0)]],
    "C": [[(4, 1), (3, 0), (1, 0), (0, 1), (0, 5), (1, 6), (3, 6), (4, 5)]],
    "D": [[(0, 0), (0, 6), (2, 6), (4, 4), (4, 2), (2, 0), (0, 0)]],
    "E": [[(4, 0), (0, 0), (0, 6), (4, 6)], [(0, 3), (3, 3)]],
    "F": [[(0, 0), (0, 6), (4, 6)], [(0, 3), (3, 3)]],
    "G": [[(4, 5), (3, 6), (1, 6), (0, 5), (0, 1), (1, 0), (3, 0), (4, 1),
           (4, 3), (2, 3)]],
    "H": [[(0, 0), (0, 6)], [(4, 0), (4, 6)], [(0, 3), (4, 3)]],
    "I": [[(1, 0), (3, 0)], [(2, 0), (2, 6)], [(1, 6), (3, 6)]],
    "J": [[(3, 6), (3, 1), (2, 0), (1, 0), (0, 1)]],
    "K": [[(0, 0), (0, 6)], [(4, 6), (0, 2)], [(1.5, 3), (4, 0)]],
    "L": [[(0, 6), (0, 0), (4, 0)]],
    "M": [[(0, 0), (0, 6), (2, 3), (4, 6), (4, 0)]],
    "N": [[(0, 0), (0, 6), (4, 0), (4, 6)]],
    "O": [[(1, 0), (3, 0), (4, 1), (4, 5), (3, 6), (1, 6), (0, 5), (0, 1),
           (1, 0)]],
    "P": [[(0, 0), (0, 6), (3, 6), (4, 5), (4, 4), (3, 3), (0, 3)]],
    "Q": [[(1, 0), (3, 0), (4, 1), (4, 5), (3, 6), (1, 6), (0, 5), (0, 1),
           (1, 0)], [(2, 2), (4, 0)]],
    "R": [[(0, 0), (0, 6), (3, 6), (4, 5), (4, 4), (3, 3), (0, 3)],
          [(2, 3), (4, 0)]],
    "S": [[(0, 1), (1, 0), (3, 0), (4, 1), (4, 2), (3, 3), (1, 3), (0, 4),
           (0, 5), (1, 6), (3, 6), (4, 5)]],
    "T": [[(0, 6), (4, 6)], [(2, 6), (2, 0)]],
    "U": [[(0, 6), (0, 1), (1, 0), (3, 0), (4, 1), (4, 6)]],
    "V": [[(0, 6), (2, 0), (4, 6)]],
    "W": [[(0, 6), (1, 0), (2, 3), (3, 0), (4, 6)]],
    "X": [[(0, 0), (4, 6)], [(0, 6), (4, 0)]],
    "Y": [[(0, 6), (2, 3), (4, 6)], [(2, 3), (2, 0)]],
    "Z": [[(0, 6), (4, 6), (0, 0), (4, 0)]],
    "0": [[(1, 0), (3, 0), (4, 1), (4, 5), (3, 6), (1, 6), (0, 5), (0, 1),
           (1, 0)], [(1, 1), (3, 5)]],
    "1": [[(1, 5), (2, 6), (2, 0)], [(1, 0), (3, 0)]],
    "2": [[(0, 5), (1, 6), (3, 6), (4, 5), (4, 4), (0, 1), (0, 0), (4, 0)]],
    "3": [[(0, 5), (1, 6), (3, 6), (4, 5), (4, 4), (3, 3), (1, 3)],
          [(3, 3), (4, 2), (4, 1), (3, 0), (1, 0), (0, 1)]],
    "4": [[(3, 0), (3, 6), (0, 2), (4, 2)]],
    "5": [[(4, 6), (0, 6), (0, 3), (3, 3), (4, 2), (4, 1), (3, 0), (1, 0),
           (0, 1)]],
    "6": [[(3, 6), (1, 6), (0, 5), (0, 1), (1, 0), (3, 0), (4, 1), (4, 2),
           (3, 3), (0, 3)]],
    "7": [[(0, 6), (4, 6), (1, 0)]],
    "8": [[(1, 3), (0, 4), (0, 5), (1, 6), (3, 6), (4, 5), (4, 4), (3, 3),
           (1, 3), (0, 2), (0, 1), (1, 0), (3, 0), (4, 1), (4, 2), (3, 3)]],
    "9": [[(1, 0), (3, 0), (4, 1), (4, 5), (3, 6), (1, 6), (0, 5), (0, 4),
           (1, 3), (4, 3)]],
}

SUPPORTED_CHARS = frozenset(_G)


def text_extent(text: str) -> tuple[float, float]:
    """(width, height) of the text box in world cm."""
    n = len(text)
    char_w = CAP_HEIGHT_CM * GLYPH_ASPECT
    gap = CAP_HEIGHT_CM * CHAR_GAP_EM
    return (n * char_w + max(0, n - 1) * gap, CAP_HEIGHT_CM)


def place_box(text: str, anchor: Point2, placement: str
              ) -> tuple[float, float, float, float]:
    """World box (x0, y0, x1, y1) of the label for a given placement."""
    w, h = text_extent(text)
    if placement == "above":
        x0, y0 = anchor.x - w / 2, anchor.y + ANCHOR_GAP_CM
    elif placement == "below":
        x0, y0 = anchor.x - w / 2, anchor.y - ANCHOR_GAP_CM - h
    elif placement == "left":
        x0, y0 = anchor.x - ANCHOR_GAP_CM - w, anchor.y - h / 2
    elif placement == "right":
        x0, y0 = anchor.x + ANCHOR_GAP_CM, anchor.y - h / 2
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return (x0, y0, x0 + w, y0 + h)


def text_strokes(text: str, anchor: Point2, placement: str
                 ) -> list[tuple[Point2, Point2]]:
    """World-space stroke segments for the label glyphs."""
    x0, y0, _, _ = place_box(text, anchor, placement)
    scale = CAP_HEIGHT_CM / 6.0
    char_w = CAP_HEIGHT_CM * GLYPH_ASPECT
    gap = CAP_HEIGHT_CM * CHAR_GAP_EM
    segments = []
    for i, ch in enumerate(text):
        if ch not in _G:
            raise KeyError(f"no glyph for {ch!r}")
        ox = x0 + i * (char_w + gap)
        for poly in _G[ch]:
            pts = [Point2(ox + gx * scale, y0 + gy * scale) for gx, gy in poly]
            segments.extend(zip(pts[:-1], pts[1:]))
    return segments
