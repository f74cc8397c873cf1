"""Scene graph: identified drawable elements, target enumeration, dropout."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from . import glyphs
from .geom import Incircle, Point2, ShapeInstance, ShapeKind

CANVAS_MARGIN = 0.5  # world units around the tight bounding box
DEFAULT_STROKE_WIDTH = 0.04  # world units; "thick" line weight
DEFAULT_P_DROP = 0.1

PLACEMENTS = ("above", "below", "left", "right")

TARGET_KIND_BY_ELEMENT = {
    "side": "side",
    "polygon": "polygon",
    "incircle": "incircle",
    "diagonal": "diagonal",
}


@dataclass(frozen=True)
class ElementId:
    kind: str
    labels: str = ""

    def __str__(self) -> str:
        return f"{self.kind}:{self.labels}" if self.labels else self.kind

    @staticmethod
    def parse(text: str) -> "ElementId":
        if ":" in text:
            kind, labels = text.split(":", 1)
            return ElementId(kind, labels)
        return ElementId(text)


@dataclass(frozen=True)
class Segment:
    p1: Point2
    p2: Point2


@dataclass(frozen=True)
class Circle:
    center: Point2
    radius: float


@dataclass(frozen=True)
class Dot:
    p: Point2


@dataclass(frozen=True)
class TextLabel:
    anchor: Point2
    text: str
    placement: str  # above | below | left | right

    def __post_init__(self):
        if not self.text:
            raise ValueError("TextLabel text must be non-empty")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")


@dataclass(frozen=True)
class PolygonOutline:
    points: tuple[Point2, Point2, Point2, Point2]


Primitive = Union[Segment, Circle, Dot, TextLabel, PolygonOutline]


@dataclass(frozen=True)
class SceneElement:
    id: ElementId
    primitive: Primitive


@dataclass(frozen=True)
class SceneMeta:
    kind: ShapeKind
    labels: tuple[str, str, str, str]
    vertices: tuple[Point2, Point2, Point2, Point2]
    incircle: Optional[Incircle] = None


@dataclass(frozen=True)
class Scene:
    elements: tuple[SceneElement, ...]
    canvas: tuple[float, float, float, float]  # world x0, y0, x1, y1
    stroke_width: float = DEFAULT_STROKE_WIDTH
    shape_meta: Optional[SceneMeta] = None

    def find(self, element_id: ElementId) -> Optional[SceneElement]:
        for el in self.elements:
            if el.id == element_id:
                return el
        return None


@dataclass(frozen=True)
class Target:
    element_id: ElementId
    target_kind: str  # side | polygon | incircle | diagonal


def _snap_placement(direction: Point2) -> str:
    # outward from centroid, snapped to the dominant axis
    if abs(direction.x) >= abs(direction.y):
        return "right" if direction.x >= 0 else "left"
    return "above" if direction.y >= 0 else "below"


def build_scene(shape: ShapeInstance,
                draw_diagonals: bool = False,
                stroke_width: float = DEFAULT_STROKE_WIDTH) -> Scene:
    """Sides, outward vertex labels, outline, incircle, optional diagonals.

    The canvas is the bounding box of all element geometry (including
    label boxes and the incircle) expanded by a 0.5 world-unit margin.
    """
    v = shape.vertices
    labels = shape.labels
    cx = sum(p.x for p in v) / 4.0
    cy = sum(p.y for p in v) / 4.0

    elements: list[SceneElement] = []
    for i in range(4):
        eid = ElementId("side", labels[i] + labels[(i + 1) % 4])
        elements.append(SceneElement(eid, Segment(v[i], v[(i + 1) % 4])))
    elements.append(SceneElement(ElementId("polygon", "".join(labels)),
                                 PolygonOutline(v)))
    if shape.incircle is not None:
        elements.append(SceneElement(ElementId("incircle"),
                                     Circle(shape.incircle.center,
                                            shape.incircle.radius)))
    if draw_diagonals:
        elements.append(SceneElement(ElementId("diagonal", labels[0] + labels[2]),
                                     Segment(v[0], v[2])))
        elements.append(SceneElement(ElementId("diagonal", labels[1] + labels[3]),
                                     Segment(v[1], v[3])))

    text_labels: list[SceneElement] = []
    for i in range(4):
        placement = _snap_placement(v[i] - Point2(cx, cy))
        text_labels.append(SceneElement(ElementId("vertex", labels[i]),
                                        TextLabel(v[i], labels[i], placement)))
    elements.extend(text_labels)

    xs: list[float] = []
    ys: list[float] = []
    for el in elements:
        prim = el.primitive
        if isinstance(prim, Segment):
            xs += [prim.p1.x, prim.p2.x]
            ys += [prim.p1.y, prim.p2.y]
        elif isinstance(prim, PolygonOutline):
            xs += [p.x for p in prim.points]
            ys += [p.y for p in prim.points]
        elif isinstance(prim, Circle):
            xs += [prim.center.x - prim.radius, prim.center.x + prim.radius]
            ys += [prim.center.y - prim.radius, prim.center.y + prim.radius]
        elif isinstance(prim, Dot):
            xs.append(prim.p.x)
            ys.append(prim.p.y)
        elif isinstance(prim, TextLabel):
            bx0, by0, bx1, by1 = glyphs.place_box(prim.text, prim.anchor,
                                                  prim.placement)
            xs += [bx0, bx1]
            ys += [by0, by1]
    canvas = (min(xs) - CANVAS_MARGIN, min(ys) - CANVAS_MARGIN,
              max(xs) + CANVAS_MARGIN, max(ys) + CANVAS_MARGIN)

    meta = SceneMeta(kind=shape.kind, labels=labels, vertices=v,
                     incircle=shape.incircle)
    return Scene(elements=tuple(elements), canvas=canvas,
                 stroke_width=stroke_width, shape_meta=meta)


def enumerate_targets(scene: Scene) -> list[Target]:
    """Sides in label order, then polygon, then incircle, then diagonals."""
    sides, polygon, circle, diagonals = [], [], [], []
    for el in scene.elements:
        if el.id.kind == "side":
            sides.append(Target(el.id, "side"))
        elif el.id.kind == "polygon":
            polygon.append(Target(el.id, "polygon"))
        elif el.id.kind == "incircle":
            circle.append(Target(el.id, "incircle"))
        elif el.id.kind == "diagonal":
            diagonals.append(Target(el.id, "diagonal"))
    return sides + polygon + circle + diagonals


def drop_non_target(scene: Scene, keep: Target, p_drop: float,
                    rng: np.random.Generator) -> Scene:
    """Independently remove non-target, non-label elements with prob p_drop.

    The target is never removed; when the target is a side, the two sides
    sharing one of its endpoints are kept as visual anchors for the
    labels the expression mentions.
    """
    if not 0.0 <= p_drop <= 1.0:
        raise ValueError(f"p_drop {p_drop} outside [0, 1]")
    if scene.find(keep.element_id) is None:
        raise ValueError(f"target {keep.element_id} not in scene")

    protected = {keep.element_id}
    if keep.target_kind == "side":
        for el in scene.elements:
            if el.id.kind == "side" and el.id != keep.element_id \
                    and set(el.id.labels) & set(keep.element_id.labels):
                protected.add(el.id)

    kept = []
    for el in scene.elements:
        if el.id.kind == "vertex" or el.id in protected:
            kept.append(el)
        elif float(rng.random()) >= p_drop:
            kept.append(el)
    return replace(scene, elements=tuple(kept))
