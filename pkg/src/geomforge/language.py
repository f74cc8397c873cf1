"""Referring-expression generation at three complexity levels."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Optional

import numpy as np

from .errors import NoTemplate
from .geom import KIND_NOUN
from .scene import ElementId, Scene, Target


class ComplexityLevel(Enum):
    DIRECT = "direct"
    DESCRIPTIVE = "descriptive"
    TOPOLOGICAL = "topological"


LEVELS = tuple(ComplexityLevel)

_TARGET_KINDS = ("side", "polygon", "incircle", "diagonal")


@dataclass(frozen=True)
class ReferringExpression:
    text: str
    level: ComplexityLevel
    target: ElementId

    def __post_init__(self):
        if not self.text:
            raise ValueError("referring expression text must be non-empty")


class TemplateStore:
    """Immutable per-(target kind, level) template families."""

    def __init__(self, families: dict):
        self._families = {key: tuple(vals) for key, vals in families.items()}

    @staticmethod
    def parse(text: str) -> "TemplateStore":
        families: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"template line {lineno}: expected "
                                 f"kind<TAB>level<TAB>text")
            kind, level, template = parts
            if kind not in _TARGET_KINDS:
                raise ValueError(f"template line {lineno}: unknown kind {kind!r}")
            ComplexityLevel(level)  # raises ValueError on unknown level
            families.setdefault((kind, level), []).append(template)
        return TemplateStore(families)

    @staticmethod
    def load_default() -> "TemplateStore":
        text = resources.files("geomforge").joinpath("templates.txt").read_text(
            encoding="utf-8")
        return TemplateStore.parse(text)

    def templates_for(self, kind: str, level: ComplexityLevel) -> tuple:
        return self._families.get((kind, level.value), ())


_DEFAULT_STORE: Optional[TemplateStore] = None


def default_store() -> TemplateStore:
    global _DEFAULT_STORE
    if _DEFAULT_STORE is None:
        _DEFAULT_STORE = TemplateStore.load_default()
    return _DEFAULT_STORE


def _slot_values(target: Target, scene: Scene) -> dict:
    slots = {letter: label
             for letter, label in zip("ABCD", target.element_id.labels)}
    if scene.shape_meta is not None:
        slots["shape"] = KIND_NOUN[scene.shape_meta.kind]
    else:
        slots["shape"] = "figure"
    return slots


def describe(target: Target, scene: Scene, level: ComplexityLevel,
             rng: np.random.Generator,
             store: Optional[TemplateStore] = None) -> ReferringExpression:
    """Uniformly sample a template for the target kind and fill its slots."""
    if scene.find(target.element_id) is None:
        raise ValueError(f"target {target.element_id} not in scene")
    store = store or default_store()
    family = store.templates_for(target.target_kind, level)
    if not family:
        raise NoTemplate(f"no templates for ({target.target_kind}, "
                         f"{level.value})")
    template = family[int(rng.integers(len(family)))]
    text = template.format(**_slot_values(target, scene))
    return ReferringExpression(text=text, level=level,
                               target=target.element_id)


def describe_all(target: Target, scene: Scene, rng: np.random.Generator,
                 store: Optional[TemplateStore] = None) -> list:
    """One expression per complexity level, in enum order."""
    return [describe(target, scene, level, rng, store) for level in LEVELS]
