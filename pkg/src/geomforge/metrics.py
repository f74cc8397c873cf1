"""Overlap metrics (IoU, boundary-tolerant IoU) and batch evaluation reports.

Two independent routes compute the boundary-tolerant score. `biou_pixel`
dilates both rasterized masks with a Euclidean disk of radius beta and takes
the plain IoU of the results; it is the reference definition used by
`evaluate_batch`. `biou_polygon` instead buffers the continuous polygon
outlines outward by beta (rounded joins), rasterizes the buffered regions,
and takes their IoU. The two routes are kept separate on purpose so that one
can validate the other.

Pixel centers sit at integer coordinates: mask pixel (row i, col j) is the
point (x=j, y=i), matching the polygon codec's convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (DimensionMismatch, InvalidPolygon, MalformedSequence,
                     ManifestMismatch, ParamOutOfRange)
from .morphology import dilate
from .polycodec import QuantizedPolygon, decode_tokens, rasterize_polygons
from .raster import BinaryMask

DEFAULT_BETA = 3.0

# A unit's score line carries one of these dispositions.
STATUS_SCORED = "scored"
STATUS_MISSING = "missing"
STATUS_MALFORMED = "malformed"

DPI_BAND_SPLIT = 200  # dpi below this counts as the low band


@dataclass(frozen=True)
class BufferParam:
    """Boundary tolerance radius in pixels; real-valued, non-negative."""

    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ParamOutOfRange(f"beta {self.beta} must be a finite value >= 0")


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two same-size masks.

    Two empty masks agree perfectly (1.0); an empty mask against a non-empty
    one scores 0.0.
    """
    if (a.width_px, a.height_px) != (b.width_px, b.height_px):
        raise DimensionMismatch(
            f"mask sizes differ: {a.width_px}x{a.height_px} vs "
            f"{b.width_px}x{b.height_px}")
    fa = a.bits.astype(bool)
    fb = b.bits.astype(bool)
    union = int(np.logical_or(fa, fb).sum())
    if union == 0:
        return 1.0
    inter = int(np.logical_and(fa, fb).sum())
    return inter / union


def biou_pixel(a: BinaryMask, b: BinaryMask, beta: float = DEFAULT_BETA) -> float:
    """Boundary-tolerant IoU: dilate both masks by a disk of radius beta,
    then take the plain IoU. With beta == 0 this equals `iou` exactly."""
    BufferParam(beta)
    if (a.width_px, a.height_px) != (b.width_px, b.height_px):
        raise DimensionMismatch(
            f"mask sizes differ: {a.width_px}x{a.height_px} vs "
            f"{b.width_px}x{b.height_px}")
    return iou(dilate(a, beta), dilate(b, beta))


def _proper_crossing(p: np.ndarray, q: np.ndarray, r: np.ndarray,
                     s: np.ndarray) -> bool:
    """True when segments pq and rs cross at a single interior point."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p, q, r)
    d2 = orient(p, q, s)
    d3 = orient(r, s, p)
    d4 = orient(r, s, q)
    return d1 * d2 < 0 and d3 * d4 < 0


def _check_simple(points: np.ndarray, label: str) -> None:
    """Raise InvalidPolygon when any two edges properly cross."""
    n = len(points)
    edges = [(points[k], points[(k + 1) % n]) for k in range(n)]
    edges = [(a, b) for a, b in edges if not np.array_equal(a, b)]
    for k in range(len(edges)):
        for l in range(k + 1, len(edges)):
            if _proper_crossing(*edges[k], *edges[l]):
                raise InvalidPolygon(
                    f"{label} polygon self-intersects "
                    f"(edges {k} and {l} cross)")


def _dequantize_loops(polys: Sequence[QuantizedPolygon], width_px: int,
                      height_px: int) -> list:
    sx = (width_px - 1) / 255.0 if width_px > 1 else 0.0
    sy = (height_px - 1) / 255.0 if height_px > 1 else 0.0
    return [np.array([(x * sx, y * sy) for x, y in p.vertices], dtype=float)
            for p in polys]


def _mark_distance_band(bits: np.ndarray, a: np.ndarray, b: np.ndarray,
                        beta: float) -> None:
    """Set every pixel whose center lies within beta of segment ab."""
    h, w = bits.shape
    x0 = max(0, int(np.ceil(min(a[0], b[0]) - beta)))
    x1 = min(w - 1, int(np.floor(max(a[0], b[0]) + beta)))
    y0 = max(0, int(np.ceil(min(a[1], b[1]) - beta)))
    y1 = min(h - 1, int(np.floor(max(a[1], b[1]) + beta)))
    if x1 < x0 or y1 < y0:
        return
    gx, gy = np.meshgrid(np.arange(x0, x1 + 1, dtype=float),
                         np.arange(y0, y1 + 1, dtype=float))
    dx, dy = b[0] - a[0], b[1] - a[1]
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        px = np.full_like(gx, a[0])
        py = np.full_like(gy, a[1])
    else:
        t = np.clip(((gx - a[0]) * dx + (gy - a[1]) * dy) / seg2, 0.0, 1.0)
        px = a[0] + t * dx
        py = a[1] + t * dy
    hit = (gx - px) ** 2 + (gy - py) ** 2 <= beta * beta
    bits[y0:y1 + 1, x0:x1 + 1] |= hit


def _buffered_mask(polys: Sequence[QuantizedPolygon], beta: float,
                   width_px: int, height_px: int, label: str) -> BinaryMask:
    loops = _dequantize_loops(polys, width_px, height_px)
    for pts in loops:
        if len(pts) >= 3:
            _check_simple(pts, label)
    base = rasterize_polygons(list(polys), width_px, height_px)
    if beta == 0:
        return base
    bits = base.bits.astype(bool)
    for pts in loops:
        n = len(pts)
        if n == 1:
            _mark_distance_band(bits, pts[0], pts[0], beta)
            continue
        for k in range(n):
            _mark_distance_band(bits, pts[k], pts[(k + 1) % n], beta)
    return BinaryMask.from_array(bits.astype(np.uint8))


def biou_polygon(pa: Sequence[QuantizedPolygon], pb: Sequence[QuantizedPolygon],
                 beta: float, width_px: int, height_px: int) -> float:
    """Boundary-tolerant IoU computed from polygon geometry.

    Each side's region (joint even-odd fill of its loops) is grown by beta:
    a pixel belongs to the buffered region when its center is inside the
    fill or within beta of any outline segment, which is an exact Minkowski
    sum with a disk (rounded joins included). Self-intersecting loops are
    rejected with InvalidPolygon rather than silently repaired.
    """
    BufferParam(beta)
    if width_px < 1 or height_px < 1:
        raise ParamOutOfRange("raster dimensions must be >= 1")
    ma = _buffered_mask(pa, beta, width_px, height_px, "first")
    mb = _buffered_mask(pb, beta, width_px, height_px, "second")
    return iou(ma, mb)


@dataclass(frozen=True)
class UnitScore:
    """Score line for one ground-truth unit (one target in one sample)."""

    unit_id: str
    target_kind: str
    level: str
    dpi_band: str
    iou: float
    biou: float
    status: str = STATUS_SCORED


def _group_stats(rows: Sequence[UnitScore], key) -> dict:
    groups: dict = {}
    for row in rows:
        groups.setdefault(key(row), []).append(row)
    out = {}
    for name in sorted(groups):
        members = groups[name]
        out[name] = {
            "count": len(members),
            "mean_iou": float(np.mean([r.iou for r in members])),
            "mean_biou": float(np.mean([r.biou for r in members])),
        }
    return out


def _aggregate(rows: Sequence[UnitScore]) -> dict:
    return {
        "count": len(rows),
        "mean_iou": float(np.mean([r.iou for r in rows])) if rows else 0.0,
        "mean_biou": float(np.mean([r.biou for r in rows])) if rows else 0.0,
        "missing": sum(1 for r in rows if r.status == STATUS_MISSING),
        "malformed": sum(1 for r in rows if r.status == STATUS_MALFORMED),
        "by_target_kind": _group_stats(rows, lambda r: r.target_kind),
        "by_level": _group_stats(rows, lambda r: r.level),
        "by_dpi_band": _group_stats(rows, lambda r: r.dpi_band),
    }


@dataclass(frozen=True)
class EvalReport:
    """Per-unit scores plus aggregates; aggregates always match the rows."""

    beta: float
    rows: tuple = ()
    aggregates: dict = field(default_factory=dict)

    def __post_init__(self):
        BufferParam(self.beta)
        expected = _aggregate(self.rows)
        if not self.aggregates:
            object.__setattr__(self, "aggregates", expected)
        elif self.aggregates != expected:
            raise ParamOutOfRange("report aggregates do not match its rows")

    @property
    def mean_iou(self) -> float:
        return self.aggregates["mean_iou"]

    @property
    def mean_biou(self) -> float:
        return self.aggregates["mean_biou"]

    @property
    def count(self) -> int:
        return self.aggregates["count"]

    def to_json(self) -> str:
        payload = {
            "beta": self.beta,
            **self.aggregates,
            "units": [{
                "id": r.unit_id,
                "target_kind": r.target_kind,
                "level": r.level,
                "dpi_band": r.dpi_band,
                "iou": r.iou,
                "biou": r.biou,
                "status": r.status,
            } for r in self.rows],
        }
        return json.dumps(payload, indent=2)

    def to_table(self) -> str:
        headers = ("unit", "kind", "level", "band", "iou", "biou", "status")
        lines = [[r.unit_id, r.target_kind, r.level, r.dpi_band,
                  f"{r.iou:.4f}", f"{r.biou:.4f}", r.status]
                 for r in self.rows]
        widths = [max(len(h), *(len(row[c]) for row in lines)) if lines
                  else len(h) for c, h in enumerate(headers)]
        fmt = "  ".join("{:<%d}" % w for w in widths)
        out = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
        out += [fmt.format(*row) for row in lines]
        agg = self.aggregates
        out.append("")
        out.append(f"count {agg['count']}  mean_iou {agg['mean_iou']:.4f}  "
                   f"mean_biou {agg['mean_biou']:.4f}  "
                   f"missing {agg['missing']}  malformed {agg['malformed']}  "
                   f"beta {self.beta:g}")
        for title, key in (("target_kind", "by_target_kind"),
                           ("level", "by_level"),
                           ("dpi_band", "by_dpi_band")):
            out.append(f"[{title}]")
            for name, stats in agg[key].items():
                out.append(f"  {name:<20} count {stats['count']:<5} "
                           f"mean_iou {stats['mean_iou']:.4f}  "
                           f"mean_biou {stats['mean_biou']:.4f}")
        return "\n".join(out) + "\n"


def dpi_band(dpi: int) -> str:
    return "low" if dpi < DPI_BAND_SPLIT else "high"


def _read_jsonl(path: Path) -> list:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ManifestMismatch(
                    f"{path}:{line_no}: not valid JSON: {exc}") from exc
    return rows


def _prediction_mask(pred: dict, width_px: int, height_px: int,
                     base_dir: Path) -> Optional[BinaryMask]:
    """Build the predicted mask, or None when the prediction is unusable."""
    if "token_seq" in pred:
        try:
            polys = decode_tokens(pred["token_seq"])
            return rasterize_polygons(polys, width_px, height_px)
        except (MalformedSequence, TypeError, AttributeError):
            return None
    if "mask_path" in pred:
        try:
            m = BinaryMask.load_png(base_dir / pred["mask_path"])
        except OSError:
            return None
        if (m.width_px, m.height_px) != (width_px, height_px):
            return None
        return m
    return None


def evaluate_batch(manifest_path, predictions_path,
                   beta: float = DEFAULT_BETA) -> EvalReport:
    """Score a predictions file against a generation manifest.

    The manifest (JSON lines, one sample per line) defines the unit set:
    every target of every sample is one unit, keyed "{sample_id}:{element_id}".
    Predictions (JSON lines) carry {"id", and "token_seq" or "mask_path"}.
    A prediction for an unknown unit is a fatal ManifestMismatch; a missing
    or unusable prediction scores zero and is tallied, never fatal.
    """
    BufferParam(beta)
    manifest_path = Path(manifest_path)
    predictions_path = Path(predictions_path)
    manifest_dir = manifest_path.parent
    predictions_dir = predictions_path.parent

    samples = _read_jsonl(manifest_path)
    units = []  # (unit_id, target_kind, band, mask_rel_path, width, height)
    for sample in samples:
        band = sample.get("dpi_band") or dpi_band(int(sample["dpi"]))
        for target in sample["targets"]:
            units.append((f"{sample['id']}:{target['element_id']}",
                          target["target_kind"],
                          band,
                          target.get("mask_path", target.get("mask")),
                          int(target.get("width_px", sample.get("width_px"))),
                          int(target.get("height_px", sample.get("height_px")))))

    by_id = {}
    for pred in _read_jsonl(predictions_path):
        pid = pred.get("id")
        if pid is None:
            raise ManifestMismatch(f"{predictions_path}: prediction lacks an id")
        if pid in by_id:
            raise ManifestMismatch(f"duplicate prediction id {pid!r}")
        by_id[pid] = pred
    known = {u[0] for u in units}
    unknown = sorted(set(by_id) - known)
    if unknown:
        raise ManifestMismatch(
            f"predictions reference ids absent from the manifest: "
            f"{', '.join(unknown[:5])}" + (" ..." if len(unknown) > 5 else ""))

    rows = []
    for unit_id, kind, band, mask_rel, width_px, height_px in units:
        gt = BinaryMask.load_png(manifest_dir / mask_rel)
        pred = by_id.get(unit_id)
        level = (pred or {}).get("level", "unspecified")
        if pred is None:
            rows.append(UnitScore(unit_id, kind, "unspecified", band,
                                  0.0, 0.0, STATUS_MISSING))
            continue
        pm = _prediction_mask(pred, width_px, height_px, predictions_dir)
        if pm is None:
            rows.append(UnitScore(unit_id, kind, level, band,
                                  0.0, 0.0, STATUS_MALFORMED))
            continue
        rows.append(UnitScore(unit_id, kind, level, band,
                              iou(gt, pm), biou_pixel(gt, pm, beta)))
    return EvalReport(beta=beta, rows=tuple(rows))
