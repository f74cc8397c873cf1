"""Deterministic batch dataset generation.

Every sample owns an RNG stream derived from (master_seed, sample_index,
attempt) through numpy's SeedSequence spawn keys, so the content of sample i
never depends on worker scheduling, worker count, or other samples. Workers
write their own image/mask files; the parent gathers manifest rows and writes
them in index order. All data outputs are byte-identical across runs and
worker counts; stats.json (wall-clock timings) is the one file outside that
guarantee.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationExhausted, ParamOutOfRange
from .geom import KINDS, sample_shape
from .language import default_store, describe_all
from .morphology import dilate
from .polycodec import mask_to_tokens
from .render import RenderStyle, emit_tikz, render_mask, render_scene
from .scene import build_scene, enumerate_targets

SPLIT_NAMES = ("train", "val", "test")
SPLIT_SALT = "split"
MAX_ATTEMPTS_PER_SAMPLE = 64


@dataclass(frozen=True)
class DpiPolicy:
    """Two-band resolution augmentation: mostly crisp, some low-fidelity."""

    high_fraction: float = 0.8
    high_range: tuple = (250, 300)
    low_range: tuple = (72, 150)

    def __post_init__(self):
        if not 0.0 <= self.high_fraction <= 1.0:
            raise ParamOutOfRange(
                f"high_fraction {self.high_fraction} outside [0, 1]")
        for name in ("high_range", "low_range"):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi or lo > hi or lo < 1:
                raise ParamOutOfRange(f"{name} ({lo}, {hi}) is not a "
                                      f"non-empty integer dpi range")


@dataclass(frozen=True)
class GenConfig:
    sample_count: int = 100
    master_seed: int = 0
    dpi_policy: DpiPolicy = field(default_factory=DpiPolicy)
    tau: float = 50.0
    split_ratios: tuple = (0.8, 0.1, 0.1)
    draw_diagonals_prob: float = 0.5
    p_drop: float = 0.1
    dilation_choices: tuple = (2, 3, 4)
    output_dir: str = "dataset"
    worker_count: int = 1
    write_tikz: bool = True

    def __post_init__(self):
        if self.sample_count < 0:
            raise ParamOutOfRange("sample_count must be >= 0")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ParamOutOfRange("master_seed must fit in 64 bits")
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios):
            raise ParamOutOfRange("split_ratios must be 3 non-negative values")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ParamOutOfRange(
                f"split_ratios sum to {sum(self.split_ratios)}, expected 1")
        if not 0.0 <= self.draw_diagonals_prob <= 1.0:
            raise ParamOutOfRange("draw_diagonals_prob outside [0, 1]")
        if not 0.0 <= self.p_drop <= 1.0:
            raise ParamOutOfRange("p_drop outside [0, 1]")
        if self.tau < 0:
            raise ParamOutOfRange("tau must be >= 0")
        if not self.dilation_choices or any(
                int(r) != r or r < 0 for r in self.dilation_choices):
            raise ParamOutOfRange(
                "dilation_choices must be non-empty, integer, >= 0")
        if self.worker_count < 1:
            raise ParamOutOfRange("worker_count must be >= 1")


def sample_stream(master_seed: int, index: int,
                  attempt: int = 0) -> np.random.Generator:
    """The RNG stream that fully determines sample `index`."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(index, attempt))
    return np.random.Generator(np.random.PCG64(seq))


def stream_seed(master_seed: int, index: int, attempt: int = 0) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(index, attempt))
    return int(seq.generate_state(1, np.uint64)[0])


def split_assign(sample_id: int, ratios=(0.8, 0.1, 0.1)) -> str:
    """Hash-based split: stable for a given id, ~ratios in aggregate."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) \
            or abs(sum(ratios) - 1.0) > 1e-9:
        raise ParamOutOfRange(f"bad split ratios {ratios}")
    digest = hashlib.sha256(f"{SPLIT_SALT}:{sample_id}".encode()).digest()
    frac = int.from_bytes(digest[:8], "big") / 2.0 ** 64
    if frac < ratios[0]:
        return "train"
    if frac < ratios[0] + ratios[1]:
        return "val"
    return "test"


def _sample_dpi(rng: np.random.Generator, policy: DpiPolicy) -> int:
    band = policy.high_range if rng.random() < policy.high_fraction \
        else policy.low_range
    return int(rng.integers(band[0], band[1] + 1))


def _safe_name(element_id: str) -> str:
    return element_id.replace(":", "_")


@dataclass(frozen=True)
class SamplePlan:
    """Everything about a sample that is decided before rasterization."""

    index: int
    kind: object
    shape: object
    diagonals: bool
    dpi: int
    dilation_radius: int
    attempt: int
    resamples: int


def _plan_with_stream(config: GenConfig, index: int):
    """Draw the per-sample decisions in their fixed order.

    Returns the plan plus the live stream positioned right after the last
    planning draw, so expression sampling continues deterministically.
    Rejection dead ends restart on the next derived stream, keeping the
    outcome a pure function of (master_seed, index).
    """
    resamples = 0
    for attempt in range(MAX_ATTEMPTS_PER_SAMPLE):
        rng = sample_stream(config.master_seed, index, attempt)
        kind = KINDS[int(rng.integers(len(KINDS)))]
        try:
            shape = sample_shape(kind, rng)
        except GenerationExhausted:
            resamples += 1
            continue
        diagonals = bool(rng.random() < config.draw_diagonals_prob)
        dpi = _sample_dpi(rng, config.dpi_policy)
        radius = int(config.dilation_choices[
            int(rng.integers(len(config.dilation_choices)))])
        plan = SamplePlan(index=index, kind=kind, shape=shape,
                          diagonals=diagonals, dpi=dpi,
                          dilation_radius=radius, attempt=attempt,
                          resamples=resamples)
        return plan, rng
    raise GenerationExhausted(f"sample {index}", MAX_ATTEMPTS_PER_SAMPLE)


def plan_sample(config: GenConfig, index: int) -> SamplePlan:
    """The sample's pre-render decisions (kind, shape, dpi, ...)."""
    return _plan_with_stream(config, index)[0]


def _produce_sample(config: GenConfig, index: int) -> dict:
    """Generate one sample end to end; returns its manifest row + timings."""
    out = Path(config.output_dir)
    sid = f"{index:06d}"
    t0 = time.perf_counter()
    plan, rng = _plan_with_stream(config, index)
    dpi, radius = plan.dpi, plan.dilation_radius
    scene = build_scene(plan.shape, draw_diagonals=plan.diagonals)
    t_solve = time.perf_counter() - t0

    t0 = time.perf_counter()
    style = RenderStyle(dpi=dpi)
    image = render_scene(scene, style)
    image_rel = f"images/{sid}.png"
    image.save_png(out / image_rel)
    tikz_rel = None
    if config.write_tikz:
        tikz_rel = f"tikz/{sid}.tex"
        (out / tikz_rel).write_text(emit_tikz(scene), encoding="utf-8")
    t_render = time.perf_counter() - t0

    t0 = time.perf_counter()
    store = default_store()
    targets = []
    for target in enumerate_targets(scene):
        mask = render_mask(scene, target, style, tau=config.tau)
        fat = dilate(mask, radius)
        base = f"masks/{sid}_{_safe_name(str(target.element_id))}"
        mask.save_png(out / f"{base}.png")
        fat.save_png(out / f"{base}_dilated.png")
        expressions = describe_all(target, scene, rng, store)
        targets.append({
            "element_id": str(target.element_id),
            "target_kind": target.target_kind,
            "mask_path": f"{base}.png",
            "dilated_mask_path": f"{base}_dilated.png",
            "width_px": mask.width_px,
            "height_px": mask.height_px,
            "expressions": [{"level": e.level.value, "text": e.text}
                            for e in expressions],
            "token_seq": mask_to_tokens(fat),
        })
    t_masks = time.perf_counter() - t0

    row = {
        "id": sid,
        "split": split_assign(index, config.split_ratios),
        "shape_kind": plan.kind.value,
        "seed": stream_seed(config.master_seed, index, plan.attempt),
        "dpi": dpi,
        "dpi_band": "high" if dpi >= config.dpi_policy.high_range[0]
                    else "low",
        "draw_diagonals": plan.diagonals,
        "dilation_radius": radius,
        "tau": config.tau,
        "image_path": image_rel,
        "width_px": image.width_px,
        "height_px": image.height_px,
        "targets": targets,
    }
    if tikz_rel is not None:
        row["tikz_path"] = tikz_rel
    return {"index": index, "row": row, "resamples": plan.resamples,
            "timing": {"solve_s": t_solve, "render_s": t_render,
                       "masks_s": t_masks}}


def _worker(args) -> dict:
    config, index = args
    return _produce_sample(config, index)


@dataclass(frozen=True)
class GenStats:
    sample_count: int
    elapsed_s: float
    samples_per_s: float
    resamples: int
    worker_count: int
    kinds: dict
    dpi_bands: dict
    splits: dict
    timing: dict

    @property
    def resample_fraction(self) -> float:
        if self.sample_count == 0:
            return 0.0
        return self.resamples / self.sample_count

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def generate(config: GenConfig) -> GenStats:
    """Run the full pipeline; writes images/, masks/, manifest.jsonl, stats.json."""
    out = Path(config.output_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    if config.write_tikz:
        (out / "tikz").mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    if config.worker_count == 1 or config.sample_count <= 1:
        results = [_produce_sample(config, i) for i in range(config.sample_count)]
    else:
        jobs = [(config, i) for i in range(config.sample_count)]
        with multiprocessing.Pool(config.worker_count) as pool:
            results = list(pool.imap_unordered(_worker, jobs, chunksize=1))
    results.sort(key=lambda r: r["index"])
    elapsed = time.perf_counter() - started

    with open(out / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for res in results:
            fh.write(json.dumps(res["row"]) + "\n")

    kinds, bands, splits = {}, {}, {}
    timing = {"solve_s": 0.0, "render_s": 0.0, "masks_s": 0.0}
    for res in results:
        row = res["row"]
        kinds[row["shape_kind"]] = kinds.get(row["shape_kind"], 0) + 1
        bands[row["dpi_band"]] = bands.get(row["dpi_band"], 0) + 1
        splits[row["split"]] = splits.get(row["split"], 0) + 1
        for key in timing:
            timing[key] += res["timing"][key]
    stats = GenStats(
        sample_count=config.sample_count,
        elapsed_s=elapsed,
        samples_per_s=(config.sample_count / elapsed) if elapsed > 0 else 0.0,
        resamples=sum(res["resamples"] for res in results),
        worker_count=config.worker_count,
        kinds={k: kinds[k] for k in sorted(kinds)},
        dpi_bands={k: bands[k] for k in sorted(bands)},
        splits={k: splits[k] for k in sorted(splits)},
        timing={k: round(v, 4) for k, v in timing.items()},
    )
    (out / "stats.json").write_text(stats.to_json(), encoding="utf-8")
    return stats
