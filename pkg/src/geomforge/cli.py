"""Command-line front end: generate / eval / encode / decode / preview / inspect.

Configuration precedence for `generate`, highest first: command-line flags,
the GEOMFORGE_SEED environment variable (master_seed only), the config file,
built-in defaults. Exit codes: 0 success, 1 fatal configuration or I/O error,
2 when more than 1% of samples needed resampling.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import GeomforgeError
from .geom import KINDS, ShapeKind, sample_shape
from .language import describe_all
from .metrics import DEFAULT_BETA, evaluate_batch
from .pipeline import DpiPolicy, GenConfig, generate, sample_stream
from .polycodec import mask_to_tokens, tokens_to_mask
from .raster import BinaryMask
from .render import RenderStyle, render_pass
from .scene import build_scene, enumerate_targets

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_QUALITY = 2

RESAMPLE_FRACTION_LIMIT = 0.01


# ---------------------------------------------------------------------------
# Config assembly


def _parse_seq(text: str, conv) -> tuple:
    return tuple(conv(part.strip()) for part in text.split(",") if part.strip())


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (section, key) -> converter; section None means the [pipeline] section
# and the flat flag name.
_CONFIG_KEYS = {
    ("pipeline", "sample_count"): int,
    ("pipeline", "master_seed"): int,
    ("pipeline", "tau"): float,
    ("pipeline", "draw_diagonals_prob"): float,
    ("pipeline", "p_drop"): float,
    ("pipeline", "dilation_choices"): lambda s: _parse_seq(s, int),
    ("pipeline", "output_dir"): str,
    ("pipeline", "worker_count"): int,
    ("pipeline", "write_tikz"): _parse_bool,
    ("pipeline", "split_ratios"): lambda s: _parse_seq(s, float),
    ("dpi_policy", "high_fraction"): float,
    ("dpi_policy", "high_range"): lambda s: _parse_seq(s, int),
    ("dpi_policy", "low_range"): lambda s: _parse_seq(s, int),
    ("splits", "train"): float,
    ("splits", "val"): float,
    ("splits", "test"): float,
}


def load_config_file(path) -> dict:
    """Read an INI-style config; returns {(section, key): parsed value}."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            conv = _CONFIG_KEYS.get((section, key))
            if conv is None:
                raise GeomforgeError(
                    f"unknown config key [{section}] {key}")
            values[(section, key)] = conv(raw)
    return values


def _flag_name(section: str, key: str) -> str:
    return f"--{key}" if section == "pipeline" else f"--{section}.{key}"


def build_gen_config(config_path=None, flag_values=None,
                     env=None) -> GenConfig:
    """Merge defaults, config file, GEOMFORGE_SEED, and flags into a GenConfig."""
    env = os.environ if env is None else env
    merged = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
    if "GEOMFORGE_SEED" in env:
        merged[("pipeline", "master_seed")] = int(env["GEOMFORGE_SEED"])
    for (section, key), conv in _CONFIG_KEYS.items():
        raw = (flag_values or {}).get(_flag_name(section, key))
        if raw is not None:
            merged[(section, key)] = conv(raw)

    kwargs = {key: value for (section, key), value in merged.items()
              if section == "pipeline"}
    policy_kwargs = {key: value for (section, key), value in merged.items()
                     if section == "dpi_policy"}
    if policy_kwargs:
        kwargs["dpi_policy"] = DpiPolicy(**policy_kwargs)
    split_kwargs = {key: value for (section, key), value in merged.items()
                    if section == "splits"}
    if split_kwargs:
        ratios = dict(zip(("train", "val", "test"), GenConfig().split_ratios))
        ratios.update(split_kwargs)
        kwargs["split_ratios"] = (ratios["train"], ratios["val"], ratios["test"])
    return GenConfig(**kwargs)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_generate(args) -> int:
    flag_values = {name: getattr(args, dest) for name, dest in _GEN_FLAGS}
    config = build_gen_config(args.config, flag_values)
    stats = generate(config)
    print(f"generated {stats.sample_count} samples in {stats.elapsed_s:.1f} s "
          f"({stats.samples_per_s:.2f}/s, {stats.worker_count} worker(s), "
          f"{stats.resamples} resamples)")
    print(f"kinds: {stats.kinds}")
    print(f"dpi bands: {stats.dpi_bands}   splits: {stats.splits}")
    if stats.resample_fraction > RESAMPLE_FRACTION_LIMIT:
        print(f"resample fraction {stats.resample_fraction:.3f} exceeds "
              f"{RESAMPLE_FRACTION_LIMIT}", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = evaluate_batch(args.manifest, args.predictions, beta=args.beta)
    print(report.to_table())
    if args.json_out:
        Path(args.json_out).write_text(report.to_json(), encoding="utf-8")
        print(f"wrote {args.json_out}")
    return EXIT_OK


def _cmd_encode(args) -> int:
    mask = BinaryMask.load_png(args.mask)
    seq = mask_to_tokens(mask, args.epsilon)
    if args.out:
        Path(args.out).write_text(seq + "\n", encoding="utf-8")
    else:
        print(seq)
    return EXIT_OK


def _cmd_decode(args) -> int:
    if args.tokens is not None:
        text = args.tokens
    elif args.tokens_file is not None:
        text = Path(args.tokens_file).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    mask = tokens_to_mask(text, args.width, args.height)
    mask.save_png(args.out)
    print(f"wrote {args.out} ({mask.width_px}x{mask.height_px}, "
          f"{mask.foreground_count} foreground px)")
    return EXIT_OK


def _cmd_preview(args) -> int:
    rng = sample_stream(args.seed, 0)
    kind = ShapeKind(args.kind) if args.kind else \
        KINDS[int(rng.integers(len(KINDS)))]
    shape = sample_shape(kind, rng)
    scene = build_scene(shape, draw_diagonals=args.diagonals)
    targets = enumerate_targets(scene)
    if not 0 <= args.target < len(targets):
        raise GeomforgeError(
            f"target index {args.target} out of range; scene has "
            f"{len(targets)} targets")
    target = targets[args.target]
    style = RenderStyle(dpi=args.dpi)
    image = render_pass(scene, style, highlight=target)
    image.save_png(args.out)
    print(f"wrote {args.out}: {kind.value}, target {target.element_id} "
          f"({target.target_kind}), {image.width_px}x{image.height_px}px")
    for expr in describe_all(target, scene, rng):
        print(f"  [{expr.level.value}] {expr.text}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    rows = []
    with open(args.manifest, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    kinds, splits, bands = {}, {}, {}
    dpis, target_counts = [], []
    for row in rows:
        kinds[row["shape_kind"]] = kinds.get(row["shape_kind"], 0) + 1
        splits[row["split"]] = splits.get(row["split"], 0) + 1
        bands[row["dpi_band"]] = bands.get(row["dpi_band"], 0) + 1
        dpis.append(row["dpi"])
        target_counts.append(len(row["targets"]))
    print(f"samples: {len(rows)}")
    for title, counts in (("kind", kinds), ("split", splits),
                          ("dpi_band", bands)):
        print(f"[{title}]")
        for name in sorted(counts):
            share = counts[name] / len(rows) if rows else 0.0
            print(f"  {name:<22} {counts[name]:>7}  ({share:6.1%})")
    if dpis:
        print(f"dpi: min {min(dpis)}  max {max(dpis)}  "
              f"mean {np.mean(dpis):.1f}")
        print(f"targets per sample: min {min(target_counts)}  "
              f"max {max(target_counts)}  mean {np.mean(target_counts):.2f}")
    stats_path = args.stats or str(Path(args.manifest).parent / "stats.json")
    if Path(stats_path).exists():
        stats = json.loads(Path(stats_path).read_text(encoding="utf-8"))
        timing = stats.get("timing", {})
        print(f"timing: elapsed {stats.get('elapsed_s', 0.0):.1f} s  "
              f"({stats.get('samples_per_s', 0.0):.2f} samples/s)")
        print(f"  solve {timing.get('solve_s', 0.0):.1f} s  "
              f"render {timing.get('render_s', 0.0):.1f} s  "
              f"masks {timing.get('masks_s', 0.0):.1f} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


_GEN_FLAGS = [(_flag_name(section, key),
               _flag_name(section, key).lstrip("-").replace(".", "__"))
              for (section, key) in _CONFIG_KEYS]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomforge",
        description="Constraint-solved quadrilateral diagrams with aligned "
                    "masks, referring expressions, and evaluation metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="run the dataset pipeline")
    p_gen.add_argument("--config", help="INI config file")
    aliases = {"--sample_count": ["--count"], "--master_seed": ["--seed"]}
    for flag, dest in _GEN_FLAGS:
        p_gen.add_argument(flag, *aliases.get(flag, []), dest=dest,
                           metavar="VALUE")
    p_gen.set_defaults(func=_cmd_generate)

    p_eval = sub.add_parser("eval", help="score predictions against a manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p_eval.add_argument("--json-out", help="also write the report as JSON")
    p_eval.set_defaults(func=_cmd_eval)

    p_enc = sub.add_parser("encode", help="mask PNG -> polygon token sequence")
    p_enc.add_argument("--mask", required=True)
    p_enc.add_argument("--epsilon", type=float, default=None,
                       help="simplification tolerance in px (default: adaptive)")
    p_enc.add_argument("--out", help="write tokens here instead of stdout")
    p_enc.set_defaults(func=_cmd_encode)

    p_dec = sub.add_parser("decode", help="polygon token sequence -> mask PNG")
    p_dec.add_argument("--tokens", help="token text (default: stdin)")
    p_dec.add_argument("--tokens-file", help="file containing token text")
    p_dec.add_argument("--width", type=int, required=True)
    p_dec.add_argument("--height", type=int, required=True)
    p_dec.add_argument("--out", required=True)
    p_dec.set_defaults(func=_cmd_decode)

    p_prev = sub.add_parser("preview",
                            help="render one sample with its target highlighted")
    p_prev.add_argument("--seed", type=int, default=0)
    p_prev.add_argument("--kind", choices=[k.value for k in KINDS])
    p_prev.add_argument("--dpi", type=int, default=150)
    p_prev.add_argument("--diagonals", action="store_true")
    p_prev.add_argument("--target", type=int, default=0,
                        help="index into the scene's target list")
    p_prev.add_argument("--out", default="preview.png")
    p_prev.set_defaults(func=_cmd_preview)

    p_insp = sub.add_parser("inspect", help="print manifest statistics")
    p_insp.add_argument("--manifest", required=True)
    p_insp.add_argument("--stats", help="stats.json path (default: sibling)")
    p_insp.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GeomforgeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
