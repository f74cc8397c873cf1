"""Procedural quadrilateral diagrams with aligned masks, expressions, and metrics."""

from .errors import (CanvasOverflow, DegenerateAngle, DegenerateResult,
                     DimensionMismatch, GenerationExhausted, GeomforgeError,
                     InvalidPolygon, MalformedSequence, ManifestMismatch,
                     NotTangential, NoTemplate, ParamOutOfRange)
from .geom import KINDS, ShapeKind, sample_shape
from .language import LEVELS, ComplexityLevel, describe, describe_all
from .metrics import (EvalReport, biou_pixel, biou_polygon, evaluate_batch,
                      iou)
from .morphology import close, dilate, erode, thin
from .pipeline import DpiPolicy, GenConfig, generate, sample_stream, split_assign
from .polycodec import (decode_tokens, encode_tokens, extract_contours,
                        mask_to_tokens, quantize, rasterize_polygons,
                        rle_decode, rle_encode, simplify, tokens_to_mask)
from .raster import BinaryMask, RasterImage
from .render import (RenderStyle, channel_mask, emit_tikz, render_mask,
                     render_sample, render_scene)
from .scene import Scene, Target, build_scene, drop_non_target, enumerate_targets

__version__ = "0.1.0"
