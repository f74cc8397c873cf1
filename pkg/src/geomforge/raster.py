"""8-bit raster containers and PNG I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, ParamOutOfRange

MIN_DIM_PX = 32

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Row-major RGB image, 8 bits per channel."""

    width_px: int
    height_px: int
    pixels: np.ndarray  # (height_px, width_px, 3) uint8

    def __post_init__(self):
        if self.width_px < MIN_DIM_PX or self.height_px < MIN_DIM_PX:
            raise ParamOutOfRange(
                f"image dims {self.width_px}x{self.height_px} below the "
                f"{MIN_DIM_PX} px minimum")
        if self.pixels.shape != (self.height_px, self.width_px, 3):
            raise DimensionMismatch(
                f"pixel buffer {self.pixels.shape} does not match "
                f"{self.height_px}x{self.width_px}x3")
        if self.pixels.dtype != np.uint8:
            raise DimensionMismatch("pixel buffer must be uint8")

    @staticmethod
    def from_array(pixels: np.ndarray) -> "RasterImage":
        pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
        h, w = pixels.shape[:2]
        return RasterImage(width_px=w, height_px=h, pixels=pixels)

    def save_png(self, path: PathLike) -> None:
        Image.fromarray(self.pixels, mode="RGB").save(path, format="PNG")

    @staticmethod
    def load_png(path: PathLike) -> "RasterImage":
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        return RasterImage.from_array(arr)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Row-major binary mask; bits take values in {0, 1}."""

    width_px: int
    height_px: int
    bits: np.ndarray  # (height_px, width_px) uint8

    def __post_init__(self):
        if self.bits.shape != (self.height_px, self.width_px):
            raise DimensionMismatch(
                f"bit buffer {self.bits.shape} does not match "
                f"{self.height_px}x{self.width_px}")
        if self.bits.dtype != np.uint8:
            raise DimensionMismatch("bit buffer must be uint8")
        if self.bits.size and int(self.bits.max()) > 1:
            raise ParamOutOfRange("mask bits must be 0 or 1")

    @staticmethod
    def from_array(bits: np.ndarray) -> "BinaryMask":
        bits = np.ascontiguousarray(bits).astype(np.uint8, copy=False)
        h, w = bits.shape
        return BinaryMask(width_px=w, height_px=h, bits=bits)

    @property
    def foreground_count(self) -> int:
        return int(self.bits.sum())

    def save_png(self, path: PathLike) -> None:
        Image.fromarray(self.bits * np.uint8(255), mode="L").save(
            path, format="PNG")

    @staticmethod
    def load_png(path: PathLike) -> "BinaryMask":
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=np.uint8)
        return BinaryMask.from_array((arr > 127).astype(np.uint8))
