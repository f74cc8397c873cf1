"""Morphology tests against a brute-force disk-sweep oracle."""

import numpy as np
import pytest
from scipy import ndimage

from geomforge.errors import DimensionMismatch, ParamOutOfRange
from geomforge.geom import ShapeKind, sample_shape
from geomforge.morphology import (
    ElasticField,
    StructuringElement,
    close,
    dilate,
    elastic_deform,
    erode,
    make_elastic_field,
    thin,
)
from geomforge.raster import BinaryMask, RasterImage

EIGHT = np.ones((3, 3), dtype=int)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def mask_of(bits):
    return BinaryMask.from_array(np.asarray(bits, dtype=np.uint8))


def random_mask(rng, shape=(32, 32), density=0.3):
    return mask_of(rng.random(shape) < density)


def shift(a, dy, dx):
    out = np.zeros_like(a)
    h, w = a.shape
    ys = slice(max(0, dy), h + min(0, dy))
    xs = slice(max(0, dx), w + min(0, dx))
    ys_src = slice(max(0, -dy), h + min(0, -dy))
    xs_src = slice(max(0, -dx), w + min(0, -dx))
    out[ys, xs] = a[ys_src, xs_src]
    return out


def disk_offsets(r):
    rr = int(np.ceil(r))
    return [(dy, dx) for dy in range(-rr, rr + 1) for dx in range(-rr, rr + 1)
            if dy * dy + dx * dx <= r * r]


def dilate_bf(bits, r):
    acc = np.zeros_like(bits, dtype=bool)
    for dy, dx in disk_offsets(r):
        acc |= shift(bits.astype(bool), dy, dx)
    return acc


def erode_bf(bits, r):
    acc = np.ones_like(bits, dtype=bool)
    for dy, dx in disk_offsets(r):
        acc &= shift(bits.astype(bool), -dy, -dx)
    return acc


def test_disk_element():
    assert len(StructuringElement(2).offsets()) == 13
    assert StructuringElement(1).contains(0, 1)
    assert not StructuringElement(1).contains(1, 1)
    with pytest.raises(ParamOutOfRange):
        StructuringElement(0)


def test_against_brute_force_oracle():
    rng = rng_for(50)
    for case in range(50):
        m = random_mask(rng)
        r = int(rng.integers(1, 4))
        assert np.array_equal(dilate(m, r).bits.astype(bool),
                              dilate_bf(m.bits, r))
        assert np.array_equal(erode(m, r).bits.astype(bool),
                              erode_bf(m.bits, r))
        assert np.array_equal(close(m, r).bits.astype(bool),
                              erode_bf(dilate_bf(m.bits, r), r))


def test_radius_zero_is_identity():
    m = random_mask(rng_for(51))
    assert np.array_equal(dilate(m, 0).bits, m.bits)
    assert np.array_equal(erode(m, 0).bits, m.bits)


def test_single_pixel_disk():
    bits = np.zeros((9, 9), dtype=np.uint8)
    bits[4, 4] = 1
    out = dilate(mask_of(bits), 2)
    assert out.foreground_count == 13
    for dy, dx in disk_offsets(2):
        assert out.bits[4 + dy, 4 + dx] == 1


def test_saturation_and_border():
    ones = mask_of(np.ones((16, 16)))
    assert dilate(ones, 3).foreground_count == 16 * 16
    eroded = erode(ones, 2).bits
    assert np.all(eroded[2:-2, 2:-2] == 1)
    assert eroded.sum() == 12 * 12


def test_duality_away_from_border():
    # complement duality is exact once the frame plays no role, which the
    # canvas margin guarantees for rendered masks
    rng = rng_for(52)
    for _ in range(20):
        bits = np.zeros((32, 32), dtype=np.uint8)
        bits[4:-4, 4:-4] = (rng.random((24, 24)) < 0.3)
        m = mask_of(bits)
        r = int(rng.integers(1, 4))
        comp = mask_of(1 - m.bits)
        dual = 1 - dilate(comp, r).bits
        assert np.array_equal(erode(m, r).bits, dual)


def test_close_fills_pinhole_and_is_idempotent():
    bits = np.zeros((16, 16), dtype=np.uint8)
    bits[4:12, 4:12] = 1
    bits[8, 8] = 0
    closed = close(mask_of(bits), 2)
    assert closed.bits[8, 8] == 1
    rng = rng_for(53)
    for _ in range(10):
        m = random_mask(rng)
        once = close(m, 2)
        twice = close(once, 2)
        assert np.array_equal(once.bits, twice.bits)


def test_monotonicity_and_extensivity():
    rng = rng_for(54)
    for _ in range(20):
        big = random_mask(rng)
        small = mask_of(big.bits & (rng.random(big.bits.shape) < 0.5))
        r = int(rng.integers(0, 4))
        d_small = dilate(small, r).bits
        d_big = dilate(big, r).bits
        assert not np.any(d_small & ~d_big)
        assert not np.any(big.bits & ~d_big)
        assert not np.any(erode(big, r).bits & ~big.bits)


def test_dilation_composition_sandwich():
    rng = rng_for(55)
    for a, b in ((1, 1), (1, 2), (2, 2)):
        for _ in range(10):
            m = random_mask(rng, density=0.1)
            composed = dilate(dilate(m, a), b).bits
            outer = dilate(m, a + b).bits
            inner = dilate(m, a + b - 1).bits
            assert not np.any(composed & ~outer)
            assert not np.any(inner & ~composed)


def test_thin_bar_to_line():
    bits = np.zeros((8, 32), dtype=np.uint8)
    bits[3:6, 2:30] = 1
    out = thin(mask_of(bits)).bits
    rows = np.flatnonzero(out.any(axis=1))
    assert len(rows) == 1
    cols = np.flatnonzero(out.any(axis=0))
    assert abs(cols.min() - 2) <= 1
    assert abs(cols.max() - 29) <= 1


def test_thin_trivial_and_fixed_point():
    empty = mask_of(np.zeros((16, 16)))
    assert thin(empty).foreground_count == 0
    line = np.zeros((16, 16), dtype=np.uint8)
    line[8, 2:14] = 1
    thinned = thin(mask_of(line)).bits
    assert np.array_equal(thinned, line)
    rng = rng_for(56)
    for _ in range(10):
        m = random_mask(rng, density=0.4)
        once = thin(m)
        assert np.array_equal(thin(once).bits, once.bits)


def test_thin_preserves_components_and_support():
    rng = rng_for(57)
    for _ in range(50):
        m = random_mask(rng, density=0.35)
        out = thin(m)
        assert not np.any(out.bits & ~m.bits)
        _, n_before = ndimage.label(m.bits, structure=EIGHT)
        _, n_after = ndimage.label(out.bits, structure=EIGHT)
        assert n_before == n_after
    block = np.zeros((8, 8), dtype=np.uint8)
    block[4:6, 4:6] = 1
    assert thin(mask_of(block)).foreground_count > 0


def test_elastic_zero_field_is_identity():
    img = RasterImage.from_array(
        rng_for(58).integers(0, 256, size=(40, 40, 3)).astype(np.uint8))
    m = random_mask(rng_for(59), shape=(40, 40))
    zero = ElasticField(dx=np.zeros((40, 40)), dy=np.zeros((40, 40)),
                        alpha=2.0, sigma=8.0)
    out_img, (out_m,) = elastic_deform(img, [m], zero)
    assert np.array_equal(out_img.pixels, img.pixels)
    assert np.array_equal(out_m.bits, m.bits)


def test_elastic_unit_shift_translates():
    rng = rng_for(60)
    img = RasterImage.from_array(
        rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8))
    m = random_mask(rng, shape=(32, 32))
    field = ElasticField(dx=np.ones((32, 32)), dy=np.zeros((32, 32)),
                         alpha=1.0, sigma=1.0)
    out_img, (out_m,) = elastic_deform(img, [m], field)
    assert np.array_equal(out_img.pixels[:, :-1], img.pixels[:, 1:])
    assert np.array_equal(out_m.bits[:, :-1], m.bits[:, 1:])


def test_elastic_field_invariants():
    field = make_elastic_field((40, 40), rng_for(61))
    assert float(np.hypot(field.dx, field.dy).max()) <= 2.0 + 1e-9
    with pytest.raises(ParamOutOfRange):
        ElasticField(dx=np.full((4, 4), 5.0), dy=np.zeros((4, 4)),
                     alpha=2.0, sigma=8.0)
    with pytest.raises(DimensionMismatch):
        ElasticField(dx=np.zeros((4, 4)), dy=np.zeros((5, 4)),
                     alpha=2.0, sigma=8.0)


def test_elastic_dimension_check():
    img = RasterImage.from_array(np.full((32, 32, 3), 255, dtype=np.uint8))
    m = random_mask(rng_for(62), shape=(16, 16))
    zero = ElasticField(dx=np.zeros((32, 32)), dy=np.zeros((32, 32)),
                        alpha=2.0, sigma=8.0)
    with pytest.raises(DimensionMismatch):
        elastic_deform(img, [m], zero)


def test_elastic_preserves_mask_image_alignment():
    from geomforge.render import RenderStyle, render_mask, render_scene
    from geomforge.scene import build_scene, enumerate_targets
    scene = build_scene(sample_shape(ShapeKind.SQUARE, rng_for(63)))
    style = RenderStyle(dpi=72)
    img = render_scene(scene, style)
    target = enumerate_targets(scene)[0]
    m = render_mask(scene, target, style)
    field = make_elastic_field((img.height_px, img.width_px), rng_for(64))
    out_img, (out_m,) = elastic_deform(img, [m], field)
    assert out_m.foreground_count > 0
    ink = mask_of(np.any(out_img.pixels != 255, axis=-1))
    allowed = dilate(ink, 2).bits
    assert not np.any(out_m.bits & ~allowed)
