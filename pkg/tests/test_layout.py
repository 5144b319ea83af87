import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ambigram.errors import EmptyImage, MissingGlyph, ShapeMismatch
from ambigram.fonts import load_font_glyph
from ambigram.glyph import BezierPath, Glyph, line_to_cubic, random_glyph, rotate180, square_glyph
from ambigram.layout import (
    AlignmentScheme,
    AmbigramTask,
    alignment_shift,
    binarize,
    init_letter_pair,
    layout_word,
)
from ambigram.raster import rasterize

import oracles
from conftest import FONT


def test_scheme_enum_is_exhaustive():
    assert {s.value for s in AlignmentScheme} == {"naive", "max-overlap", "contact-left", "contact-right"}
    assert AlignmentScheme.parse("MaxOverlap") is AlignmentScheme.MAX_OVERLAP
    assert AlignmentScheme.parse("contact_left") is AlignmentScheme.CONTACT_LEFT


def test_naive_is_zero(rng):
    a = rng.uniform(size=(8, 8)) > 0.5
    assert alignment_shift(a, a, "naive") == (0.0, 0.0)


def test_identical_images_max_overlap_zero(rng):
    a = rng.uniform(size=(12, 12)) > 0.6
    assert alignment_shift(a, a, AlignmentScheme.MAX_OVERLAP) == (0.0, 0.0)


def test_single_pixels_max_overlap():
    a = np.zeros((16, 16), bool)
    b = np.zeros((16, 16), bool)
    a[3, 2] = True  # (x=2, y=3)
    b[7, 5] = True  # (x=5, y=7)
    assert alignment_shift(a, b, "max-overlap") == (-3.0, -4.0)
    assert oracles.brute_max_overlap(a, b) == (-3, -4)


def test_vertical_bars_contact_left():
    a = np.zeros((32, 32), bool)
    b = np.zeros((32, 32), bool)
    a[:, 10] = True
    b[:, 20] = True
    assert oracles.brute_contact_extremes(a, b)[0] == -10
    dx, dy = alignment_shift(a, b, "contact-left")
    assert dx == pytest.approx(-7.0) and dy == 0.0
    assert alignment_shift(a, b, "contact-right")[0] == pytest.approx(-7.0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_max_overlap_equals_brute_force(seed):
    r = np.random.default_rng(seed)
    a = r.uniform(size=(10, 10)) < r.uniform(0.05, 0.5)
    b = r.uniform(size=(10, 10)) < r.uniform(0.05, 0.5)
    a[r.integers(10), r.integers(10)] = True
    b[r.integers(10), r.integers(10)] = True
    assert alignment_shift(a, b, "max-overlap") == tuple(float(v) for v in oracles.brute_max_overlap(a, b))


def _disk(cx, cy, r, n=24):
    yy, xx = np.mgrid[:n, :n]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_contact_shift_keeps_overlap_for_convex_blobs(seed):
    r = np.random.default_rng(seed)
    a = _disk(*r.uniform(9, 15, size=2), r.uniform(3, 7))
    b = _disk(*r.uniform(9, 15, size=2), r.uniform(3, 7))
    if not (a & b).any():
        return
    for scheme in ("contact-left", "contact-right"):
        dx, dy = alignment_shift(a, b, scheme)
        lo, hi = oracles.brute_contact_extremes(a, b)
        assert dx == pytest.approx(0.7 * (lo if scheme == "contact-left" else hi))
        # rounding to the pixel grid the shrunken shift still overlaps
        assert oracles.brute_overlap(a, b, int(round(dx)), 0) >= 1


def test_alignment_errors():
    z = np.zeros((8, 8), bool)
    o = np.ones((8, 8), bool)
    with pytest.raises(EmptyImage):
        alignment_shift(z, o, "max-overlap")
    with pytest.raises(ShapeMismatch):
        alignment_shift(o, np.ones((8, 9), bool), "naive")


def test_init_pair_point_count():
    ga = load_font_glyph(FONT, "N")
    gb = load_font_glyph(FONT, "S")
    for scheme in AlignmentScheme:
        g = init_letter_pair("N", "S", FONT, scheme)
        assert g.n_points == ga.n_points + gb.n_points


def test_init_pair_o_is_symmetric():
    g = init_letter_pair("O", "O", FONT, "naive")
    img = rasterize(g).numpy()
    assert np.abs(img - np.rot90(img, 2)).mean() < 2e-2


def test_scheme_only_translates_rotated_component():
    a = load_font_glyph(FONT, "b", "lower")
    for scheme in AlignmentScheme:
        g = init_letter_pair("b", "q", FONT, scheme, "lower", "lower", fit_canvas=False)
        na = a.n_points
        assert np.array_equal(g.flat_points()[:na], a.flat_points())
        rotated = rotate180(load_font_glyph(FONT, "q", "lower")).flat_points()
        delta = g.flat_points()[na:] - rotated
        assert np.allclose(delta, delta[0], atol=1e-12)
        expected = alignment_shift(binarize(a), binarize(rotate180(load_font_glyph(FONT, "q", "lower"))), scheme)
        assert np.allclose(delta[0] * 64, expected, atol=1e-9)


def test_init_pair_missing_glyph():
    with pytest.raises(MissingGlyph):
        init_letter_pair("A", "\u4e00", FONT, "naive")


def test_layout_word_cells():
    gs = [load_font_glyph(FONT, c) for c in "WORD"]
    seq = layout_word(gs)
    for n in range(4):
        x0, y0, x1, y1 = seq.cell_glyph(n).bbox()
        assert 0 - 1e-9 <= x0 and x1 <= 1 + 1e-9
        assert (x0 + x1) / 2 == pytest.approx(0.5) and (y0 + y1) / 2 == pytest.approx(0.5)
        assert max(x1 - x0, y1 - y0) == pytest.approx(1.0)
    x0, _, x1, _ = seq.word_glyph().bbox()
    assert x1 <= 4 + 1e-9


def _rect(w, h):
    c = [(0.5 - w / 2, 0.5 - h / 2), (0.5 + w / 2, 0.5 - h / 2), (0.5 + w / 2, 0.5 + h / 2), (0.5 - w / 2, 0.5 + h / 2)]
    return Glyph((BezierPath.from_segments([line_to_cubic(c[i], c[(i + 1) % 4]) for i in range(4)]),))


def test_layout_wide_and_square_glyphs():
    seq = layout_word([_rect(0.4, 0.2), _rect(0.3, 0.3)])
    x0, y0, x1, y1 = seq.cell_glyph(0).bbox()
    assert (x1 - x0, y1 - y0) == pytest.approx((1.0, 0.5))
    assert seq.cell_glyph(1).bbox() == pytest.approx((0, 0, 1, 1), abs=1e-12)


@given(st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_layout_depends_only_on_bbox(seed):
    g = random_glyph(np.random.default_rng(seed))
    x0, y0, x1, y1 = g.bbox()
    box = _rect(x1 - x0, y1 - y0).translate((x0 + x1) / 2 - 0.5, (y0 + y1) / 2 - 0.5)
    p1 = layout_word([g]).placements[0]
    p2 = layout_word([box]).placements[0]
    assert (p1.tx, p1.ty, p1.scale) == pytest.approx((p2.tx, p2.ty, p2.scale), abs=1e-12)


def test_task_validation():
    t = AmbigramTask("swim", "miws")
    assert t.letter_pair(0) == ("s", "s")
    assert t.case_options(0) == [("lower", "lower")]
    assert len(AmbigramTask("ab", "cd", "try-both").case_options(1)) == 4
    with pytest.raises(ShapeMismatch):
        AmbigramTask("abc", "ab")
    with pytest.raises(ValueError):
        AmbigramTask("", "")
    with pytest.raises(ValueError):
        AmbigramTask("a1", "bc")
