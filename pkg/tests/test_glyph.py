import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ambigram.errors import MalformedFont, MissingGlyph, ShapeMismatch, TopologyMismatch, UnsupportedSvgFeature
from ambigram.fonts import load_font_glyph, raw_outline
from ambigram.glyph import (
    BezierPath,
    Glyph,
    GlyphSequence,
    Placement,
    line_to_cubic,
    quad_to_cubic,
    random_glyph,
    rotate180,
    square_glyph,
)
from ambigram.svg import from_svg, to_svg

from conftest import FONT

seeds = st.integers(0, 2**32 - 1)


def test_rotate180_maps_quarter_point():
    g = Glyph((BezierPath(np.array([[0.25, 0.25], [0.5, 0.25], [0.5, 0.5]])),))
    assert np.allclose(rotate180(g).flat_points()[0], [0.75, 0.75])


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_rotate180_is_involution(seed):
    g = random_glyph(np.random.default_rng(seed))
    back = rotate180(rotate180(g)).flat_points()
    assert np.max(np.abs(back - g.flat_points())) <= 1e-12
    assert rotate180(g).path_sizes == g.path_sizes


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_rotate180_bbox(seed):
    g = random_glyph(np.random.default_rng(seed))
    x0, y0, x1, y1 = g.bbox()
    assert np.allclose(rotate180(g).bbox(), (1 - x1, 1 - y1, 1 - x0, 1 - y0), atol=1e-12)


def test_path_closure_is_validated():
    seg = np.array([[[0, 0], [0.1, 0], [0.2, 0], [0.3, 0]], [[0.3, 0.0], [0.3, 0.1], [0.1, 0.1], [0.05, 0.0]]])
    with pytest.raises(ValueError):
        BezierPath.from_segments(seg)
    with pytest.raises(ShapeMismatch):
        BezierPath(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        BezierPath(np.array([[0, 0], [np.nan, 0], [1, 1]]))


@given(seeds, st.floats(-0.3, 0.3), st.floats(0.5, 1.5))
@settings(max_examples=30, deadline=None)
def test_affine_preserves_count_and_closure(seed, shift, scale):
    g = random_glyph(np.random.default_rng(seed))
    t = g.translate(shift, -shift).scale(scale, (0.5, 0.5))
    assert t.n_points == g.n_points
    for p in t.paths:
        seg = p.segments
        assert np.allclose(seg[:-1, 3], seg[1:, 0], atol=1e-9)
        assert np.allclose(seg[-1, 3], seg[0, 0], atol=1e-9)


def test_with_points_checks_topology():
    g = square_glyph()
    with pytest.raises(TopologyMismatch):
        g.with_points(np.zeros((5, 2)))


def test_line_elevation_handles_at_thirds():
    p0, p1 = np.array([0.1, 0.2]), np.array([0.7, 0.5])
    c = line_to_cubic(p0, p1)
    for t, k in ((1 / 3, 1), (2 / 3, 2)):
        assert np.allclose(c[k], p0 + t * (p1 - p0), atol=1e-15)
    assert np.array_equal(c[0], p0) and np.array_equal(c[3], p1)


def test_quad_elevation_matches_curve():
    p0, q, p1 = np.array([0.0, 0.0]), np.array([0.5, 1.0]), np.array([1.0, 0.0])
    c = quad_to_cubic(p0, q, p1)
    for t in np.linspace(0, 1, 11):
        quad = (1 - t) ** 2 * p0 + 2 * t * (1 - t) * q + t**2 * p1
        cub = (1 - t) ** 3 * c[0] + 3 * (1 - t) ** 2 * t * c[1] + 3 * (1 - t) * t**2 * c[2] + t**3 * c[3]
        assert np.allclose(quad, cub, atol=1e-14)


def test_sequence_cell_glyph_is_local():
    g = square_glyph()
    seq = GlyphSequence((g, g), (Placement(0, 0, 1), Placement(1, 0, 1)))
    assert np.allclose(seq.cell_glyph(1).flat_points(), g.flat_points())
    assert seq.word_glyph().bbox()[2] == pytest.approx(1.75)
    with pytest.raises(ShapeMismatch):
        GlyphSequence((g,), ())


# fonts

def test_font_letter_is_centered_with_margin():
    g = load_font_glyph(FONT, "O", "upper")
    x0, y0, x1, y1 = g.bbox()
    assert ((x0 + x1) / 2, (y0 + y1) / 2) == pytest.approx((0.5, 0.5), abs=1e-9)
    assert max(x1 - x0, y1 - y0) == pytest.approx(0.8, abs=1e-9)


def test_font_letter_keeps_aspect():
    contours = raw_outline(FONT, "I")
    pts = np.concatenate([c.reshape(-1, 2) for c in contours])
    # 'I' in DejaVu Sans is a plain rectangle, so the control-point bbox is the outline bbox
    raw_aspect = np.ptp(pts[:, 0]) / np.ptp(pts[:, 1])
    x0, y0, x1, y1 = load_font_glyph(FONT, "I").bbox()
    assert (x1 - x0) / (y1 - y0) == pytest.approx(raw_aspect, rel=1e-9)


def test_font_case_override():
    assert load_font_glyph(FONT, "a", "upper") == load_font_glyph(FONT, "A")


def test_font_errors(tmp_path):
    with pytest.raises(MissingGlyph):
        load_font_glyph(FONT, "中")
    bad = tmp_path / "bad.ttf"
    bad.write_bytes(b"not a font at all")
    with pytest.raises(MalformedFont):
        load_font_glyph(str(bad), "A")


# SVG

def test_square_round_trip_exact():
    g = square_glyph()
    back = from_svg(to_svg(g))
    assert back.paths[0].n_segments == 4
    assert np.array_equal(back.flat_points(), g.flat_points())


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_svg_round_trip(seed):
    g = random_glyph(np.random.default_rng(seed))
    back = from_svg(to_svg(g))
    assert back.path_sizes == g.path_sizes
    assert np.max(np.abs(back.flat_points() - g.flat_points())) <= 1e-6


def test_svg_round_trip_font_glyph():
    g = load_font_glyph(FONT, "B")
    assert np.max(np.abs(from_svg(to_svg(g)).flat_points() - g.flat_points())) <= 1e-6


SVG_HEAD = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1">'


@pytest.mark.parametrize(
    "body",
    [
        '<path d="M 0 0 A 0.5 0.5 0 0 1 1 1 Z"/>',
        '<path d="M 0 0 Q 0.5 1 1 0 Z"/>',
        '<path d="M 0 0 L 1 0 L 1 1 Z" fill="url(#g)"/>',
        '<g transform="rotate(30)"><path d="M 0 0 L 1 0 L 1 1 Z"/></g>',
        '<circle cx="0.5" cy="0.5" r="0.2"/>',
        '<path d="M 0 0 L 1 0 L 1 1 Z" fill-rule="evenodd"/>',
    ],
)
def test_svg_unsupported(body):
    with pytest.raises(UnsupportedSvgFeature):
        from_svg(SVG_HEAD + body + "</svg>")


def test_svg_relative_commands_and_transforms():
    text = SVG_HEAD + '<g transform="translate(0.1,0) scale(0.5)"><path d="m 0 0 h 1 v 1 l -1 0 z"/></g></svg>'
    g = from_svg(text)
    assert g.bbox() == pytest.approx((0.1, 0.0, 0.6, 0.5))
