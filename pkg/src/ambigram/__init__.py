"""Rotational ambigram synthesis by score-guided optimization of Bezier glyphs."""

from .glyph import BezierPath, Glyph, GlyphSequence, Placement, rotate180
from .layout import AlignmentScheme, AmbigramTask, alignment_shift, init_letter_pair, layout_word
from .raster import RasterImage, rasterize, rasterize_word

__version__ = "0.1.0"

__all__ = [
    "AlignmentScheme",
    "AmbigramTask",
    "BezierPath",
    "Glyph",
    "GlyphSequence",
    "Placement",
    "RasterImage",
    "alignment_shift",
    "init_letter_pair",
    "layout_word",
    "rasterize",
    "rasterize_word",
    "rotate180",
]
