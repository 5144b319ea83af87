"""TrueType/OpenType outline ingestion."""

from __future__ import annotations

import functools
import os
from pathlib import Path

import numpy as np
from fontTools.pens.basePen import BasePen
from fontTools.ttLib import TTFont, TTLibError

from .errors import MalformedFont, MissingGlyph
from .glyph import BezierPath, Glyph, line_to_cubic, orient_positive, quad_to_cubic

MARGIN = 0.1

_FONT_DIRS = ("/usr/share/fonts", "/usr/local/share/fonts", "~/.fonts", "/Library/Fonts")


class _CubicPen(BasePen):
    """Collects closed contours as cubic segments (lines and quadratics elevated)."""

    def __init__(self, glyphset):
        super().__init__(glyphset)
        self.contours = []
        self._segs = []
        self._start = None
        self._cur = None

    def _moveTo(self, pt):
        self._flush()
        self._start = self._cur = np.asarray(pt, float)

    def _lineTo(self, pt):
        p = np.asarray(pt, float)
        if np.array_equal(p, self._cur):
            return
        self._segs.append(line_to_cubic(self._cur, p))
        self._cur = p

    def _curveToOne(self, p1, p2, p3):
        seg = np.array([self._cur, p1, p2, p3], float)
        self._segs.append(seg)
        self._cur = seg[3]

    def _qCurveToOne(self, p1, p2):
        seg = quad_to_cubic(self._cur, p1, p2)
        self._segs.append(seg)
        self._cur = seg[3]

    def _closePath(self):
        if self._segs and not np.array_equal(self._cur, self._start):
            self._segs.append(line_to_cubic(self._cur, self._start))
        self._flush()

    _endPath = _closePath

    def _flush(self):
        if self._segs:
            segs = np.array(self._segs)
            segs[-1, 3] = segs[0, 0]
            self.contours.append(segs)
        self._segs = []


def find_font(name: str) -> Path:
    """Resolve a font file path or a bare file name found in the system font dirs."""
    p = Path(os.path.expanduser(name))
    if p.exists():
        return p
    names = [p.name] if p.suffix else [p.name + ext for ext in (".ttf", ".otf")]
    for root in _FONT_DIRS:
        root = Path(os.path.expanduser(root))
        if root.is_dir():
            for n in names:
                for cand in sorted(root.rglob(n)):
                    return cand
    raise FileNotFoundError(f"font not found: {name}")


@functools.lru_cache(maxsize=16)
def _open_font(path: str) -> TTFont:
    try:
        font = TTFont(path, lazy=True)
        font.getGlyphSet()
        font.getBestCmap()
    except (TTLibError, OSError, KeyError, AssertionError) as exc:
        raise MalformedFont(f"cannot parse font {path}: {exc}") from exc
    return font


def raw_outline(font_source, character: str) -> list:
    """Contours of ``character`` in font units (y up), as lists of (K, 4, 2) arrays."""
    path = str(find_font(str(font_source)))
    font = _open_font(path)
    cmap = font.getBestCmap() or {}
    name = cmap.get(ord(character))
    if name is None:
        raise MissingGlyph(f"{Path(path).name} has no glyph for {character!r}")
    pen = _CubicPen(font.getGlyphSet())
    try:
        font.getGlyphSet()[name].draw(pen)
    except Exception as exc:  # fontTools raises a zoo of errors on broken tables
        raise MalformedFont(f"cannot read outline of {character!r}: {exc}") from exc
    pen._flush()
    if not pen.contours:
        raise MissingGlyph(f"{Path(path).name} has an empty outline for {character!r}")
    return pen.contours


def normalize_contours(contours, margin: float = MARGIN) -> Glyph:
    """Flip to y-down and fit the outline bbox centred in the unit canvas."""
    paths = [BezierPath.from_segments(c * np.array([1.0, -1.0])) for c in contours]
    g = Glyph(tuple(paths))
    x0, y0, x1, y1 = g.bbox()
    s = (1.0 - 2 * margin) / max(x1 - x0, y1 - y0)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    g = g.with_points((g.flat_points() - [cx, cy]) * s + 0.5)
    return orient_positive(g)


@functools.lru_cache(maxsize=1024)
def load_font_glyph(font_source, character: str, case: str | None = None) -> Glyph:
    """Load a letter outline, normalized into the unit canvas with a 10% margin.

    ``case`` ('upper'/'lower') overrides the case of ``character`` when given.
    """
    if case == "upper":
        character = character.upper()
    elif case == "lower":
        character = character.lower()
    elif case is not None:
        raise ValueError(f"case must be 'upper' or 'lower', got {case!r}")
    return normalize_contours(raw_outline(font_source, character))
