"""Letter-pair initialization/alignment and word templates."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import EmptyImage, ShapeMismatch
from .fonts import MARGIN, load_font_glyph
from .glyph import Glyph, GlyphSequence, Placement, rotate180
from .raster import DEFAULT_RESOLUTION, rasterize
from .utils.validation import check_word

CONTACT_FACTOR = 0.7
BINARY_THRESHOLD = 0.5
CASE_POLICIES = ("as-given", "upper", "lower", "try-both")


class AlignmentScheme(str, enum.Enum):
    NAIVE = "naive"
    MAX_OVERLAP = "max-overlap"
    CONTACT_LEFT = "contact-left"
    CONTACT_RIGHT = "contact-right"

    @classmethod
    def parse(cls, value) -> "AlignmentScheme":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-").replace(" ", "-")
        aliases = {"maxoverlap": "max-overlap", "contactleft": "contact-left", "contactright": "contact-right"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class AmbigramTask:
    """Read ``word_a`` upright and ``word_b`` after a 180 degree turn."""

    word_a: str
    word_b: str
    case_policy: object = "as-given"

    def __post_init__(self):
        check_word(self.word_a)
        check_word(self.word_b)
        if len(self.word_a) != len(self.word_b):
            raise ShapeMismatch(
                f"words must have equal length: {self.word_a!r} ({len(self.word_a)}) vs {self.word_b!r} ({len(self.word_b)})"
            )
        pol = self.case_policy
        pols = (pol,) * len(self.word_a) if isinstance(pol, str) else tuple(pol)
        if len(pols) != len(self.word_a) or any(p not in CASE_POLICIES for p in pols):
            raise ValueError(f"case_policy must be one of {CASE_POLICIES} (or one per position)")
        object.__setattr__(self, "case_policy", pols)

    @property
    def n(self) -> int:
        return len(self.word_a)

    @property
    def symmetric(self) -> bool:
        return self.word_a.lower() == self.word_b.lower()

    def letter_pair(self, n: int) -> tuple:
        """(a_n, b_{N-n+1}) for 0-based glyph index ``n``."""
        return self.word_a[n], self.word_b[self.n - 1 - n]

    def case_options(self, n: int) -> list:
        """Case combinations (case_a, case_b) to try for glyph ``n``."""
        a, b = self.letter_pair(n)
        return case_options(a, b, self.case_policy[n])


def _given_case(ch: str) -> str:
    return "upper" if ch.isupper() else "lower"


def case_options(a: str, b: str, policy: str) -> list:
    if policy == "as-given":
        return [(_given_case(a), _given_case(b))]
    if policy in ("upper", "lower"):
        return [(policy, policy)]
    if policy == "try-both":
        return [(ca, cb) for ca in ("upper", "lower") for cb in ("upper", "lower")]
    raise ValueError(f"unknown case policy {policy!r}")


def overlap_map(img_a: np.ndarray, img_b: np.ndarray) -> np.ndarray:
    """overlap[dy + H - 1, dx + W - 1] = #pixels inked in a and in b shifted by (dx, dy)."""
    a = np.asarray(img_a, dtype=np.float64)
    b = np.asarray(img_b, dtype=np.float64)
    return np.rint(fftconvolve(a, b[::-1, ::-1], mode="full")).astype(np.int64)


def _check_pair(img_a, img_b):
    a = np.asarray(img_a).astype(bool)
    b = np.asarray(img_b).astype(bool)
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeMismatch(f"alignment needs equal 2-D shapes, got {a.shape} and {b.shape}")
    if not a.any() or not b.any():
        raise EmptyImage("alignment needs at least one foreground pixel in each image")
    return a, b


def alignment_shift(img_a, img_b_rot, scheme) -> tuple:
    """Pixel shift (dx, dy) to apply to ``img_b_rot`` (x right, y down)."""
    scheme = AlignmentScheme.parse(scheme)
    a, b = _check_pair(img_a, img_b_rot)
    if scheme is AlignmentScheme.NAIVE:
        return 0.0, 0.0
    h, w = a.shape
    ov = overlap_map(a, b)
    if scheme is AlignmentScheme.MAX_OVERLAP:
        dys, dxs = np.nonzero(ov == ov.max())
        dys = dys - (h - 1)
        dxs = dxs - (w - 1)
        order = np.lexsort((dys, dxs, dxs**2 + dys**2))
        return float(dxs[order[0]]), float(dys[order[0]])
    row = ov[h - 1]
    touching = np.nonzero(row >= 1)[0] - (w - 1)
    if touching.size == 0:
        raise EmptyImage("letters never touch for any horizontal shift")
    extreme = touching.min() if scheme is AlignmentScheme.CONTACT_LEFT else touching.max()
    return CONTACT_FACTOR * float(extreme), 0.0


def binarize(glyph: Glyph, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    return rasterize(glyph, resolution).numpy() >= BINARY_THRESHOLD


def fit_to_canvas(g: Glyph, margin: float = MARGIN) -> Glyph:
    x0, y0, x1, y1 = g.bbox()
    s = (1.0 - 2 * margin) / max(x1 - x0, y1 - y0)
    c = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    return g.with_points((g.flat_points() - c) * s + 0.5)


def init_letter_pair(
    a: str,
    b: str,
    font,
    scheme="naive",
    case_a: str | None = None,
    case_b: str | None = None,
    resolution: int = DEFAULT_RESOLUTION,
    fit_canvas: bool = True,
) -> Glyph:
    """Overlay letter ``a`` with the 180-degree-rotated letter ``b``.

    The rotated component is shifted by :func:`alignment_shift`.  With
    ``fit_canvas`` the union is then uniformly rescaled and recentred to the
    10% canvas margin; this moves both components together, so their relative
    placement is exactly what the scheme chose.
    """
    ga = load_font_glyph(font, a, case_a)
    gb = rotate180(load_font_glyph(font, b, case_b))
    dx, dy = alignment_shift(binarize(ga, resolution), binarize(gb, resolution), scheme)
    union = ga.union(gb.translate(dx / resolution, dy / resolution))
    return fit_to_canvas(union) if fit_canvas else union


def layout_word(glyphs: Sequence[Glyph], margin: float = 0.0) -> GlyphSequence:
    """Centre each glyph in its own unit cell of an N x 1 template and scale it to fit.

    The scale keeps the aspect ratio and makes the glyph's bbox width or height
    match the cell (minus ``margin`` on each side).
    """
    glyphs = tuple(glyphs)
    if not glyphs:
        raise ValueError("layout_word needs at least one glyph")
    placements = []
    for n, g in enumerate(glyphs):
        x0, y0, x1, y1 = g.bbox()
        s = (1.0 - 2 * margin) / max(x1 - x0, y1 - y0)
        placements.append(Placement(n + 0.5 - s * (x0 + x1) / 2, 0.5 - s * (y0 + y1) / 2, s))
    return GlyphSequence(glyphs, tuple(placements))
