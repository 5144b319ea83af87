"""Vector glyph value types and pure geometry.

Coordinates live on a unit canvas: origin top-left, x to the right, y down.
A closed cubic path with K segments is stored as a (3K, 2) array of
``[start_0, handle_0a, handle_0b, start_1, handle_1a, ...]``; the end point of
segment i is the start of segment i+1 (cyclically), so closure holds by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from fontTools.misc.bezierTools import calcCubicBounds

from .errors import ShapeMismatch, TopologyMismatch

CLOSURE_TOL = 1e-9


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BezierPath:
    """Closed path of cubic Bezier segments."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0 or len(pts) % 3:
            raise ShapeMismatch(f"path points must have shape (3K, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("control points must be finite")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_segments(cls, segments, tol: float = CLOSURE_TOL) -> "BezierPath":
        seg = np.asarray(segments, dtype=np.float64)
        if seg.ndim != 3 or seg.shape[1:] != (4, 2) or len(seg) == 0:
            raise ShapeMismatch(f"segments must have shape (K, 4, 2), got {seg.shape}")
        ends = seg[:, 3]
        starts = np.roll(seg[:, 0], -1, axis=0)
        gap = np.max(np.abs(ends - starts))
        if gap > tol:
            raise ValueError(f"path is not continuous/closed (gap {gap:.3g})")
        return cls(seg[:, :3].reshape(-1, 2))

    @property
    def n_segments(self) -> int:
        return len(self.points) // 3

    @property
    def segments(self) -> np.ndarray:
        p = self.points.reshape(-1, 3, 2)
        ends = np.roll(p[:, 0], -1, axis=0)
        return np.concatenate([p, ends[:, None]], axis=1)

    def signed_area(self, samples: int = 16) -> float:
        poly = sample_path(self, samples)
        x, y = poly[:, 0], poly[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def reversed(self) -> "BezierPath":
        seg = self.segments[::-1, ::-1]
        return BezierPath.from_segments(seg)

    def __eq__(self, other):
        if not isinstance(other, BezierPath):
            return NotImplemented
        return self.points.shape == other.points.shape and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class Glyph:
    """A set of closed cubic paths filled with the nonzero rule."""

    paths: tuple
    fill_rule: str = "nonzero"

    def __post_init__(self):
        paths = tuple(p if isinstance(p, BezierPath) else BezierPath(p) for p in self.paths)
        if not paths:
            raise ValueError("a glyph needs at least one path")
        if self.fill_rule != "nonzero":
            raise ValueError("only the nonzero fill rule is supported")
        object.__setattr__(self, "paths", paths)

    @property
    def n_points(self) -> int:
        return sum(len(p.points) for p in self.paths)

    @property
    def path_sizes(self) -> tuple:
        return tuple(len(p.points) for p in self.paths)

    def flat_points(self) -> np.ndarray:
        return np.concatenate([p.points for p in self.paths], axis=0)

    def with_points(self, flat) -> "Glyph":
        """Same topology, new control points (``flat`` has shape (n_points, 2))."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_points, 2):
            raise TopologyMismatch(f"expected ({self.n_points}, 2) points, got {flat.shape}")
        bounds = np.cumsum((0,) + self.path_sizes)
        return Glyph(tuple(BezierPath(flat[s:e]) for s, e in zip(bounds[:-1], bounds[1:])))

    def affine(self, matrix, offset=(0.0, 0.0)) -> "Glyph":
        m = np.asarray(matrix, dtype=np.float64)
        off = np.asarray(offset, dtype=np.float64)
        return self.with_points(self.flat_points() @ m.T + off)

    def translate(self, dx: float, dy: float) -> "Glyph":
        return self.with_points(self.flat_points() + np.array([dx, dy]))

    def scale(self, s: float, center=(0.0, 0.0)) -> "Glyph":
        c = np.asarray(center, dtype=np.float64)
        return self.with_points((self.flat_points() - c) * s + c)

    def bbox(self) -> tuple:
        """Tight bounds of the outline curves as (xmin, ymin, xmax, ymax)."""
        return curve_bounds(self.paths)

    def union(self, other: "Glyph") -> "Glyph":
        return Glyph(self.paths + other.paths)

    def __eq__(self, other):
        if not isinstance(other, Glyph):
            return NotImplemented
        return self.paths == other.paths

    def __hash__(self):
        return hash(self.paths)


@dataclass(frozen=True)
class Placement:
    """Maps glyph canvas coordinates into a word canvas: ``p * scale + (tx, ty)``."""

    tx: float
    ty: float
    scale: float

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts) * self.scale + np.array([self.tx, self.ty])


@dataclass(frozen=True)
class GlyphSequence:
    """Glyphs placed left to right in a word canvas of height 1 and width N."""

    glyphs: tuple
    placements: tuple = field(default=())

    def __post_init__(self):
        glyphs = tuple(self.glyphs)
        placements = tuple(self.placements)
        if not glyphs:
            raise ValueError("a glyph sequence needs at least one glyph")
        if len(placements) != len(glyphs):
            raise ShapeMismatch(
                f"{len(glyphs)} glyphs but {len(placements)} placements"
            )
        object.__setattr__(self, "glyphs", glyphs)
        object.__setattr__(self, "placements", placements)

    def __len__(self):
        return len(self.glyphs)

    def cell_glyph(self, n: int) -> Glyph:
        """Glyph ``n`` in the local coordinates of its own unit cell."""
        pl = self.placements[n]
        g = self.glyphs[n]
        return g.with_points(pl.apply(g.flat_points()) - np.array([float(n), 0.0]))

    def word_glyph(self) -> Glyph:
        """All glyphs merged in word-canvas coordinates (width N, height 1)."""
        paths = []
        for g, pl in zip(self.glyphs, self.placements):
            paths.extend(g.with_points(pl.apply(g.flat_points())).paths)
        return Glyph(tuple(paths))

    def with_glyphs(self, glyphs: Sequence[Glyph]) -> "GlyphSequence":
        return GlyphSequence(tuple(glyphs), self.placements)


def rotate180(g: Glyph, center=(0.5, 0.5)) -> Glyph:
    """Rotate about the canvas centre: (x, y) -> (2cx - x, 2cy - y)."""
    c2 = 2.0 * np.asarray(center, dtype=np.float64)
    return Glyph(tuple(BezierPath(c2 - p.points) for p in g.paths))


def rotate_sequence180(seq: GlyphSequence) -> GlyphSequence:
    """Rotate a whole word by 180 degrees: glyph order reverses, each glyph turns."""
    glyphs = [rotate180(seq.cell_glyph(n)) for n in range(len(seq))][::-1]
    return GlyphSequence(
        tuple(glyphs), tuple(Placement(float(n), 0.0, 1.0) for n in range(len(seq)))
    )


def cubic_points(seg: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t)[:, None]
    mt = 1.0 - t
    return (
        mt**3 * seg[0] + 3 * mt**2 * t * seg[1] + 3 * mt * t**2 * seg[2] + t**3 * seg[3]
    )


def sample_path(path: BezierPath, samples: int = 16) -> np.ndarray:
    t = np.linspace(0.0, 1.0, samples, endpoint=False)
    return np.concatenate([cubic_points(s, t) for s in path.segments], axis=0)


def curve_bounds(paths: Iterable[BezierPath]) -> tuple:
    xmin = ymin = np.inf
    xmax = ymax = -np.inf
    for path in paths:
        for seg in path.segments:
            x0, y0, x1, y1 = calcCubicBounds(*[tuple(p) for p in seg])
            xmin, ymin = min(xmin, x0), min(ymin, y0)
            xmax, ymax = max(xmax, x1), max(ymax, y1)
    return (float(xmin), float(ymin), float(xmax), float(ymax))


def line_to_cubic(p0, p1) -> np.ndarray:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    return np.stack([p0, p0 + d / 3.0, p0 + 2.0 * d / 3.0, p1])


def quad_to_cubic(p0, q, p1) -> np.ndarray:
    p0, q, p1 = (np.asarray(v, float) for v in (p0, q, p1))
    return np.stack([p0, p0 + 2.0 / 3.0 * (q - p0), p1 + 2.0 / 3.0 * (q - p1), p1])


def orient_positive(g: Glyph) -> Glyph:
    """Reverse every path if the glyph's total signed area is negative.

    Fonts disagree on outer-contour direction; the rasterizer assumes ink has
    positive winding.
    """
    total = sum(p.signed_area() for p in g.paths)
    if total >= 0:
        return g
    return Glyph(tuple(p.reversed() for p in g.paths))


def square_glyph(x0=0.25, y0=0.25, x1=0.75, y1=0.75) -> Glyph:
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    segs = [line_to_cubic(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    return Glyph((BezierPath.from_segments(segs),))


def circle_path(cx, cy, r, n_segments: int = 4, clockwise: bool = True) -> BezierPath:
    """Circle approximated by ``n_segments`` cubic arcs."""
    k = 4.0 / 3.0 * np.tan(np.pi / (2 * n_segments))
    angles = np.linspace(0.0, 2 * np.pi, n_segments, endpoint=False)
    if not clockwise:
        angles = -angles
    step = angles[1] - angles[0] if n_segments > 1 else 2 * np.pi
    pts = []
    for a in angles:
        p = np.array([cx + r * np.cos(a), cy + r * np.sin(a)])
        tan = np.array([-np.sin(a), np.cos(a)]) * np.sign(step)
        b = a + step
        q = np.array([cx + r * np.cos(b), cy + r * np.sin(b)])
        tan_b = np.array([-np.sin(b), np.cos(b)]) * np.sign(step)
        pts.extend([p, p + k * r * tan, q - k * r * tan_b])
    return BezierPath(np.array(pts))


def random_glyph(rng: np.random.Generator, n_segments=None, center=None, radius=None) -> Glyph:
    """A random star-shaped closed path; used by tests and property checks."""
    k = int(n_segments or rng.integers(3, 8))
    c = np.asarray(center if center is not None else rng.uniform(0.4, 0.6, size=2))
    r0 = float(radius if radius is not None else rng.uniform(0.18, 0.3))
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=k))
    angles = np.linspace(0, 2 * np.pi, k, endpoint=False) * 0.5 + angles * 0.5
    angles = np.sort(angles)
    radii = r0 * rng.uniform(0.7, 1.2, size=k)
    anchors = c + np.stack([np.cos(angles), np.sin(angles)], axis=1) * radii[:, None]
    pts = []
    for i in range(k):
        p, q = anchors[i], anchors[(i + 1) % k]
        chord = q - p
        normal = np.array([-chord[1], chord[0]])
        h1 = p + chord / 3 + normal * rng.uniform(-0.15, 0.15)
        h2 = p + 2 * chord / 3 + normal * rng.uniform(-0.15, 0.15)
        pts.extend([p, h1, h2])
    return orient_positive(Glyph((BezierPath(np.array(pts)),)))
