"""Objective terms: letter/word score gradients and the scalar style/regularizer losses.

Score terms have no scalar value; they return an ascent direction on
log-likelihood in raster space, which the optimizer turns into control-point
gradients with the surrogate ``-(score.detach() * x).sum()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .errors import AppliedToAsymmetricTask, DimensionMismatch, ShapeMismatch, TopologyMismatch
from .glyph import GlyphSequence
from .guidance.base import estimate_score, embed_pair_prompt
from .raster import RasterImage, rot180
from .utils.validation import check_fraction

BLUR_KERNEL = torch.tensor([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 16.0


@dataclass(frozen=True)
class LossWeights:
    lambda_letter: float = 0.5
    lambda_font: float = 0.0
    lambda_const: float = 0.0
    word_reg: float = 50.0

    def __post_init__(self):
        check_fraction("lambda_letter", self.lambda_letter)
        for name in ("lambda_font", "lambda_const", "word_reg"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


def _seeds(seed, n: int) -> list:
    if isinstance(seed, torch.Generator):
        base = int(torch.randint(0, 2**62, (1,), generator=seed))
    else:
        base = int(seed)
    return [int(s.generate_state(1, np.uint64)[0] >> np.uint64(2)) for s in np.random.SeedSequence(base).spawn(n)]


def _data(x):
    return x.data if isinstance(x, RasterImage) else x


def letter_gradient(x, c_up, c_down, lambda_letter: float, backend, sigma: float, seed=0, n_samples: int = 1) -> torch.Tensor:
    """lambda * score(x | c_up) + (1 - lambda) * R(score(R(x) | c_down)), R = 180 deg turn.

    The two orientations draw noise from independent streams derived from
    ``seed``, so the result is exactly linear in ``lambda_letter``.
    """
    lam = check_fraction("lambda_letter", lambda_letter)
    x = _data(x)
    s_up, s_down = _seeds(seed, 2)
    out = torch.zeros_like(x)
    if lam > 0:
        out = out + lam * estimate_score(x, sigma, c_up, backend, n_samples, s_up)
    if lam < 1:
        down = estimate_score(rot180(x), sigma, c_down, backend, n_samples, s_down)
        out = out + (1 - lam) * rot180(down)
    return out


def word_gradient(pair_raster, c_up, c_down, backend, sigma: float, seed=0, n_samples: int = 1) -> torch.Tensor:
    """score(x | c_up) + R(score(R(x) | c_down)) on a two-glyph raster (width = 2 * height)."""
    x = _data(pair_raster)
    if x.shape[-1] != 2 * x.shape[-2]:
        raise ShapeMismatch(f"pair raster must be twice as wide as high, got {tuple(x.shape[-2:])}")
    s_up, s_down = _seeds(seed, 2)
    up = estimate_score(x, sigma, c_up, backend, n_samples, s_up)
    down = estimate_score(rot180(x), sigma, c_down, backend, n_samples, s_down)
    return up + rot180(down)


def pair_letters(word_a: str, word_b: str) -> list:
    """Letters for each consecutive pair n: ((a_n, a_n+1), (b_N-n, b_N-n+1)), 0-based."""
    if len(word_a) != len(word_b):
        raise ShapeMismatch("words must have equal length")
    n = len(word_a)
    return [((word_a[i], word_a[i + 1]), (word_b[n - i - 2], word_b[n - i - 1])) for i in range(n - 1)]


def word_conditionings(word_a: str, word_b: str, backend) -> list:
    return [
        (embed_pair_prompt(up, backend), embed_pair_prompt(down, backend))
        for up, down in pair_letters(word_a, word_b)
    ]


class FontAttributePredictor:
    """Contract: ``predict(x)`` maps (B, H, W) rasters to (B, dim) attributes, differentiably."""

    dim: int = 0

    def predict(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError


class ImageMomentPredictor(FontAttributePredictor):
    """Differentiable hand-made style attributes.

    Ink density, horizontal and vertical edge energy, stroke-thickness proxy
    (ink over edge energy), and the spatial spread of ink along each axis.
    Stands in for a learned attribute model in tests and desk-scale runs.
    """

    dim = 6

    def predict(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim == 2:
            x = x[None]
        h, w = x.shape[-2:]
        ink = x.mean((-2, -1))
        gx = (x[..., :, 1:] - x[..., :, :-1]).abs().mean((-2, -1))
        gy = (x[..., 1:, :] - x[..., :-1, :]).abs().mean((-2, -1))
        thick = ink / (gx + gy + 1e-3) / max(h, w)
        ys = (torch.arange(h, dtype=x.dtype) + 0.5) / h
        xs = (torch.arange(w, dtype=x.dtype) + 0.5) / w
        mass = x.sum((-2, -1)) + 1e-6
        my = (x.sum(-1) * ys).sum(-1) / mass
        mx = (x.sum(-2) * xs).sum(-1) / mass
        sy = ((x.sum(-1) * (ys - my[:, None]) ** 2).sum(-1) / mass).sqrt()
        sx = ((x.sum(-2) * (xs - mx[:, None]) ** 2).sum(-1) / mass).sqrt()
        return torch.stack([ink, gx * 10, gy * 10, thick, sx, sy], dim=-1)


@dataclass(frozen=True, eq=False)
class StyleTarget:
    vectors: torch.Tensor

    def __post_init__(self):
        v = torch.as_tensor(np.asarray(self.vectors) if not isinstance(self.vectors, torch.Tensor) else self.vectors)
        v = v.to(torch.float64)
        if v.ndim == 1:
            v = v[None]
        if v.ndim != 2 or len(v) == 0:
            raise ValueError("style target needs a non-empty (M, dim) set of vectors")
        object.__setattr__(self, "vectors", v.detach())

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @classmethod
    def from_font(cls, font, predictor: FontAttributePredictor, letters="ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz", resolution=64):
        from .fonts import load_font_glyph
        from .raster import rasterize

        imgs = torch.stack([rasterize(load_font_glyph(font, ch), resolution).data for ch in letters])
        with torch.no_grad():
            return cls(predictor.predict(imgs))


def font_loss(glyph_rasters: Sequence, predictor: FontAttributePredictor, style: StyleTarget, seed=0) -> torch.Tensor:
    """sum_n ||v_n - A(x_n)||^2 with one style vector v_n drawn uniformly per glyph."""
    xs = torch.stack([_data(x) for x in glyph_rasters])
    pred = predictor.predict(xs)
    if pred.shape[-1] != style.dim:
        raise DimensionMismatch(f"predictor dim {pred.shape[-1]} != style dim {style.dim}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pick = torch.from_numpy(rng.integers(0, len(style.vectors), size=len(xs)))
    v = style.vectors[pick].to(pred.dtype)
    return ((v - pred) ** 2).sum()


def blur3(x: torch.Tensor) -> torch.Tensor:
    """Normalized 3x3 binomial blur with zero padding on (..., H, W)."""
    lead = x.shape[:-2]
    k = BLUR_KERNEL.to(x.dtype)[None, None]
    y = F.conv2d(x.reshape(-1, 1, *x.shape[-2:]), k, padding=1)
    return y.reshape(*lead, *x.shape[-2:])


def consistency_loss(glyph_rasters: Sequence, word_a: str | None = None, word_b: str | None = None) -> torch.Tensor:
    """sum_n ||Blur(x_mirror(n)) - Blur(R(x_n))||^2 with mirror(n) = N - n + 1 (1-based).

    Only defined when both readings are the same word.
    """
    if word_a is not None and word_b is not None and word_a.lower() != word_b.lower():
        raise AppliedToAsymmetricTask(f"consistency needs a == b, got {word_a!r} / {word_b!r}")
    xs = torch.stack([_data(x) for x in glyph_rasters])
    mirrored = torch.flip(xs, dims=(0,))
    return ((blur3(mirrored) - blur3(rot180(xs))) ** 2).sum()


def _points(seq) -> torch.Tensor:
    if isinstance(seq, GlyphSequence):
        return torch.from_numpy(np.concatenate([g.flat_points() for g in seq.glyphs]))
    if isinstance(seq, torch.Tensor):
        return seq
    return torch.as_tensor(np.asarray(seq, dtype=np.float64))


def word_deviation_reg(current, anchor, weight: float) -> torch.Tensor:
    """weight * mean over control points of the squared displacement from ``anchor``.

    Accepts GlyphSequences or (M, 2) point tensors (which may require grad).
    """
    cur, anc = _points(current), _points(anchor)
    if cur.shape != anc.shape:
        raise TopologyMismatch(f"control point sets differ: {tuple(cur.shape)} vs {tuple(anc.shape)}")
    anc = anc.to(cur.dtype)
    return weight * ((cur - anc) ** 2).sum(-1).mean()
