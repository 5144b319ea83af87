"""Raster clean-up and classifier-based candidate ranking."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import torch
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from ..glyph import Glyph
from ..raster import DEFAULT_RESOLUTION, RasterImage, rasterize
from ..utils.validation import check_images
from .config import HyperParams

MEDIAN_PASSES = 2
UNSHARP_AMOUNT = 1.0
UNSHARP_SIGMA = 1.0


def postprocess(img, passes: int = MEDIAN_PASSES, amount: float = UNSHARP_AMOUNT, radius: float = UNSHARP_SIGMA) -> RasterImage:
    """``passes`` 3x3 median filters, an unsharp mask, then clamp to [0, 1].

    Pixels outside the image count as background.
    """
    arr = img.numpy() if isinstance(img, RasterImage) else np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"postprocess expects a 2-D raster, got shape {arr.shape}")
    y = arr.astype(np.float64)
    for _ in range(passes):
        y = ndimage.median_filter(y, size=3, mode="constant", cval=0.0)
    if amount:
        blur = ndimage.gaussian_filter(y, radius, mode="constant", cval=0.0)
        y = y + amount * (y - blur)
    return RasterImage(torch.from_numpy(np.clip(y, 0.0, 1.0).astype(np.float32)))


class PostProcessor(TransformerMixin, BaseEstimator):
    """Stateless transformer wrapping :func:`postprocess` for (n, H, W) stacks."""

    def __init__(self, passes=MEDIAN_PASSES, amount=UNSHARP_AMOUNT, radius=UNSHARP_SIGMA):
        self.passes = passes
        self.amount = amount
        self.radius = radius

    def fit(self, X, y=None):
        check_images(X, None)
        return self

    def transform(self, X):
        X = check_images(X, None)
        out = [postprocess(RasterImage(x), self.passes, self.amount, self.radius).data for x in X]
        return torch.stack(out).numpy()

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags


@dataclass(frozen=True, eq=False)
class DesignCandidate:
    glyph: Glyph
    hyper: HyperParams
    pair: tuple
    cases: tuple = ("upper", "upper")
    seed: int = 0
    legibility: float | None = None
    initial_legibility: float | None = None
    history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.legibility is not None and self.legibility < 0:
            raise ValueError("legibility (a cross-entropy) cannot be negative")

    @property
    def lambda_letter(self) -> float:
        return self.hyper.weights.lambda_letter

    @property
    def scheme(self):
        return self.hyper.scheme

    def key(self) -> str:
        a, b = self.pair
        return f"{a}{b}/lam{self.lambda_letter:.2f}/{self.scheme.value}/{self.cases[0]}-{self.cases[1]}"

    def summary(self) -> dict:
        return {
            "pair": list(self.pair),
            "cases": list(self.cases),
            "lambda_letter": self.lambda_letter,
            "scheme": self.scheme.value,
            "seed": self.seed,
            "legibility": self.legibility,
            "initial_legibility": self.initial_legibility,
        }


def _cased(ch: str, case: str) -> str:
    return ch.upper() if case == "upper" else ch.lower()


def legibility_score(glyph_or_raster, a: str, b: str, classifier, cases=("upper", "upper"), clean: bool = True, resolution: int = DEFAULT_RESOLUTION) -> float:
    """CE(upright as a) + CE(rotated as b) on the (post-processed) raster."""
    if isinstance(glyph_or_raster, Glyph):
        img = rasterize(glyph_or_raster, resolution)
    elif isinstance(glyph_or_raster, RasterImage):
        img = glyph_or_raster
    else:
        img = RasterImage(torch.as_tensor(glyph_or_raster, dtype=torch.float32))
    if clean:
        img = postprocess(img)
    x = img.data.float()
    ce = classifier.cross_entropy(torch.stack([x, img.rot180().data.float()]), [_cased(a, cases[0]), _cased(b, cases[1])])
    return float(ce.sum())


def rank_candidates(candidates, classifier=None) -> list:
    """Stable ascending sort by legibility (lower cross-entropy first).

    With a classifier, legibility is (re)computed for every candidate; without
    one, the stored values are used.
    """
    scored = []
    for cand in candidates:
        if classifier is not None:
            cand = dataclasses.replace(
                cand, legibility=legibility_score(cand.glyph, *cand.pair, classifier, cand.cases, resolution=cand.hyper.resolution)
            )
        elif cand.legibility is None:
            raise ValueError("candidate has no legibility score and no classifier was given")
        scored.append(cand)
    return sorted(scored, key=lambda c: c.legibility)
