"""scikit-learn style front end for the letter stage."""

from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..raster import rasterize
from ..utils.validation import check_letter
from .config import DEFAULT_LAMBDAS, GridSpec, HyperParams
from .grid import grid_search
from .select import postprocess


def _check_pairs(X) -> list:
    pairs = []
    for item in X:
        a, b = (item[0], item[1]) if not isinstance(item, str) or len(item) == 2 else (None, None)
        if a is None:
            raise ValueError(f"each sample must be a letter pair such as 'ab' or ('a', 'b'), got {item!r}")
        pairs.append((check_letter(a), check_letter(b)))
    if not pairs:
        raise ValueError("no letter pairs given")
    return pairs


class LetterAmbigramDesigner(BaseEstimator):
    """Grid-search designer: ``fit`` optimizes each letter pair, ``predict`` returns glyphs.

    ``transform`` returns the cleaned (n, H, W) rasters of the selected designs.
    ``backend`` and ``classifier`` default to the cached desk-scale classifier.
    """

    def __init__(self, font="DejaVuSans.ttf", lambdas=DEFAULT_LAMBDAS, schemes=("naive", "max-overlap", "contact-left", "contact-right"),
                 case_policy="as-given", steps_letter=500, seed=0, backend=None, classifier=None):
        self.font = font
        self.lambdas = lambdas
        self.schemes = schemes
        self.case_policy = case_policy
        self.steps_letter = steps_letter
        self.seed = seed
        self.backend = backend
        self.classifier = classifier

    def _resolve(self):
        from ..guidance import ClassifierBackend, default_letter_classifier

        clf = self.classifier or (self.backend.classifier if hasattr(self.backend, "classifier") else default_letter_classifier())
        backend = self.backend or ClassifierBackend(clf)
        return backend, clf

    def fit(self, X, y=None):
        pairs = _check_pairs(X)
        backend, clf = self._resolve()
        grid = GridSpec(tuple(self.lambdas), tuple(self.schemes), self.case_policy)
        hyper = HyperParams(steps_letter=self.steps_letter, seed=self.seed)
        self.candidates_ = {}
        for a, b in pairs:
            self.candidates_[(a, b)] = grid_search(a, b, self.font, backend, clf, grid, hyper)
        self.best_ = {k: v[0] for k, v in self.candidates_.items() if len(v)}
        return self

    def predict(self, X) -> list:
        check_is_fitted(self, "best_")
        return [self.best_[p].glyph for p in _check_pairs(X)]

    def transform(self, X) -> np.ndarray:
        res = HyperParams().resolution
        return torch.stack([postprocess(rasterize(g, res)).data for g in self.predict(X)]).numpy()

    def score(self, X, y=None) -> float:
        """Negative mean legibility (higher is better, sklearn convention)."""
        check_is_fitted(self, "best_")
        return -float(np.mean([self.best_[p].legibility for p in _check_pairs(X)]))
