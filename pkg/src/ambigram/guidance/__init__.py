"""Score providers and prompt embedding."""

from __future__ import annotations

import importlib

from .analytic import AnalyticGaussianBackend
from .base import (
    ConditioningEmbedding,
    GuidanceBackend,
    NoiseLevel,
    embed_letter_prompt,
    embed_pair_prompt,
    estimate_score,
    letter_prompt,
    pair_prompt,
    paas,
)
from .classifier import ClassifierBackend, LetterClassifier, default_letter_classifier

BACKENDS = ("letter-classifier", "analytic-gaussian", "deepfloyd-if")


def make_backend(name: str, **options) -> GuidanceBackend:
    """Instantiate a backend by id, or by ``"package.module:Class"`` for custom adapters."""
    if name == "letter-classifier":
        clf = options.pop("classifier", None) or default_letter_classifier(
            n_classes=options.pop("n_classes", 26), cache_dir=options.pop("cache_dir", None)
        )
        return ClassifierBackend(clf, **options)
    if name == "analytic-gaussian":
        return AnalyticGaussianBackend(**options)
    if name == "deepfloyd-if":
        from .diffusion import DiffusionBackend

        return DiffusionBackend(**options)
    if ":" in name:
        mod, _, attr = name.partition(":")
        cls = getattr(importlib.import_module(mod), attr)
        return cls(**options)
    raise ValueError(f"unknown backend {name!r}; available: {', '.join(BACKENDS)} or 'module:Class'")


__all__ = [
    "AnalyticGaussianBackend",
    "BACKENDS",
    "ClassifierBackend",
    "ConditioningEmbedding",
    "GuidanceBackend",
    "LetterClassifier",
    "NoiseLevel",
    "default_letter_classifier",
    "embed_letter_prompt",
    "embed_pair_prompt",
    "estimate_score",
    "letter_prompt",
    "make_backend",
    "pair_prompt",
    "paas",
]
