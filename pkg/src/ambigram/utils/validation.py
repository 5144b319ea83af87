"""Input validation helpers shared by the estimators and pipeline functions."""

from __future__ import annotations

import numpy as np
import torch

from ..errors import ShapeMismatch

CASES = ("upper", "lower")


def check_letter(ch) -> str:
    if not isinstance(ch, str) or len(ch) != 1 or not ch.isascii() or not ch.isalpha():
        raise ValueError(f"expected a single letter A-Z/a-z, got {ch!r}")
    return ch


def check_word(word) -> str:
    if not isinstance(word, str) or not word:
        raise ValueError("word must be a non-empty string")
    for ch in word:
        check_letter(ch)
    return word


def check_case(case) -> str:
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}, got {case!r}")
    return case


def check_images(X, resolution=None) -> torch.Tensor:
    """Coerce an image stack to a float32 (n, H, W) tensor."""
    if isinstance(X, torch.Tensor):
        t = X.detach().float()
    else:
        arrs = [x.data if hasattr(x, "data") and isinstance(x.data, torch.Tensor) else x for x in X] if isinstance(X, (list, tuple)) else X
        if isinstance(arrs, list):
            t = torch.stack([torch.as_tensor(np.asarray(a.detach() if isinstance(a, torch.Tensor) else a), dtype=torch.float32) for a in arrs])
        else:
            t = torch.as_tensor(np.asarray(arrs), dtype=torch.float32)
    if t.ndim == 2:
        t = t[None]
    if t.ndim != 3:
        raise ShapeMismatch(f"expected images of shape (n, H, W), got {tuple(t.shape)}")
    if resolution is not None and tuple(t.shape[1:]) != (resolution, resolution):
        raise ShapeMismatch(f"expected {resolution}x{resolution} images, got {tuple(t.shape[1:])}")
    if not torch.isfinite(t).all():
        raise ValueError("images contain non-finite values")
    return t


def check_fraction(name, value, lo=0.0, hi=1.0, lo_open=False) -> float:
    v = float(value)
    ok = (v > lo if lo_open else v >= lo) and v <= hi
    if not ok:
        raise ValueError(f"{name} must lie in {'(' if lo_open else '['}{lo}, {hi}], got {v}")
    return v
