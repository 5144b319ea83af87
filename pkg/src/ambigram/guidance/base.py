"""Score providers: the guidance-backend contract, prompts and the PAAS estimator."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import torch

from ..errors import BackendFailure
from ..raster import RasterImage, resample

LETTER_PROMPT = "An image of the letter {} in {} case."
PAIR_PROMPT = 'A blank paper with the text "{}" written on it.'


@dataclass(frozen=True)
class NoiseLevel:
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma}")

    def __float__(self):
        return float(self.sigma)


@dataclass(frozen=True, eq=False)
class ConditioningEmbedding:
    """Opaque conditioning produced by ``backend.embed``; only that backend may consume it."""

    backend_id: str
    prompt: str
    payload: Any = field(repr=False, default=None)

    def digest(self) -> str:
        h = hashlib.sha256(self.backend_id.encode() + b"\0" + self.prompt.encode())
        p = self.payload
        if isinstance(p, torch.Tensor):
            h.update(p.detach().cpu().numpy().tobytes())
        elif isinstance(p, np.ndarray):
            h.update(p.tobytes())
        else:
            h.update(repr(p).encode())
        return h.hexdigest()

    def __eq__(self, other):
        return isinstance(other, ConditioningEmbedding) and self.digest() == other.digest()

    def __hash__(self):
        return hash(self.digest())


class GuidanceBackend:
    """Contract for denoiser/score providers.

    Subclasses implement ``denoise(x, sigma, c)`` on (B, H, W) ink-is-1 batches and
    ``embed(prompt)``.  A backend that can return ``grad_x log p(c | x)`` directly
    sets ``direct_score = True`` and implements ``score``.
    """

    backend_id = "abstract"
    resolution = 64
    sigma_range = (0.2, 0.6)
    direct_score = False

    def denoise(self, x: torch.Tensor, sigma: float, c: ConditioningEmbedding) -> torch.Tensor:
        raise NotImplementedError

    def embed(self, prompt: str) -> ConditioningEmbedding:
        raise NotImplementedError

    def score(self, x, sigma, c, n_samples=1, generator=None) -> torch.Tensor:
        raise NotImplementedError

    def native_size(self, shape) -> tuple:
        """Target (H, W) for an input of spatial ``shape``; keeps the aspect ratio."""
        h, w = shape[-2:]
        return self.resolution, int(round(self.resolution * w / h))

    def check_embedding(self, c: ConditioningEmbedding) -> None:
        if c.backend_id != self.backend_id:
            raise BackendFailure(
                f"embedding from backend '{c.backend_id}' passed to '{self.backend_id}'"
            )

    def sample_sigma(self, rng: np.random.Generator, sigma_range=None) -> float:
        lo, hi = sigma_range or self.sigma_range
        return float(rng.uniform(lo, hi))

    def describe(self) -> dict:
        return {"backend_id": self.backend_id, "resolution": self.resolution}


def letter_prompt(letter: str, case: str) -> str:
    if len(letter) != 1 or not letter.isascii() or not letter.isalpha():
        raise ValueError(f"letter must be a single A-Z character, got {letter!r}")
    if case not in ("upper", "lower"):
        raise ValueError(f"case must be 'upper' or 'lower', got {case!r}")
    shown = letter.upper() if case == "upper" else letter.lower()
    return LETTER_PROMPT.format(shown, case)


def pair_prompt(letters) -> str:
    text = "".join(letters)
    if len(text) != 2:
        raise ValueError(f"expected two characters, got {text!r}")
    return PAIR_PROMPT.format(text)


def embed_letter_prompt(letter: str, case: str, backend: GuidanceBackend) -> ConditioningEmbedding:
    return backend.embed(letter_prompt(letter, case))


def embed_pair_prompt(letters, backend: GuidanceBackend) -> ConditioningEmbedding:
    return backend.embed(pair_prompt(letters))


def _as_generator(seed) -> torch.Generator:
    if isinstance(seed, torch.Generator):
        return seed
    gen = torch.Generator()
    gen.manual_seed(int(seed) if seed is not None else 0)
    return gen


def _unwrap(x):
    return x.data if isinstance(x, RasterImage) else x


def _to_native(x: torch.Tensor, backend: GuidanceBackend):
    """Detached copy at backend resolution, plus a function mapping a score back."""
    size = backend.native_size(x.shape)
    if tuple(x.shape[-2:]) == tuple(size):
        return x.detach(), lambda s: s
    src = x.detach().clone().requires_grad_(True)
    with torch.enable_grad():
        xr = resample(src, size)

    def back(score):
        (g,) = torch.autograd.grad(xr, src, grad_outputs=score.to(xr.dtype), retain_graph=True)
        return g

    return xr.detach(), back


def paas(x, sigma, c: ConditioningEmbedding, backend: GuidanceBackend, n_samples: int = 1, seed=0) -> torch.Tensor:
    """Perturb-and-average score: mean over ``n_samples`` of (D(x + s n; s, c) - x) / s^2.

    ``x`` is an (H, W) or (B, H, W) raster.  ``seed`` may be an int or a
    ``torch.Generator`` (consumed in place), so k single-sample calls on one
    generator average to one k-sample call.  Returns a tensor shaped like ``x``.
    """
    sigma = float(NoiseLevel(float(sigma)))
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    backend.check_embedding(c)
    x = _unwrap(x)
    xn, back = _to_native(x, backend)
    gen = _as_generator(seed)
    total = torch.zeros_like(xn)
    with torch.no_grad():
        for _ in range(n_samples):
            noise = torch.randn(xn.shape, generator=gen, dtype=xn.dtype)
            try:
                den = backend.denoise(xn + sigma * noise, sigma, c)
            except BackendFailure:
                raise
            except Exception as exc:
                raise BackendFailure(
                    f"{backend.backend_id}.denoise failed at sigma={sigma:.4g} for prompt {c.prompt!r}: {exc}"
                ) from exc
            if den.shape != xn.shape:
                raise BackendFailure(
                    f"{backend.backend_id}.denoise returned shape {tuple(den.shape)} for input {tuple(xn.shape)}"
                )
            total += (den - xn) / sigma**2
    score = back(total / n_samples)
    if not torch.isfinite(score).all():
        raise BackendFailure(f"{backend.backend_id} produced a non-finite score for {c.prompt!r}")
    return score.detach()


def estimate_score(x, sigma, c, backend: GuidanceBackend, n_samples: int = 1, seed=0) -> torch.Tensor:
    """Score of ``x`` under ``c``: PAAS, or the backend's own score when it has one."""
    if not backend.direct_score:
        return paas(x, sigma, c, backend, n_samples, seed)
    backend.check_embedding(c)
    x = _unwrap(x)
    xn, back = _to_native(x, backend)
    try:
        s = backend.score(xn, float(sigma), c, n_samples=n_samples, generator=_as_generator(seed))
    except BackendFailure:
        raise
    except Exception as exc:
        raise BackendFailure(f"{backend.backend_id}.score failed for prompt {c.prompt!r}: {exc}") from exc
    s = back(s)
    if not torch.isfinite(s).all():
        raise BackendFailure(f"{backend.backend_id} produced a non-finite score for {c.prompt!r}")
    return s.detach()
