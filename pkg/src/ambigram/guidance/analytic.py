"""Exact posterior-mean denoiser for a Gaussian data distribution.

With data ``x0 ~ N(mu, s^2 I)`` and ``x = x0 + sigma * n`` the MMSE denoiser is
``D(x; sigma) = (s^2 x + sigma^2 mu) / (s^2 + sigma^2)``, so the PAAS estimate
has expectation ``(mu - x) / (s^2 + sigma^2)``.  Only used to validate PAAS.
"""

from __future__ import annotations

import numpy as np
import torch

from .base import ConditioningEmbedding, GuidanceBackend


class AnalyticGaussianBackend(GuidanceBackend):
    backend_id = "analytic-gaussian"
    sigma_range = (0.5, 1.5)

    def __init__(self, mean=0.5, std: float = 1.0, resolution: int = 64, prompt_means=None):
        if std <= 0:
            raise ValueError("std must be positive")
        self.mean = mean
        self.std = float(std)
        self.resolution = int(resolution)
        self.prompt_means = dict(prompt_means or {})

    def embed(self, prompt: str) -> ConditioningEmbedding:
        mu = self.prompt_means.get(prompt, self.mean)
        if not np.isscalar(mu):
            mu = torch.as_tensor(np.asarray(mu), dtype=torch.float64)
        return ConditioningEmbedding(self.backend_id, prompt, mu)

    def native_size(self, shape):
        return tuple(shape[-2:])

    def posterior_mean(self, x: torch.Tensor, sigma: float, mu) -> torch.Tensor:
        s2 = self.std**2
        mu = mu.to(x.dtype) if isinstance(mu, torch.Tensor) else mu
        return (s2 * x + sigma**2 * mu) / (s2 + sigma**2)

    def denoise(self, x, sigma, c):
        return self.posterior_mean(x, float(sigma), c.payload)

    def expected_score(self, x, sigma, c) -> torch.Tensor:
        mu = c.payload.to(x.dtype) if isinstance(c.payload, torch.Tensor) else c.payload
        return (mu - x) / (self.std**2 + float(sigma) ** 2)
