"""Hyperparameters and grid specifications for the design stages."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..layout import AlignmentScheme, CASE_POLICIES
from ..losses import LossWeights

DEFAULT_LAMBDAS = tuple(float(v) for v in np.round(np.linspace(0.0, 1.0, 11), 10))


@dataclass(frozen=True)
class HyperParams:
    """Settings of one design run.

    ``lr_decay`` and ``style_decay`` are the fractions of the initial learning
    rate / style weight that remain at the last step (exponential schedules).
    ``sigma_range=None`` uses the backend's own range.
    """

    weights: LossWeights = field(default_factory=LossWeights)
    scheme: AlignmentScheme = AlignmentScheme.NAIVE
    steps_letter: int = 500
    steps_word: int = 110
    batch_augment: int = 5
    distortion_letter: float = 0.3
    distortion_word: float = 0.2
    lr: float = 1e-2
    lr_word: float = 5e-3
    lr_decay: float = 0.1
    style_decay: float = 0.1
    sigma_range: tuple | None = None
    n_samples: int = 1
    resolution: int = 64
    checkpoint_every: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", AlignmentScheme.parse(self.scheme))
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", LossWeights(**self.weights))
        for name in ("steps_letter", "steps_word"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("batch_augment", "n_samples", "resolution", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("lr_decay", "style_decay"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.lr <= 0 or self.lr_word <= 0:
            raise ValueError("learning rates must be positive")
        if self.sigma_range is not None:
            lo, hi = self.sigma_range
            if not 0 < lo <= hi:
                raise ValueError(f"bad sigma_range {self.sigma_range}")
            object.__setattr__(self, "sigma_range", (float(lo), float(hi)))

    def replace(self, **changes) -> "HyperParams":
        if "lambda_letter" in changes:
            lam = changes.pop("lambda_letter")
            changes["weights"] = dataclasses.replace(changes.get("weights", self.weights), lambda_letter=lam)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scheme"] = self.scheme.value
        d["sigma_range"] = list(self.sigma_range) if self.sigma_range else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        d = dict(d)
        if "weights" in d and isinstance(d["weights"], dict):
            d["weights"] = LossWeights(**d["weights"])
        if d.get("sigma_range") is not None:
            d["sigma_range"] = tuple(d["sigma_range"])
        return cls(**d)


def decay_factor(final_fraction: float, step: int, steps: int) -> float:
    """Exponential schedule going from 1 at step 0 to ``final_fraction`` at the last step."""
    if steps <= 1:
        return 1.0
    return float(final_fraction ** (step / (steps - 1)))


@dataclass(frozen=True)
class GridSpec:
    """Cells of a letter-stage hyperparameter search."""

    lambdas: tuple = DEFAULT_LAMBDAS
    schemes: tuple = tuple(AlignmentScheme)
    case_policy: str = "as-given"

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        if not lams or any(not 0 <= v <= 1 for v in lams):
            raise ValueError("lambdas must be a non-empty set of values in [0, 1]")
        schemes = tuple(AlignmentScheme.parse(s) for s in self.schemes)
        if not schemes:
            raise ValueError("at least one alignment scheme is required")
        if self.case_policy not in CASE_POLICIES:
            raise ValueError(f"case_policy must be one of {CASE_POLICIES}")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "schemes", schemes)

    def cells(self, a: str, b: str) -> list:
        """(lambda, scheme, case_a, case_b) for every grid cell, in a fixed order."""
        from ..layout import case_options

        return [
            (lam, scheme, ca, cb)
            for lam in self.lambdas
            for scheme in self.schemes
            for ca, cb in case_options(a, b, self.case_policy)
        ]

    def size(self, a: str = "a", b: str = "b") -> int:
        return len(self.cells(a, b))

    def to_dict(self) -> dict:
        return {"lambdas": list(self.lambdas), "schemes": [s.value for s in self.schemes], "case_policy": self.case_policy}
