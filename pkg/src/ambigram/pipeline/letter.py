"""Letter-stage optimization of one glyph (and the pixel-space ablation)."""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np
import torch

from ..errors import NonFiniteGradient
from ..glyph import Glyph
from ..guidance.base import embed_letter_prompt
from ..layout import init_letter_pair
from ..losses import consistency_loss, font_loss, letter_gradient
from ..raster import RasterImage, perspective_batch, render_points, split_points
from ..utils.validation import check_letter
from .config import HyperParams, decay_factor

log = logging.getLogger(__name__)


def step_rng(seed: int, step: int, stage: str = "letter") -> np.random.Generator:
    """Generator for one optimization step; independent of how many steps ran before."""
    tag = int.from_bytes(hashlib.sha256(stage.encode()).digest()[:4], "little")
    return np.random.default_rng([int(seed), tag, int(step)])


def _case_of(ch: str) -> str:
    return "upper" if ch.isupper() else "lower"


class _Checkpointer:
    """Saves parameters plus Adam state every ``every`` steps so a run can resume."""

    def __init__(self, path, every: int, key: dict):
        self.path = Path(path) if path else None
        self.every = every
        self.key = json.dumps(key, sort_keys=True, default=str)

    def restore(self, params: torch.Tensor, opt: torch.optim.Optimizer) -> int:
        if self.path is None or not self.path.exists():
            return 0
        blob = torch.load(self.path, map_location="cpu", weights_only=False)
        if blob.get("key") != self.key or blob["params"].shape != params.shape:
            log.warning("ignoring checkpoint %s written for a different run", self.path)
            return 0
        with torch.no_grad():
            params.copy_(blob["params"])
        opt.load_state_dict(blob["optimizer"])
        return int(blob["step"])

    def maybe_save(self, step_done: int, params: torch.Tensor, opt: torch.optim.Optimizer):
        if self.path is None or step_done % self.every:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        torch.save({"key": self.key, "step": step_done, "params": params.detach().clone(), "optimizer": opt.state_dict()}, tmp)
        tmp.replace(self.path)


def _check_grad(params: torch.Tensor, where: str):
    if params.grad is None or not torch.isfinite(params.grad).all():
        bad = 0 if params.grad is None else int((~torch.isfinite(params.grad)).sum())
        raise NonFiniteGradient(f"{where}: {bad} non-finite gradient entries; candidate aborted")


def optimize_letter(
    a: str,
    b: str,
    font,
    hyper: HyperParams,
    backend,
    predictor=None,
    style=None,
    case_a: str | None = None,
    case_b: str | None = None,
    init: Glyph | None = None,
    checkpoint_path=None,
    callback=None,
) -> Glyph:
    """Optimize the control points of the glyph that reads ``a`` upright and ``b`` rotated.

    Each step renders the glyph, builds ``batch_augment`` random perspective
    views, and follows the letter score (plus the decaying style terms) with
    Adam.  The result depends only on the inputs and ``hyper.seed``.
    ``callback(step, glyph_points)`` is called after every update when given.
    """
    check_letter(a)
    check_letter(b)
    case_a = case_a or _case_of(a)
    case_b = case_b or _case_of(b)
    g0 = init if init is not None else init_letter_pair(a, b, font, hyper.scheme, case_a, case_b, hyper.resolution)
    if hyper.steps_letter == 0:
        return g0
    sizes = g0.path_sizes
    params = torch.tensor(g0.flat_points(), dtype=torch.float32, requires_grad=True)
    opt = torch.optim.Adam([params], lr=hyper.lr)
    c_up = embed_letter_prompt(a, case_a, backend)
    c_down = embed_letter_prompt(b, case_b, backend)
    w = hyper.weights
    use_font = w.lambda_font > 0 and predictor is not None and style is not None
    use_const = w.lambda_const > 0 and a.lower() == b.lower()
    ckpt = _Checkpointer(
        checkpoint_path,
        hyper.checkpoint_every,
        {"pair": [a, b, case_a, case_b], "hyper": hyper.to_dict(), "init": hashlib.sha256(g0.flat_points().tobytes()).hexdigest()},
    )
    start = ckpt.restore(params, opt)
    res = hyper.resolution
    for step in range(start, hyper.steps_letter):
        rng = step_rng(hyper.seed, step, "letter")
        for group in opt.param_groups:
            group["lr"] = hyper.lr * decay_factor(hyper.lr_decay, step, hyper.steps_letter)
        x = render_points(split_points(params, sizes), res, warn_degenerate=False)
        views = perspective_batch(x, hyper.batch_augment, hyper.distortion_letter, rng)
        sigma = backend.sample_sigma(rng, hyper.sigma_range)
        score = letter_gradient(views, c_up, c_down, w.lambda_letter, backend, sigma, int(rng.integers(2**62)), hyper.n_samples)
        loss = -(score.detach() * views).sum() / hyper.batch_augment
        style_w = decay_factor(hyper.style_decay, step, hyper.steps_letter)
        if use_font:
            loss = loss + style_w * w.lambda_font * font_loss([x], predictor, style, rng)
        if use_const:
            loss = loss + style_w * w.lambda_const * consistency_loss([x])
        opt.zero_grad()
        loss.backward()
        _check_grad(params, f"letter stage {a}/{b} step {step}")
        opt.step()
        ckpt.maybe_save(step + 1, params, opt)
        if callback is not None:
            callback(step, params.detach())
    return g0.with_points(params.detach().double().numpy())


def optimize_pixels(a: str, b: str, hyper: HyperParams, backend, case_a: str | None = None, case_b: str | None = None) -> RasterImage:
    """Ablation: the same letter loop with the pixel grid itself as the parameters.

    Starts from a uniform 0.5 gray canvas and clamps to [0, 1] after every step.
    """
    check_letter(a)
    check_letter(b)
    case_a = case_a or _case_of(a)
    case_b = case_b or _case_of(b)
    res = hyper.resolution
    params = torch.full((res, res), 0.5, dtype=torch.float32, requires_grad=True)
    if hyper.steps_letter == 0:
        return RasterImage(params.detach().clone())
    opt = torch.optim.Adam([params], lr=hyper.lr)
    c_up = embed_letter_prompt(a, case_a, backend)
    c_down = embed_letter_prompt(b, case_b, backend)
    lam = hyper.weights.lambda_letter
    for step in range(hyper.steps_letter):
        rng = step_rng(hyper.seed, step, "pixels")
        for group in opt.param_groups:
            group["lr"] = hyper.lr * decay_factor(hyper.lr_decay, step, hyper.steps_letter)
        views = perspective_batch(params, hyper.batch_augment, hyper.distortion_letter, rng)
        sigma = backend.sample_sigma(rng, hyper.sigma_range)
        score = letter_gradient(views, c_up, c_down, lam, backend, sigma, int(rng.integers(2**62)), hyper.n_samples)
        loss = -(score.detach() * views).sum() / hyper.batch_augment
        opt.zero_grad()
        loss.backward()
        _check_grad(params, f"pixel ablation {a}/{b} step {step}")
        opt.step()
        with torch.no_grad():
            params.clamp_(0.0, 1.0)
    return RasterImage(params.detach().clone())
