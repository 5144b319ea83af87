"""Word-stage refinement of letter glyphs placed in a word template."""

from __future__ import annotations

import numpy as np
import torch

from ..glyph import Glyph, GlyphSequence
from ..layout import AmbigramTask, layout_word
from ..losses import word_conditionings, word_deviation_reg, word_gradient
from ..raster import concat_pair, perspective_batch, render_points, split_points
from .config import HyperParams, decay_factor
from .letter import _check_grad, step_rng


def cell_points(seq: GlyphSequence) -> list:
    """Control points of every glyph in the local coordinates of its cell."""
    return [seq.cell_glyph(n).flat_points() for n in range(len(seq))]


def _from_cell(seq: GlyphSequence, n: int, pts: np.ndarray) -> Glyph:
    pl = seq.placements[n]
    local = (pts + np.array([float(n), 0.0]) - np.array([pl.tx, pl.ty])) / pl.scale
    return seq.glyphs[n].with_points(local)


def render_cells(params: list, sizes: list, resolution: int) -> list:
    return [render_points(split_points(p, s), resolution, warn_degenerate=False) for p, s in zip(params, sizes)]


def mean_pair_cross_entropy(seq: GlyphSequence, task: AmbigramTask, classifier, resolution: int = 64) -> float:
    """Mean over consecutive pairs of the summed per-cell CE in both orientations."""
    from ..losses import pair_letters
    from ..raster import rasterize

    cells = [rasterize(seq.cell_glyph(n), resolution).data for n in range(len(seq))]
    if len(cells) < 2:
        return 0.0
    total = []
    for k, (up, down) in enumerate(pair_letters(task.word_a, task.word_b)):
        pair = concat_pair(cells[k], cells[k + 1])
        rot = torch.flip(pair, (-2, -1))
        imgs = torch.stack([pair[:, :resolution], pair[:, resolution:], rot[:, :resolution], rot[:, resolution:]])
        total.append(float(classifier.cross_entropy(imgs, list(up) + list(down)).sum()))
    return float(np.mean(total))


def optimize_word(task: AmbigramTask, letter_glyphs, hyper: HyperParams, backend, checkpoint_path=None, callback=None) -> GlyphSequence:
    """Lay out the letter-stage glyphs and refine them for legibility of adjacent pairs.

    Every consecutive pair is rendered side by side and scored with the pair
    prompts in both orientations; interior glyphs receive both of their pairs'
    gradients.  A deviation penalty ties the points to the letter-stage anchor.
    """
    from .letter import _Checkpointer

    seq0 = layout_word(letter_glyphs)
    n = len(seq0)
    if n != task.n:
        raise ValueError(f"task has {task.n} letters but {n} glyphs were given")
    if n == 1 or hyper.steps_word == 0:
        return seq0
    anchor_np = cell_points(seq0)
    sizes = [g.path_sizes for g in seq0.glyphs]
    counts = [len(p) for p in anchor_np]
    flat = torch.tensor(np.concatenate(anchor_np), dtype=torch.float32, requires_grad=True)
    anchor = flat.detach().clone()
    opt = torch.optim.Adam([flat], lr=hyper.lr_word)
    conds = word_conditionings(task.word_a, task.word_b, backend)
    res = hyper.resolution
    ckpt = _Checkpointer(checkpoint_path, hyper.checkpoint_every, {"task": [task.word_a, task.word_b], "hyper": hyper.to_dict(), "n": int(anchor.numel())})
    start = ckpt.restore(flat, opt)
    for step in range(start, hyper.steps_word):
        rng = step_rng(hyper.seed, step, "word")
        for group in opt.param_groups:
            group["lr"] = hyper.lr_word * decay_factor(hyper.lr_decay, step, hyper.steps_word)
        cells = render_cells(torch.split(flat, counts), sizes, res)
        loss = word_deviation_reg(flat, anchor, hyper.weights.word_reg)
        for k, (c_up, c_down) in enumerate(conds):
            views = perspective_batch(concat_pair(cells[k], cells[k + 1]), hyper.batch_augment, hyper.distortion_word, rng)
            sigma = backend.sample_sigma(rng, hyper.sigma_range)
            score = word_gradient(views, c_up, c_down, backend, sigma, int(rng.integers(2**62)), hyper.n_samples)
            loss = loss - (score.detach() * views).sum() / hyper.batch_augment
        opt.zero_grad()
        loss.backward()
        _check_grad(flat, f"word stage {task.word_a}/{task.word_b} step {step}")
        opt.step()
        ckpt.maybe_save(step + 1, flat, opt)
        if callback is not None:
            callback(step, flat.detach())
    out = np.split(flat.detach().double().numpy(), np.cumsum(counts)[:-1])
    return GlyphSequence(tuple(_from_cell(seq0, i, p) for i, p in enumerate(out)), seq0.placements)


def mean_displacement(seq: GlyphSequence, anchor: GlyphSequence) -> float:
    """Mean Euclidean control-point displacement in cell units (cell height = 1)."""
    a = np.concatenate(cell_points(seq))
    b = np.concatenate(cell_points(anchor))
    return float(np.linalg.norm(a - b, axis=1).mean())
