import string

import numpy as np
import pytest
import torch

from ambigram.errors import BackendFailure, MissingPair
from ambigram.fonts import load_font_glyph
from ambigram.guidance import ClassifierBackend
from ambigram.layout import AmbigramTask, binarize, init_letter_pair, layout_word
from ambigram.losses import LossWeights
from ambigram.pipeline import (
    DEFAULT_LAMBDAS,
    AmbigramFontMap,
    DesignCandidate,
    GridSpec,
    HyperParams,
    LetterAmbigramDesigner,
    PostProcessor,
    assemble_font,
    cell_seed,
    decay_factor,
    grid_search,
    mean_displacement,
    optimize_letter,
    optimize_pixels,
    optimize_word,
    postprocess,
    rank_candidates,
)
from ambigram.raster import RasterImage

import oracles
from conftest import FONT

QUICK = HyperParams(steps_letter=12, steps_word=6, checkpoint_every=5)


def _img(a):
    return RasterImage(torch.tensor(np.asarray(a, dtype=np.float32)))


# --- post-processing -------------------------------------------------------

def test_floater_removed():
    x = np.zeros((8, 8))
    x[4, 4] = 1
    assert postprocess(_img(x)).numpy().max() == 0


def test_background_unchanged():
    assert postprocess(_img(np.zeros((8, 8)))).numpy().max() == 0


def test_solid_block_survives_one_median_pass():
    x = np.zeros((8, 8))
    x[2:5, 2:5] = 1
    med = oracles.median3(x)
    assert med[3, 3] == 1  # centre of the block keeps ink
    y = postprocess(_img(x), passes=1).numpy()
    assert y[3, 3] == 1


def test_postprocess_range_and_estimator(rng):
    x = rng.uniform(size=(3, 16, 16)).astype(np.float32)
    out = PostProcessor().fit_transform(x)
    assert out.shape == x.shape and out.min() >= 0 and out.max() <= 1
    assert np.allclose(out[0], postprocess(_img(x[0])).numpy())


def test_postprocess_second_pass_on_clean_letters():
    changed = total = 0
    for c in string.ascii_letters:
        y = postprocess(_img(binarize(load_font_glyph(FONT, c)))).numpy() > 0.5
        z = postprocess(_img(y)).numpy() > 0.5
        changed += int((z != y).sum())
        total += y.size
    assert changed / total < 1e-3


# --- ranking -------------------------------------------------------------

def _cand(leg, tag=0):
    g = load_font_glyph(FONT, "O")
    return DesignCandidate(g, HyperParams(seed=tag), ("O", "O"), legibility=leg, seed=tag)


def test_rank_order_and_stability():
    cands = [_cand(0.5, 0), _cand(0.1, 1), _cand(0.5, 2), _cand(0.3, 3)]
    ranked = rank_candidates(cands)
    assert [c.seed for c in ranked] == [1, 3, 0, 2]


def test_rank_invariant_to_appending_worse():
    cands = [_cand(0.2, 0), _cand(0.1, 1), _cand(0.2, 2)]
    first = [c.seed for c in rank_candidates(cands)]
    more = [c.seed for c in rank_candidates(cands + [_cand(9.0, 3)])]
    assert more[:3] == first


def test_rank_requires_scores():
    with pytest.raises(ValueError):
        rank_candidates([_cand(None)])
    with pytest.raises(ValueError):
        _cand(-1.0)


# --- configuration -------------------------------------------------------

def test_grid_sizes():
    assert DEFAULT_LAMBDAS[0] == 0.0 and DEFAULT_LAMBDAS[-1] == 1.0 and len(DEFAULT_LAMBDAS) == 11
    assert GridSpec(case_policy="try-both").size("o", "s") == 176
    assert GridSpec().size("O", "S") == 44


def test_decay_schedule():
    assert decay_factor(0.1, 0, 500) == 1.0
    assert decay_factor(0.1, 499, 500) == pytest.approx(0.1)
    assert decay_factor(0.1, 0, 1) == 1.0


def test_hyper_validation_and_roundtrip():
    h = HyperParams(scheme="max-overlap", sigma_range=(0.1, 0.2)).replace(lambda_letter=0.3)
    assert HyperParams.from_dict(h.to_dict()) == h
    for bad in ({"steps_letter": -1}, {"lr_decay": 0.0}, {"batch_augment": 0}, {"sigma_range": (0.3, 0.1)}):
        with pytest.raises(ValueError):
            HyperParams(**bad)


def test_cell_seed_independent_of_grid():
    assert cell_seed(0, "O", "S", 0.5, "naive", "upper", "upper") == cell_seed(0, "O", "S", 0.5, "naive", "upper", "upper")
    assert cell_seed(0, "O", "S", 0.5, "naive", "upper", "upper") != cell_seed(1, "O", "S", 0.5, "naive", "upper", "upper")


# --- letter stage --------------------------------------------------------

def test_zero_steps_returns_init(classifier_backend):
    h = QUICK.replace(steps_letter=0)
    g = optimize_letter("N", "N", FONT, h, classifier_backend)
    assert np.array_equal(g.flat_points(), init_letter_pair("N", "N", FONT, "naive").flat_points())


def test_letter_stage_deterministic(classifier_backend):
    g1 = optimize_letter("S", "S", FONT, QUICK, classifier_backend)
    g2 = optimize_letter("S", "S", FONT, QUICK, classifier_backend)
    g3 = optimize_letter("S", "S", FONT, QUICK.replace(seed=7), classifier_backend)
    assert np.array_equal(g1.flat_points(), g2.flat_points())
    assert not np.array_equal(g1.flat_points(), g3.flat_points())
    assert g1.path_sizes == init_letter_pair("S", "S", FONT, "naive").path_sizes


def test_checkpoint_resume_matches_uninterrupted(classifier_backend, tmp_path):
    ref = optimize_letter("H", "H", FONT, QUICK, classifier_backend)
    ckpt = tmp_path / "hh.ckpt"

    def stop(step, _):
        if step == 7:
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        optimize_letter("H", "H", FONT, QUICK, classifier_backend, checkpoint_path=ckpt, callback=stop)
    assert ckpt.exists()
    resumed = []
    out = optimize_letter("H", "H", FONT, QUICK, classifier_backend, checkpoint_path=ckpt, callback=lambda s, _: resumed.append(s))
    assert resumed[0] == 5
    assert np.array_equal(out.flat_points(), ref.flat_points())


def test_pixel_ablation_stays_in_range(classifier_backend):
    img = optimize_pixels("O", "O", QUICK, classifier_backend)
    x = img.numpy()
    assert x.shape == (64, 64) and x.min() >= 0 and x.max() <= 1
    assert optimize_pixels("O", "O", QUICK.replace(steps_letter=0), classifier_backend).numpy().max() == 0.5


# --- grid search and font assembly ---------------------------------------

class FlakyBackend(ClassifierBackend):
    """Fails on its first score call only."""

    def __init__(self, classifier):
        super().__init__(classifier)
        self.calls = 0

    def score(self, *args, **kwargs):
        self.calls += 1
        if self.calls == 1:
            raise BackendFailure("simulated outage")
        return super().score(*args, **kwargs)


def test_grid_records_failures_and_keeps_going(classifier):
    grid = GridSpec((0.3, 0.7), ("naive",))
    out = grid_search("O", "O", FONT, FlakyBackend(classifier), classifier, grid, QUICK.replace(steps_letter=3))
    assert len(out) == 1 and len(out.failures) == 1
    assert "simulated outage" in out.failures[0]["error"]
    assert out.failures[0]["lambda_letter"] == 0.3


def test_grid_deterministic_and_ranked(classifier, classifier_backend):
    grid = GridSpec((0.3, 0.7), ("naive", "max-overlap"))
    h = QUICK.replace(steps_letter=4)
    r1 = grid_search("N", "N", FONT, classifier_backend, classifier, grid, h)
    r2 = grid_search("N", "N", FONT, classifier_backend, classifier, grid, h)
    assert [c.key() for c in r1] == [c.key() for c in r2]
    assert all(np.array_equal(a.glyph.flat_points(), b.glyph.flat_points()) for a, b in zip(r1, r2))
    legs = [c.legibility for c in r1]
    assert legs == sorted(legs)
    assert all(c.initial_legibility is not None for c in r1)
    # a sub-grid reproduces its cells exactly
    sub = grid_search("N", "N", FONT, classifier_backend, classifier, GridSpec((0.7,), ("naive",)), h)
    match = [c for c in r1 if c.key() == sub[0].key()][0]
    assert np.array_equal(match.glyph.flat_points(), sub[0].glyph.flat_points())


def test_assemble_font_reports_missing_pair():
    g = load_font_glyph(FONT, "O")
    best = {(a, b): g for a in string.ascii_uppercase for b in string.ascii_uppercase}
    assert len(assemble_font(best)) == 676
    del best[("Q", "Z")]
    with pytest.raises(MissingPair) as exc:
        assemble_font(best)
    assert exc.value.missing == ["QZ"] and "QZ" in str(exc.value)


def test_assemble_font_reuse_rotated():
    letters = "AB"
    g = init_letter_pair("A", "B", FONT, "naive")
    fmap = assemble_font({"AB": g, "AA": g, "BB": g}, reuse_rotated=True, letters=letters)
    assert np.allclose(fmap["BA"].flat_points(), 1.0 - g.flat_points())


def test_font_map_roundtrip_and_lookup(tmp_path):
    fmap = AmbigramFontMap.from_initialization(FONT, letters="NOS")
    path = fmap.save(tmp_path / "map.json")
    back = AmbigramFontMap.load(path)
    assert back.complete and len(back) == 9
    assert np.array_equal(back["no"].flat_points(), fmap["NO"].flat_points())
    glyphs = back.word_glyphs("nos", "son")
    assert np.array_equal(glyphs[0].flat_points(), fmap["NN"].flat_points())
    with pytest.raises(MissingPair):
        back.word_glyphs("nap")


# --- word stage ----------------------------------------------------------

def _os_glyphs():
    task = AmbigramTask("OS", "SO")
    return task, [init_letter_pair(*task.letter_pair(i), FONT, "naive") for i in range(task.n)]


def test_single_letter_word_is_layout(classifier_backend):
    g = init_letter_pair("O", "O", FONT, "naive")
    seq = optimize_word(AmbigramTask("O", "O"), [g], QUICK, classifier_backend)
    assert seq.placements == layout_word([g]).placements
    assert np.array_equal(seq.glyphs[0].flat_points(), g.flat_points())


def test_word_regularizer_bounds_displacement(classifier_backend):
    task, glyphs = _os_glyphs()
    anchor = layout_word(glyphs)
    loose = optimize_word(task, glyphs, QUICK.replace(weights=LossWeights(word_reg=0.0)), classifier_backend)
    tight = optimize_word(task, glyphs, QUICK.replace(weights=LossWeights(word_reg=1e4)), classifier_backend)
    assert mean_displacement(tight, anchor) < mean_displacement(loose, anchor)
    assert tight.placements == anchor.placements


def test_word_length_mismatch(classifier_backend):
    task, glyphs = _os_glyphs()
    with pytest.raises(ValueError):
        optimize_word(task, glyphs[:1], QUICK, classifier_backend)


# --- estimator -----------------------------------------------------------

def test_designer_params_and_fit(classifier, classifier_backend):
    est = LetterAmbigramDesigner(lambdas=(0.5,), schemes=("naive",), steps_letter=2, backend=classifier_backend, classifier=classifier)
    assert est.get_params()["steps_letter"] == 2
    est.fit(["OO", ("s", "s")])
    assert est.predict(["OO"])[0].n_points > 0
    assert est.transform(["OO", "ss"]).shape == (2, 64, 64)
    assert est.score(["OO"]) <= 0
    with pytest.raises(ValueError):
        est.predict(["OOO"])
