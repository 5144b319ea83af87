import hashlib
import json

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from ambigram.errors import MissingDesign, OcrFailure
from ambigram.eval import (
    COMMON_WORDS_SHA256,
    SMOKE_WORDS,
    ChecksumMismatch,
    EvalReport,
    StubOcr,
    TemplateOcr,
    WordRecord,
    edit_distance,
    evaluate_word,
    filter_words,
    load_word_list,
    make_ocr,
    run_benchmark,
)
from ambigram.pipeline import AmbigramFontMap
from ambigram.raster import RasterImage

import oracles
from conftest import FONT

short = st.text(alphabet="abc", max_size=6)


@pytest.fixture(scope="module")
def smoke_map():
    letters = "".join(sorted(set("".join(SMOKE_WORDS).upper())))
    return AmbigramFontMap.from_initialization(FONT, letters=letters)


@pytest.fixture(scope="module")
def template_ocr():
    return TemplateOcr()


def test_edit_distance_examples():
    assert edit_distance("area", "area") == 0
    assert edit_distance("", "the") == 3
    assert edit_distance("kitten", "sitting") == 3


def test_edit_distance_exhaustive_oracle():
    strings = list(oracles.all_strings("ab", 3))
    for s in strings:
        for t in strings:
            assert edit_distance(s, t) == oracles.exhaustive_edit_distance(s, t)


@given(short, short, short)
@settings(max_examples=200, deadline=None)
def test_edit_distance_metric_axioms(s, t, u):
    d = edit_distance
    assert d(s, s) == 0
    assert d(s, t) == d(t, s)
    assert d(s, t) <= d(s, u) + d(u, t)
    assert abs(len(s) - len(t)) <= d(s, t) <= max(len(s), len(t))
    assert (d(s, t) == 0) == (s == t)


def _blank(n=3):
    return RasterImage(torch.zeros(64, 64 * n))


def test_evaluate_word_examples():
    img = _blank()
    both = StubOcr(lambda im: "the")
    rec = evaluate_word("the", img, both)
    assert rec.correct and rec.edit_distance_sum == 0

    answers = iter(["the", "tne"])
    rec = evaluate_word("the", img, StubOcr(lambda im: next(answers)))
    assert not rec.correct and rec.edit_distance_sum == 1


def test_ocr_failure_counts_as_empty():
    def fail(img):
        raise OcrFailure("unreadable")

    rec = evaluate_word("and", _blank(), StubOcr(fail))
    assert rec.prediction_upright == "" and rec.edit_distance_sum == 6 and not rec.correct


def test_comparison_is_case_insensitive():
    rec = evaluate_word("Noon", _blank(4), StubOcr(lambda im: " NOON\n"))
    assert rec.correct and rec.prediction_upright == "noon"


def test_report_aggregates():
    recs = [WordRecord("abc", "abc", "abc", 0, True), WordRecord("def", "dxx", "def", 4, False)]
    rep = EvalReport(recs)
    assert rep.accuracy == 0.5
    assert rep.mean_edit_distance == 2.0


def test_filter_words():
    raw = ["The", "of", "a", "and", "it's", "café", "and", "naïve", "house", "to"]
    assert filter_words(raw) == ["the", "and", "house"]


def test_pinned_word_list():
    words = load_word_list()
    assert len(words) == 500 and len(set(words)) == 500
    assert all(len(w) > 2 and w.isalpha() and w == w.lower() for w in words)
    assert all(w in words for w in ("the", "and"))


def test_word_list_checksum(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("alpha\nbeta\n")
    assert load_word_list(p, hashlib.sha256(p.read_bytes()).hexdigest()) == ["alpha", "beta"]
    with pytest.raises(ChecksumMismatch):
        load_word_list(p, COMMON_WORDS_SHA256)


def test_missing_design_fails_before_ocr(smoke_map):
    calls = []
    ocr = StubOcr(lambda im: calls.append(1) or "")
    with pytest.raises(MissingDesign) as exc:
        run_benchmark(["noon", "zebra", "suns"], smoke_map, ocr)
    assert exc.value.words == ["zebra"] and not calls


def test_unknown_ocr_lists_adapters():
    with pytest.raises(ValueError, match="stub.*template"):
        make_ocr("tesseract")


def test_template_ocr_reads_font_letters(template_ocr):
    from ambigram.fonts import load_font_glyph
    from ambigram.layout import layout_word
    from ambigram.raster import rasterize_word

    word = "abcdefghijklmnopqrstuvwxyz"
    for case in ("lower", "upper"):
        img = rasterize_word(layout_word([load_font_glyph(FONT, c, case) for c in word]), 64)
        assert template_ocr.recognize(img) == word


def test_symmetric_design_reads_the_same_both_ways(template_ocr):
    seq = AmbigramFontMap.from_initialization(FONT, letters="OS").word_sequence("sos")
    rec = evaluate_word("sos", seq, template_ocr)
    assert rec.prediction_upright == rec.prediction_rotated


def test_swap_invariance(template_ocr, smoke_map):
    swapped = smoke_map.swapped()
    for word in SMOKE_WORDS:
        r1 = evaluate_word(word, smoke_map.word_sequence(word), template_ocr)
        r2 = evaluate_word(word, swapped.word_sequence(word), template_ocr)
        assert r1.edit_distance_sum == r2.edit_distance_sum and r1.correct == r2.correct
        assert {r1.prediction_upright, r1.prediction_rotated} == {r2.prediction_upright, r2.prediction_rotated}


def test_benchmark_files_recompute_and_rerun(tmp_path, template_ocr, smoke_map):
    rep = run_benchmark(SMOKE_WORDS, smoke_map, template_ocr, tmp_path / "a")
    run_benchmark(SMOKE_WORDS, smoke_map, template_ocr, tmp_path / "b")
    for name in ("records.jsonl", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    lines = (tmp_path / "a" / "records.jsonl").read_text().splitlines()
    recs = [json.loads(x) for x in lines]
    assert [r["word"] for r in recs] == list(SMOKE_WORDS)
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["accuracy"] == sum(r["correct"] for r in recs) / len(recs)
    assert summary["mean_edit_distance"] == float(np.mean([r["edit_distance_sum"] for r in recs]))
    back = EvalReport.read(tmp_path / "a")
    assert back.records == rep.records
