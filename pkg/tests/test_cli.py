import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from ambigram.cli import main
from ambigram.glyph import Glyph, rotate180
from ambigram.layout import init_letter_pair
from ambigram.pipeline import AmbigramFontMap

from conftest import FONT


@pytest.fixture
def runner():
    return CliRunner()


def _symmetric_map(letters):
    """Map whose word designs are symmetric: (b, a) is (a, b) turned, (a, a) is self-symmetric."""
    glyphs = {}
    for a in letters:
        for b in letters:
            if a < b:
                g = init_letter_pair(a, b, FONT, "naive")
                glyphs[(a, b)] = g
                glyphs[(b, a)] = rotate180(g)
            elif a == b:
                g = init_letter_pair(a, a, FONT, "naive")
                glyphs[(a, a)] = Glyph(g.paths + rotate180(g).paths)
    return AmbigramFontMap(glyphs, letters)


def test_dry_run_prints_grid(runner):
    res = runner.invoke(main, ["design-letter", "--pair", "os", "--case-policy", "try-both", "--dry-run"])
    assert res.exit_code == 0, res.output
    assert "176 cells" in res.output


def test_missing_font_names_field(runner):
    res = runner.invoke(main, ["design-letter", "--pair", "OS", "--font", "/nope/missing.ttf", "--dry-run"])
    assert res.exit_code == 2
    assert "font" in res.output and "not found" in res.output


def test_empty_word_is_rejected(runner):
    res = runner.invoke(main, ["design-word", "--word", ""])
    assert res.exit_code == 2 and "word" in res.output


def test_bad_config_key(runner, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"pairs": ["OS"], "nonsense": 1}))
    res = runner.invoke(main, ["design-letter", "--config", str(cfg), "--dry-run"])
    assert res.exit_code == 2 and "nonsense" in res.output


def test_config_file_and_flag_precedence(runner, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"pairs": ["OS"], "grid": {"lambdas": [0.5], "schemes": ["naive"]}}))
    res = runner.invoke(main, ["design-letter", "--config", str(cfg), "--dry-run"])
    assert "1 cells" in res.output
    res = runner.invoke(main, ["design-letter", "--config", str(cfg), "--lambdas", "0.1,0.2", "--dry-run"])
    assert "2 cells" in res.output


def test_design_letter_rerun_is_identical(runner, tmp_path):
    args = ["design-letter", "--pair", "OO", "--pair", "bq", "--lambdas", "0.5", "--schemes", "naive,max-overlap",
            "--steps", "3", "--out", str(tmp_path)]
    res = runner.invoke(main, args)
    assert res.exit_code == 0, res.output
    files = ["manifest.json", "ranking.json", "font_map.json"]
    first = {f: (tmp_path / f).read_bytes() for f in files}
    store = tmp_path / "candidates" / "bq" / "lam0.50" / "max-overlap"
    assert {p.suffix for p in store.iterdir()} == {".svg", ".png", ".json"}
    assert runner.invoke(main, args).exit_code == 0
    assert all((tmp_path / f).read_bytes() == first[f] for f in files)
    assert "OO" in json.loads((tmp_path / "timings.json").read_text())

    res = runner.invoke(main, ["rank", "--store", str(tmp_path / "candidates"), "--top", "1", "--out", str(tmp_path / "r.json")])
    assert res.exit_code == 0, res.output
    ranked = json.loads((tmp_path / "r.json").read_text())
    assert set(ranked) == {"OO", "bq"} and len(ranked["bq"]) == 2


def test_design_word_symmetric_map(runner, tmp_path):
    fmap = _symmetric_map("IMSW").save(tmp_path / "map.json")
    res = runner.invoke(main, ["design-word", "--word", "swims", "--font-map", str(fmap), "--steps", "0", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    out = tmp_path / "words" / "swims-swims"
    assert sorted(p.name for p in out.glob("*.svg")) == ["composite.svg"] + [f"glyph_{n}.svg" for n in range(5)]
    up = np.asarray(Image.open(out / "upright.png"), dtype=float) / 255
    rot = np.asarray(Image.open(out / "rotated.png"), dtype=float) / 255
    assert np.abs(up - rot).mean() < 2e-2


def test_design_word_optimizes(runner, tmp_path):
    res = runner.invoke(main, ["design-word", "--word", "os", "--word-b", "so", "--steps", "2", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    design = json.loads((tmp_path / "words" / "os-so" / "design.json").read_text())
    assert len(design["glyphs"]) == 2


def test_benchmark_smoke(runner, tmp_path):
    res = runner.invoke(main, ["benchmark", "--smoke", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    recs = [json.loads(x) for x in (tmp_path / "records.jsonl").read_text().splitlines()]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(recs) == 5
    assert summary["accuracy"] == sum(r["correct"] for r in recs) / 5
    assert summary["mean_edit_distance"] == sum(r["edit_distance_sum"] for r in recs) / 5


def test_benchmark_unknown_ocr(runner, tmp_path):
    res = runner.invoke(main, ["benchmark", "--smoke", "--ocr", "tesseract", "--out", str(tmp_path)])
    assert res.exit_code == 2
    assert "template" in res.output and "stub" in res.output


def test_render(runner, tmp_path):
    out = tmp_path / "noon.png"
    res = runner.invoke(main, ["render", "--word", "noon", "--out", str(out), "--rotated"])
    assert res.exit_code == 0, res.output
    assert Image.open(out).size == (256, 64)
    assert (tmp_path / "noon_rotated.png").exists()
