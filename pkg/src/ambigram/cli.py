"""Command-line interface: ``ambigram design-letter | design-word | benchmark | render | rank``.

Every command takes ``--config run.json``; explicit flags override config
fields, which override defaults.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional

import click
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import AmbigramError
from .fonts import find_font
from .layout import CASE_POLICIES, AlignmentScheme

log = logging.getLogger("ambigram")


class BackendConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str = "letter-classifier"
    options: dict = Field(default_factory=dict)


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    lambdas: Optional[list[float]] = None
    schemes: Optional[list[str]] = None

    @field_validator("lambdas")
    @classmethod
    def _lams(cls, v):
        if v is not None and (not v or any(not 0 <= x <= 1 for x in v)):
            raise ValueError("lambdas must be a non-empty list of values in [0, 1]")
        return v

    @field_validator("schemes")
    @classmethod
    def _schemes(cls, v):
        if v is not None:
            v = [AlignmentScheme.parse(s).value for s in v]
        return v


class RunConfig(BaseModel):
    """Validated run description; checked in full before any work starts."""

    model_config = ConfigDict(extra="forbid")
    pairs: list[str] = Field(default_factory=list)
    word_a: Optional[str] = None
    word_b: Optional[str] = None
    case_policy: str = "as-given"
    font: str = "DejaVuSans.ttf"
    font_map: Optional[str] = None
    backend: BackendConfig = Field(default_factory=BackendConfig)
    hyper: dict = Field(default_factory=dict)
    grid: GridConfig = Field(default_factory=GridConfig)
    output_dir: str = "runs"
    seed: int = 0
    n_jobs: int = 1
    ocr: str = "template"
    words: list[str] = Field(default_factory=list)
    word_list: Optional[str] = None

    @field_validator("font")
    @classmethod
    def _font_exists(cls, v):
        try:
            find_font(v)
        except FileNotFoundError:
            raise ValueError(f"font file not found: {v}") from None
        return v

    @field_validator("case_policy")
    @classmethod
    def _policy(cls, v):
        if v not in CASE_POLICIES:
            raise ValueError(f"must be one of {CASE_POLICIES}")
        return v

    @field_validator("pairs")
    @classmethod
    def _pairs(cls, v):
        for p in v:
            if len(p) != 2 or not p.isascii() or not p.isalpha():
                raise ValueError(f"pair {p!r} must be two letters A-Z")
        return v

    @field_validator("word_a", "word_b")
    @classmethod
    def _word(cls, v):
        if v is not None and (not v or not v.isascii() or not v.isalpha()):
            raise ValueError("word must be a non-empty string of letters A-Z")
        return v

    @field_validator("n_jobs")
    @classmethod
    def _jobs(cls, v):
        if v < 1:
            raise ValueError("n_jobs must be >= 1")
        return v

    def hyperparams(self):
        from .pipeline import HyperParams

        return HyperParams.from_dict({**self.hyper, "seed": self.seed})

    def gridspec(self):
        from .pipeline import GridSpec

        kw = {"case_policy": self.case_policy}
        if self.grid.lambdas is not None:
            kw["lambdas"] = tuple(self.grid.lambdas)
        if self.grid.schemes is not None:
            kw["schemes"] = tuple(self.grid.schemes)
        return GridSpec(**kw)


def load_config(path, overrides: dict) -> RunConfig:
    """Merge defaults < config file < flags and validate."""
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {path}: {exc}") from exc
    for key, val in overrides.items():
        if val is None or val == () or val == []:
            continue
        if "." in key:
            outer, inner = key.split(".", 1)
            data.setdefault(outer, {})[inner] = val
        else:
            data[key] = val
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        lines = [f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()]
        raise click.UsageError("invalid configuration\n  " + "\n  ".join(lines)) from None


def _csv(text, conv=str):
    return [conv(t) for t in text.split(",") if t.strip()] if text else None


def _write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return path


def _backend(cfg: RunConfig):
    from .guidance import make_backend

    return make_backend(cfg.backend.name, **dict(cfg.backend.options))


def _classifier(backend):
    from .guidance import default_letter_classifier

    return getattr(backend, "classifier", None) or default_letter_classifier()


def _manifest(cfg: RunConfig, command: str, **extra) -> dict:
    from . import __version__

    return {"command": command, "version": __version__, "config": cfg.model_dump(), **extra}


def _run(fn):
    """Turn library errors into a clean message and exit code 2."""
    try:
        return fn()
    except (AmbigramError, FileNotFoundError, ValueError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration."),
    click.option("--font", default=None, help="Font file or name of an installed font."),
    click.option("--out", "output_dir", default=None, help="Output directory."),
    click.option("--seed", type=int, default=None),
]


def with_common(f):
    for opt in reversed(common):
        f = opt(f)
    return f


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging (-v info, -vv debug).")
def main(verbose):
    """Rotational ambigram design and evaluation."""
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)], format="%(levelname)s %(name)s: %(message)s")


def _store_candidate(root: Path, cand, rank: int):
    from .raster import rasterize
    from .svg import to_svg
    from .pipeline import postprocess

    a, b = cand.pair
    d = root / f"{a}{b}" / f"lam{cand.lambda_letter:.2f}" / cand.scheme.value
    d.mkdir(parents=True, exist_ok=True)
    stem = f"{cand.cases[0]}-{cand.cases[1]}"
    (d / f"{stem}.svg").write_text(to_svg(cand.glyph))
    postprocess(rasterize(cand.glyph, cand.hyper.resolution)).save_png(d / f"{stem}.png")
    _write_json(d / f"{stem}.json", {**cand.summary(), "rank": rank, "hyper": cand.hyper.to_dict()})


@main.command("design-letter")
@with_common
@click.option("--pair", "pairs", multiple=True, help="Letter pair such as 'OS' (upright O, rotated S). Repeatable.")
@click.option("--lambdas", default=None, help="Comma-separated lambda grid.")
@click.option("--schemes", default=None, help="Comma-separated alignment schemes.")
@click.option("--case-policy", default=None, type=click.Choice(CASE_POLICIES))
@click.option("--steps", type=int, default=None, help="Letter-stage steps.")
@click.option("--jobs", "n_jobs", type=int, default=None)
@click.option("--dry-run", is_flag=True, help="Print the resolved grid and exit.")
def design_letter(config_path, font, output_dir, seed, pairs, lambdas, schemes, case_policy, steps, n_jobs, dry_run):
    """Grid-search letter glyphs, rank them and write the candidate store."""
    over = {"font": font, "output_dir": output_dir, "seed": seed, "pairs": list(pairs), "case_policy": case_policy,
            "grid.lambdas": _csv(lambdas, float), "grid.schemes": _csv(schemes), "n_jobs": n_jobs}
    cfg = load_config(config_path, over)
    if steps is not None:
        cfg = cfg.model_copy(update={"hyper": {**cfg.hyper, "steps_letter": steps}})
    if not cfg.pairs:
        raise click.UsageError("no letter pairs given (use --pair or 'pairs' in the config)")
    grid = cfg.gridspec()
    if dry_run:
        for p in cfg.pairs:
            n_case = grid.size(p[0], p[1]) // (len(grid.lambdas) * len(grid.schemes))
            click.echo(f"{p}: {grid.size(p[0], p[1])} cells = {len(grid.lambdas)} lambdas x {len(grid.schemes)} schemes x {n_case} case combinations")
        return

    def work():
        from .pipeline import AmbigramFontMap, grid_search
        from .guidance.base import letter_prompt

        hyper = cfg.hyperparams()
        backend = _backend(cfg)
        clf = _classifier(backend)
        out = Path(cfg.output_dir)
        best, ranking, timings, failures, prompts = {}, {}, {}, {}, {}
        for p in cfg.pairs:
            t0 = time.perf_counter()
            cands = grid_search(p[0], p[1], cfg.font, backend, clf, grid, hyper, n_jobs=cfg.n_jobs, store=out / "checkpoints")
            timings[p] = round(time.perf_counter() - t0, 3)
            for rank, c in enumerate(cands):
                _store_candidate(out / "candidates", c, rank)
            ranking[p] = [c.key() for c in cands]
            failures[p] = cands.failures
            prompts[p] = sorted({letter_prompt(p[0], ca) + " | " + letter_prompt(p[1], cb) for _, _, ca, cb in grid.cells(p[0], p[1])})
            if cands:
                best[(p[0], p[1])] = cands[0].glyph
                click.echo(f"{p}: best {cands[0].key()} legibility {cands[0].legibility:.4f} ({len(cands)} candidates, {len(cands.failures)} failed)")
        AmbigramFontMap(best).save(out / "font_map.json")
        _write_json(out / "ranking.json", ranking)
        _write_json(out / "manifest.json", _manifest(cfg, "design-letter", hyper=hyper.to_dict(), grid=grid.to_dict(),
                                                     backend=backend.describe(), prompts=prompts, failures=failures))
        _write_json(out / "timings.json", timings)

    _run(work)


def _font_map(cfg: RunConfig):
    from .pipeline import AmbigramFontMap

    if cfg.font_map:
        return AmbigramFontMap.load(cfg.font_map)
    return None


class _InitialDesigns:
    """Font-map stand-in that builds un-optimized glyphs on demand."""

    def __init__(self, font, scheme="naive"):
        self.font = font
        self.scheme = scheme
        self.glyphs = {}

    def __contains__(self, key):
        return True

    def word_glyphs(self, word_a, word_b=None):
        from .layout import AmbigramTask, init_letter_pair

        task = AmbigramTask(word_a, word_b or word_a)
        out = []
        for i in range(task.n):
            a, b = task.letter_pair(i)
            key = (a.upper(), b.upper())
            if key not in self.glyphs:
                self.glyphs[key] = init_letter_pair(a.upper(), b.upper(), self.font, self.scheme, "upper", "upper")
            out.append(self.glyphs[key])
        return out

    def word_sequence(self, word_a, word_b=None):
        from .layout import layout_word

        return layout_word(self.word_glyphs(word_a, word_b))


def _sequence_to_json(seq) -> dict:
    from .pipeline.grid import _glyph_to_json

    return {"glyphs": [_glyph_to_json(g) for g in seq.glyphs], "placements": [[p.tx, p.ty, p.scale] for p in seq.placements]}


@main.command("design-word")
@with_common
@click.option("--word", "word_a", default=None, help="Word read upright.")
@click.option("--word-b", default=None, help="Word read after rotation (defaults to --word).")
@click.option("--font-map", default=None, type=click.Path(dir_okay=False), help="font_map.json from design-letter.")
@click.option("--steps", type=int, default=None, help="Word-stage steps.")
def design_word(config_path, font, output_dir, seed, word_a, word_b, font_map, steps):
    """Refine a word from letter glyphs and export SVG/PNG in both orientations."""
    over = {"font": font, "output_dir": output_dir, "seed": seed, "word_a": word_a, "word_b": word_b, "font_map": font_map}
    if word_a == "":
        raise click.UsageError("invalid configuration\n  word_a: word must be a non-empty string of letters A-Z")
    cfg = load_config(config_path, over)
    if steps is not None:
        cfg = cfg.model_copy(update={"hyper": {**cfg.hyper, "steps_word": steps}})
    if not cfg.word_a:
        raise click.UsageError("no word given (use --word or 'word_a' in the config)")

    def work():
        from .layout import AmbigramTask
        from .pipeline import optimize_word
        from .raster import rasterize_word
        from .svg import to_svg

        wb = cfg.word_b or cfg.word_a
        task = AmbigramTask(cfg.word_a, wb)
        fmap = _font_map(cfg) or _InitialDesigns(cfg.font)
        glyphs = fmap.word_glyphs(cfg.word_a, wb)
        hyper = cfg.hyperparams()
        backend = _backend(cfg)
        t0 = time.perf_counter()
        seq = optimize_word(task, glyphs, hyper, backend, checkpoint_path=Path(cfg.output_dir) / "checkpoints" / f"{cfg.word_a}-{wb}.ckpt")
        elapsed = time.perf_counter() - t0
        out = Path(cfg.output_dir) / "words" / f"{cfg.word_a}-{wb}"
        out.mkdir(parents=True, exist_ok=True)
        for n in range(len(seq)):
            (out / f"glyph_{n}.svg").write_text(to_svg(seq.cell_glyph(n)))
        (out / "composite.svg").write_text(to_svg(seq.word_glyph(), width=len(seq), height=1.0))
        img = rasterize_word(seq, hyper.resolution)
        img.save_png(out / "upright.png")
        img.rot180().save_png(out / "rotated.png")
        _write_json(out / "design.json", _sequence_to_json(seq))
        _write_json(out / "manifest.json", _manifest(cfg, "design-word", hyper=hyper.to_dict(), backend=backend.describe()))
        _write_json(out / "timings.json", {"word_stage_seconds": round(elapsed, 3)})
        click.echo(f"wrote {len(seq)} glyph SVGs and a composite to {out}")

    _run(work)


@main.command("benchmark")
@with_common
@click.option("--font-map", default=None, type=click.Path(dir_okay=False))
@click.option("--ocr", default=None, help="OCR adapter id.")
@click.option("--words", "word_list", default=None, type=click.Path(dir_okay=False), help="Word list file (one per line).")
@click.option("--smoke", is_flag=True, help="Use the pinned 5-word smoke list.")
@click.option("--limit", type=int, default=None, help="Only the first N words.")
def benchmark(config_path, font, output_dir, seed, font_map, ocr, word_list, smoke, limit):
    """OCR every word upright and rotated; write records.jsonl and summary.json."""
    over = {"font": font, "output_dir": output_dir, "seed": seed, "font_map": font_map, "ocr": ocr, "word_list": word_list}
    cfg = load_config(config_path, over)

    def work():
        from .eval import SMOKE_WORDS, filter_words, load_word_list, make_ocr, run_benchmark

        adapter = make_ocr(cfg.ocr)
        if smoke:
            words = list(SMOKE_WORDS)
        elif cfg.words:
            words = filter_words(cfg.words)
        else:
            words = filter_words(load_word_list(cfg.word_list))
        if limit:
            words = words[:limit]
        designs = _font_map(cfg) or _InitialDesigns(cfg.font)
        source = cfg.font_map or f"initialization:{cfg.font}"
        report = run_benchmark(words, designs, adapter, out_dir=cfg.output_dir, manifest={"designs": source})
        click.echo(f"{len(report.records)} words: accuracy {report.accuracy:.4f}, mean edit distance {report.mean_edit_distance:.4f}")

    _run(work)


@main.command("render")
@click.option("--font-map", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--font", default="DejaVuSans.ttf")
@click.option("--word", default=None)
@click.option("--svg", "svg_path", default=None, type=click.Path(exists=True, dir_okay=False), help="Render a single glyph SVG.")
@click.option("--height", type=int, default=64)
@click.option("--rotated", is_flag=True, help="Also write the 180-degree view.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output PNG path.")
def render(font_map, font, word, svg_path, height, rotated, out):
    """Rasterize a word from a font map (or a glyph SVG) to PNG."""

    def work():
        from .raster import rasterize, rasterize_word

        if svg_path:
            from .svg import from_svg

            img = rasterize(from_svg(Path(svg_path).read_text()), height)
        elif word:
            from .pipeline import AmbigramFontMap

            fmap = AmbigramFontMap.load(font_map) if font_map else _InitialDesigns(font)
            img = rasterize_word(fmap.word_sequence(word), height)
        else:
            raise click.UsageError("give --word or --svg")
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        img.save_png(p)
        if rotated:
            img.rot180().save_png(p.with_name(p.stem + "_rotated" + p.suffix))
        click.echo(f"wrote {p}")

    _run(work)


@main.command("rank")
@click.option("--store", required=True, type=click.Path(exists=True, file_okay=False), help="Candidate store directory.")
@click.option("--top", type=int, default=5)
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write the full ranking as JSON here.")
def rank(store, top, out):
    """Re-rank stored candidates of each pair with the reference classifier."""

    def work():
        from .guidance import default_letter_classifier
        from .pipeline import legibility_score
        from .svg import from_svg

        clf = default_letter_classifier()
        root = Path(store)
        result = {}
        for pair_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            a, b = pair_dir.name
            rows = []
            for svg in sorted(pair_dir.rglob("*.svg")):
                meta = json.loads(svg.with_suffix(".json").read_text())
                score = legibility_score(from_svg(svg.read_text()), a, b, clf, tuple(meta["cases"]))
                rows.append((score, str(svg.relative_to(root))))
            rows.sort(key=lambda r: r[0])
            result[pair_dir.name] = [{"candidate": name, "legibility": s} for s, name in rows]
            for s, name in rows[:top]:
                click.echo(f"{pair_dir.name}  {s:8.4f}  {name}")
        if out:
            _write_json(Path(out), result)

    _run(work)


if __name__ == "__main__":
    main()
