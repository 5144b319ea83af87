"""Word-accuracy / edit-distance benchmark."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import MissingDesign, MissingPair, OcrFailure
from ..glyph import GlyphSequence
from ..raster import DEFAULT_RESOLUTION, RasterImage, rasterize_word
from .ocr import case_insensitive

RECORDS_FILE = "records.jsonl"
SUMMARY_FILE = "summary.json"


def edit_distance(s: str, t: str) -> int:
    """Levenshtein distance (unit-cost insertions, deletions, substitutions)."""
    if len(s) < len(t):
        s, t = t, s
    prev = list(range(len(t) + 1))
    for i, cs in enumerate(s, 1):
        cur = [i]
        for j, ct in enumerate(t, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (cs != ct)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class WordRecord:
    word: str
    prediction_upright: str
    prediction_rotated: str
    edit_distance_sum: int
    correct: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _read(ocr, img: RasterImage) -> str:
    try:
        return case_insensitive(ocr.recognize(img))
    except OcrFailure:
        return ""


def render_design(design, height: int = DEFAULT_RESOLUTION) -> RasterImage:
    if isinstance(design, RasterImage):
        return design
    if isinstance(design, GlyphSequence):
        return rasterize_word(design, height)
    raise TypeError(f"cannot render a design of type {type(design).__name__}")


def evaluate_word(word: str, design, ocr, height: int = DEFAULT_RESOLUTION) -> WordRecord:
    """Read the design upright and turned by 180 degrees; both must spell ``word``."""
    if not word:
        raise ValueError("word must be non-empty")
    target = word.lower()
    img = render_design(design, height)
    up = _read(ocr, img)
    rot = _read(ocr, img.rot180())
    dist = edit_distance(target, up) + edit_distance(target, rot)
    return WordRecord(word, up, rot, dist, up == target and rot == target)


@dataclass
class EvalReport:
    records: list
    manifest: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return sum(r.correct for r in self.records) / len(self.records) if self.records else 0.0

    @property
    def mean_edit_distance(self) -> float:
        return float(np.mean([r.edit_distance_sum for r in self.records])) if self.records else 0.0

    def summary(self) -> dict:
        return {
            "n_words": len(self.records),
            "n_correct": sum(r.correct for r in self.records),
            "accuracy": self.accuracy,
            "mean_edit_distance": self.mean_edit_distance,
            "manifest": self.manifest,
        }

    def write(self, out_dir) -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rec = out / RECORDS_FILE
        rec.write_text("".join(r.to_json() + "\n" for r in self.records))
        summ = out / SUMMARY_FILE
        summ.write_text(json.dumps(self.summary(), sort_keys=True, indent=2) + "\n")
        return rec, summ

    @classmethod
    def read(cls, out_dir) -> "EvalReport":
        out = Path(out_dir)
        records = [WordRecord(**json.loads(line)) for line in (out / RECORDS_FILE).read_text().splitlines() if line]
        manifest = json.loads((out / SUMMARY_FILE).read_text()).get("manifest", {})
        return cls(records, manifest)


def _lookup(designs, word):
    if hasattr(designs, "word_sequence"):
        return designs.word_sequence(word)
    if callable(designs):
        return designs(word)
    return designs[word]


def run_benchmark(words, designs, ocr, out_dir=None, height: int = DEFAULT_RESOLUTION, manifest: dict | None = None, renders_dir=None) -> EvalReport:
    """Evaluate every word; ``designs`` is a font map, a word -> design mapping, or a callable.

    All words are checked for a design before any OCR runs.
    """
    words = list(words)
    if not words:
        raise ValueError("word list is empty")
    resolved, missing = {}, []
    for w in words:
        try:
            resolved[w] = _lookup(designs, w)
        except (KeyError, MissingPair):
            missing.append(w)
    if missing:
        raise MissingDesign(missing)
    records = []
    for w in words:
        img = render_design(resolved[w], height)
        if renders_dir is not None:
            Path(renders_dir).mkdir(parents=True, exist_ok=True)
            img.save_png(Path(renders_dir) / f"{w}.png")
        records.append(evaluate_word(w, img, ocr, height))
    info = {"ocr": ocr.describe() if hasattr(ocr, "describe") else type(ocr).__name__, "height": height, "n_words": len(words)}
    report = EvalReport(records, {**info, **(manifest or {})})
    if out_dir is not None:
        report.write(out_dir)
    return report
