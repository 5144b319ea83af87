"""Grid search over letter-stage settings and assembly of a full ambigram font."""

from __future__ import annotations

import hashlib
import json
import logging
import string
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AmbigramError, MissingPair
from ..glyph import BezierPath, Glyph, rotate180
from ..layout import AmbigramTask, init_letter_pair, layout_word
from .config import GridSpec, HyperParams
from .letter import optimize_letter
from .select import DesignCandidate, legibility_score, rank_candidates

log = logging.getLogger(__name__)

LETTERS = string.ascii_uppercase


def cell_seed(master: int, a: str, b: str, lam: float, scheme, case_a: str, case_b: str) -> int:
    """Seed of one grid cell; depends only on the cell itself, not on the grid it sits in."""
    key = f"{int(master)}|{a}{b}|{lam:.6f}|{getattr(scheme, 'value', scheme)}|{case_a}|{case_b}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:7], "little")


class CandidateList(list):
    """Ranked candidates plus the ``failures`` recorded while the grid kept running."""

    def __init__(self, items=(), failures=None):
        super().__init__(items)
        self.failures = list(failures or [])


def _run_cell(a, b, font, hyper, backend, predictor, style, cell, classifier, store):
    lam, scheme, ca, cb = cell
    seed = cell_seed(hyper.seed, a, b, lam, scheme, ca, cb)
    h = hyper.replace(lambda_letter=lam, scheme=scheme, seed=seed)
    t0 = time.perf_counter()
    init = init_letter_pair(a, b, font, scheme, ca, cb, h.resolution)
    ckpt = None
    if store is not None:
        ckpt = Path(store) / f"{a}{b}" / f"lam{lam:.2f}" / scheme.value / f"{ca}-{cb}.ckpt"
    g = optimize_letter(a, b, font, h, backend, predictor, style, ca, cb, init=init, checkpoint_path=ckpt)
    init_leg = legibility_score(init, a, b, classifier, (ca, cb), resolution=h.resolution) if classifier is not None else None
    cand = DesignCandidate(g, h, (a, b), (ca, cb), seed, None, init_leg)
    log.info("cell %s done in %.1fs", cand.key(), time.perf_counter() - t0)
    return cand


def grid_search(
    a: str,
    b: str,
    font,
    backend,
    classifier=None,
    grid: GridSpec | None = None,
    hyper: HyperParams | None = None,
    predictor=None,
    style=None,
    n_jobs: int = 1,
    store=None,
) -> CandidateList:
    """Optimize one candidate per grid cell and rank them.

    Cells that raise an :class:`AmbigramError` are recorded in ``.failures``
    and skipped.  With ``n_jobs > 1`` cells run in worker processes, each with
    its own copy of the backend.
    """
    grid = grid or GridSpec()
    hyper = hyper or HyperParams()
    cells = grid.cells(a, b)
    args = (a, b, font, hyper, backend, predictor, style)
    results = []
    if n_jobs == 1:
        for cell in cells:
            try:
                results.append(_run_cell(*args, cell, classifier, store))
            except AmbigramError as exc:
                results.append(exc)
    else:
        from joblib import Parallel, delayed

        def safe(cell):
            try:
                return _run_cell(*args, cell, classifier, store)
            except AmbigramError as exc:
                return exc

        results = Parallel(n_jobs=n_jobs)(delayed(safe)(cell) for cell in cells)
    cands, failures = [], []
    for cell, r in zip(cells, results):
        if isinstance(r, Exception):
            lam, scheme, ca, cb = cell
            failures.append({"lambda_letter": lam, "scheme": scheme.value, "cases": [ca, cb], "error": f"{type(r).__name__}: {r}"})
            log.warning("grid cell %s failed: %s", cell, r)
        else:
            cands.append(r)
    if classifier is not None:
        cands = rank_candidates(cands, classifier)
    return CandidateList(cands, failures)


def _norm_pair(key) -> tuple:
    if isinstance(key, str):
        if len(key) != 2:
            raise KeyError(f"pair key must have two letters, got {key!r}")
        key = (key[0], key[1])
    a, b = key
    return a.upper(), b.upper()


def _glyph_to_json(g: Glyph) -> dict:
    return {"fill_rule": g.fill_rule, "paths": [p.points.tolist() for p in g.paths]}


def _glyph_from_json(d: dict) -> Glyph:
    return Glyph(tuple(BezierPath(np.array(p, dtype=np.float64)) for p in d["paths"]), d.get("fill_rule", "nonzero"))


@dataclass
class AmbigramFontMap:
    """Glyph for every ordered letter pair: glyph (a, b) reads a upright and b rotated."""

    glyphs: dict = field(default_factory=dict)
    letters: str = LETTERS

    def __post_init__(self):
        self.glyphs = {_norm_pair(k): v for k, v in self.glyphs.items()}

    def __getitem__(self, key) -> Glyph:
        return self.glyphs[_norm_pair(key)]

    def __contains__(self, key) -> bool:
        return _norm_pair(key) in self.glyphs

    def __len__(self) -> int:
        return len(self.glyphs)

    def missing(self) -> list:
        return [a + b for a in self.letters for b in self.letters if (a, b) not in self.glyphs]

    @property
    def complete(self) -> bool:
        return not self.missing()

    def word_glyphs(self, word_a: str, word_b: str | None = None) -> list:
        """Glyph n is the entry for (a_n, b_{N-n+1}); ``word_b`` defaults to ``word_a``."""
        task = AmbigramTask(word_a, word_b if word_b is not None else word_a)
        keys = [task.letter_pair(i) for i in range(task.n)]
        absent = sorted({(x + y).upper() for x, y in keys if (x, y) not in self})
        if absent:
            raise MissingPair(absent)
        return [self[k] for k in keys]

    def word_sequence(self, word_a: str, word_b: str | None = None):
        return layout_word(self.word_glyphs(word_a, word_b))

    def swapped(self) -> "AmbigramFontMap":
        """Map whose (a, b) entry is the rotated (b, a) entry of this one."""
        return AmbigramFontMap({(b, a): rotate180(g) for (a, b), g in self.glyphs.items()}, self.letters)

    def to_json(self) -> str:
        data = {"letters": self.letters, "glyphs": {a + b: _glyph_to_json(g) for (a, b), g in sorted(self.glyphs.items())}}
        return json.dumps(data, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "AmbigramFontMap":
        data = json.loads(Path(path).read_text())
        return cls({k: _glyph_from_json(v) for k, v in data["glyphs"].items()}, data.get("letters", LETTERS))

    @classmethod
    def from_initialization(cls, font, scheme="naive", letters: str = LETTERS, case: str = "upper") -> "AmbigramFontMap":
        """Un-optimized map built from aligned font letters (a baseline and a test fixture)."""
        glyphs = {(a, b): init_letter_pair(a, b, font, scheme, case, case) for a in letters for b in letters}
        return cls(glyphs, letters)


def assemble_font(best: dict, reuse_rotated: bool = False, letters: str = LETTERS) -> AmbigramFontMap:
    """Collect the selected glyph of every ordered pair into a font map.

    Values may be glyphs or candidates.  With ``reuse_rotated`` a missing (b, a)
    entry is filled with the present (a, b) glyph turned by 180 degrees.
    """
    glyphs = {}
    for key, val in best.items():
        glyphs[_norm_pair(key)] = val.glyph if isinstance(val, DesignCandidate) else val
    if reuse_rotated:
        for (a, b), g in list(glyphs.items()):
            glyphs.setdefault((b, a), rotate180(g))
    fmap = AmbigramFontMap(glyphs, letters)
    missing = fmap.missing()
    if missing:
        raise MissingPair(missing)
    return fmap
