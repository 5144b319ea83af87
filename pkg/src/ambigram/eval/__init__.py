"""Legibility benchmark: OCR both orientations, word accuracy and edit distance."""

from .benchmark import EvalReport, WordRecord, edit_distance, evaluate_word, render_design, run_benchmark
from .ocr import OCR_ADAPTERS, ClassifierOcr, OcrAdapter, StubOcr, TemplateOcr, TrOcrAdapter, image_digest, make_ocr
from .words import COMMON_WORDS_SHA256, SMOKE_WORDS, ChecksumMismatch, filter_words, load_word_list

__all__ = [
    "COMMON_WORDS_SHA256",
    "ChecksumMismatch",
    "ClassifierOcr",
    "EvalReport",
    "OCR_ADAPTERS",
    "OcrAdapter",
    "SMOKE_WORDS",
    "StubOcr",
    "TemplateOcr",
    "TrOcrAdapter",
    "WordRecord",
    "edit_distance",
    "evaluate_word",
    "filter_words",
    "image_digest",
    "load_word_list",
    "make_ocr",
    "render_design",
    "run_benchmark",
]
