"""Stage-wise design driver: letter stage, selection, clean-up, word stage."""

from .config import DEFAULT_LAMBDAS, GridSpec, HyperParams, decay_factor
from .estimator import LetterAmbigramDesigner
from .grid import AmbigramFontMap, CandidateList, assemble_font, cell_seed, grid_search
from .letter import optimize_letter, optimize_pixels, step_rng
from .select import DesignCandidate, PostProcessor, legibility_score, postprocess, rank_candidates
from .word import mean_displacement, mean_pair_cross_entropy, optimize_word

__all__ = [
    "AmbigramFontMap",
    "CandidateList",
    "DEFAULT_LAMBDAS",
    "DesignCandidate",
    "GridSpec",
    "HyperParams",
    "LetterAmbigramDesigner",
    "PostProcessor",
    "assemble_font",
    "cell_seed",
    "decay_factor",
    "grid_search",
    "legibility_score",
    "mean_displacement",
    "mean_pair_cross_entropy",
    "optimize_letter",
    "optimize_pixels",
    "optimize_word",
    "postprocess",
    "rank_candidates",
    "step_rng",
]
