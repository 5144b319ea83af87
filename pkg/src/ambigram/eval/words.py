"""Reference word list shipped with the package."""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path

COMMON_WORDS_FILE = "common_words_500.txt"
COMMON_WORDS_SHA256 = "18aa8489f4a03ad78a1ea66badda5d04447f040ae079fdade4a32bb1b9a3aff7"
SMOKE_WORDS = ("swims", "noon", "pod", "dollop", "suns")


class ChecksumMismatch(ValueError):
    pass


def filter_words(words, min_length: int = 3) -> list:
    """Lowercase, keep alphabetic ASCII words of at least ``min_length`` letters, dedupe in order."""
    seen, out = set(), []
    for w in words:
        w = w.strip().lower()
        if len(w) >= min_length and w.isascii() and w.isalpha() and w not in seen:
            seen.add(w)
            out.append(w)
    return out


def load_word_list(path=None, sha256: str | None = None, verify: bool = True) -> list:
    """One word per line.  Without ``path`` the pinned 500-word list is loaded and verified."""
    if path is None:
        raw = resources.files("ambigram.eval").joinpath("data", COMMON_WORDS_FILE).read_bytes()
        sha256 = sha256 or COMMON_WORDS_SHA256
    else:
        raw = Path(path).read_bytes()
    if verify and sha256 is not None:
        got = hashlib.sha256(raw).hexdigest()
        if got != sha256:
            raise ChecksumMismatch(f"word list checksum {got} does not match pinned {sha256}")
    return [line.strip() for line in raw.decode("utf-8").splitlines() if line.strip()]
