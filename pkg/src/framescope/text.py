"""Shared text normalization and whitespace tokenization.

Every stage of the pipeline operates on the same normalized form of a
transcript, so character offsets computed anywhere (chunking, span
annotation, phrase verification) stay comparable.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

_CTRL_RE = re.compile(r"[\x00-\x08\x0b-\x1f\x7f]")
_WS_RE = re.compile(r"\s+")
_TOKEN_RE = re.compile(r"\S+")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and drop control characters."""
    return _WS_RE.sub(" ", _CTRL_RE.sub("", text)).strip()


@dataclass(frozen=True)
class Token:
    """A whitespace-delimited token with character offsets into its source text."""

    text: str
    start: int
    end: int


def tokenize_with_offsets(text: str) -> list[Token]:
    """Split on whitespace, keeping each token's character span."""
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def word_boundary(text: str, n_words: int) -> int:
    """Character offset just past the first `n_words` whitespace tokens.

    Returns len(text) when the text has `n_words` tokens or fewer.
    """
    for i, m in enumerate(_TOKEN_RE.finditer(text)):
        if i == n_words - 1:
            return m.end()
    return len(text)


_WORD_EDGE_PUNCT = ".,;:!?\"'`()[]{}<>«»“”‘’-–—/\\|*#@&%+~_"


def strip_token_punct(token: str) -> str:
    """Strip punctuation from both edges of a token (keeps inner apostrophes)."""
    return token.strip(_WORD_EDGE_PUNCT)


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance; small inputs only (phrase-vs-window comparisons)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str) -> float:
    """Normalized edit similarity in [0, 1]; 1.0 means identical strings."""
    if not a and not b:
        return 1.0
    denom = max(len(a), len(b))
    return 1.0 - levenshtein(a, b) / denom
