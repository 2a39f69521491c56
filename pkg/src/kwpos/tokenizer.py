"""Word tokenization and word-class predicates (stop words, frequent words).

Every component of this toolkit measures lengths and positions in the word
tokens produced by :func:`tokenize_words`, so all consumers must tokenize
through this module to stay mutually consistent.

The tokenizer is Treebank-flavoured: clitics (``'s``, ``n't``, ``'re``, ...)
are split from their host word, punctuation is detached into separate
tokens, and hyphenated words stay joined.  Token surfaces are exact
substrings of the input (no normalization), so the recorded character
offsets always reconstruct them.  Known divergences from other Treebank
implementations are listed in the README.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:  # pragma: no cover
    from .dataset import Document

__all__ = [
    "TokenizedText",
    "WordList",
    "tokenize_words",
    "is_stopword",
    "build_frequent_word_list",
    "load_word_list",
    "default_stopwords",
]

_TOKEN_RE = re.compile(
    r"""
      \.\.\.                # ellipsis
    | \d+(?:[.,]\d+)+       # decimal or digit-grouped numbers (3.88, 10,000)
    | \w+(?:['’-]\w+)*      # words; internal apostrophes and hyphens kept
    | --+                   # dash runs
    | \S                    # any other single non-space character
    """,
    re.VERBOSE,
)

# Clitics are stripped from the tail of a word chunk, repeatedly, so that
# "shouldn't've" yields ["should", "n't", "'ve"].
_NT_RE = re.compile(r"(?i)^(.+)(n['’]t)$")
_CLITIC_RE = re.compile(r"(?i)^(.+)(['’](?:s|m|d|ll|re|ve))$")


@dataclass(frozen=True)
class TokenizedText:
    """A word-token sequence with character offsets back into the raw text.

    ``raw[offsets[i][0]:offsets[i][1]] == tokens[i]`` holds for every token;
    offsets are strictly increasing and non-overlapping.  ``tokens`` is empty
    iff ``raw`` contains no non-whitespace characters (punctuation counts as
    a word token throughout this toolkit).
    """

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]
    raw: str

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def word_count(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "TokenizedText":
        """Build a TokenizedText from an already-tokenized word sequence.

        Words may not contain whitespace.  The raw text is the words joined
        by single spaces, which keeps the offset invariants intact.
        """
        toks = tuple(words)
        for w in toks:
            if not w or any(c.isspace() for c in w):
                raise ValueError(f"invalid pre-tokenized word: {w!r}")
        offsets = []
        pos = 0
        for w in toks:
            offsets.append((pos, pos + len(w)))
            pos += len(w) + 1
        return cls(tokens=toks, offsets=tuple(offsets), raw=" ".join(toks))


def _split_clitics(chunk: str, start: int) -> list[tuple[str, int, int]]:
    """Split trailing clitics off a word chunk, returning (token, start, end)."""
    pieces: list[tuple[str, int, int]] = []
    while True:
        m = _NT_RE.match(chunk) or _CLITIC_RE.match(chunk)
        if m is None:
            break
        base, clitic = m.group(1), m.group(2)
        split_at = start + len(base)
        pieces.append((clitic, split_at, split_at + len(clitic)))
        chunk = base
    pieces.append((chunk, start, start + len(chunk)))
    pieces.reverse()
    return pieces


def tokenize_words(raw: str) -> TokenizedText:
    """Tokenize text into word tokens with character offsets.

    Deterministic and total: the empty string yields an empty token list,
    and any non-whitespace character belongs to exactly one token.
    """
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    for m in _TOKEN_RE.finditer(raw):
        chunk = m.group()
        if "'" in chunk or "’" in chunk:
            for tok, s, e in _split_clitics(chunk, m.start()):
                tokens.append(tok)
                offsets.append((s, e))
        else:
            tokens.append(chunk)
            offsets.append((m.start(), m.end()))
    return TokenizedText(tokens=tuple(tokens), offsets=tuple(offsets), raw=raw)


_WORD_LIST_KINDS = ("stopword", "frequent")


@dataclass(frozen=True)
class WordList:
    """A case-insensitive word set used as an extraction filter.

    ``kind`` is ``"stopword"`` or ``"frequent"``.  Frequent lists record the
    corpus description and cutoff they were built from in ``source`` and
    ``cutoff``.
    """

    entries: frozenset[str]
    kind: str
    source: str = ""
    cutoff: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _WORD_LIST_KINDS:
            raise ValueError(f"unknown word list kind: {self.kind!r}")
        lowered = frozenset(w.lower() for w in self.entries)
        object.__setattr__(self, "entries", lowered)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def is_stopword(word: str, wordlist: WordList) -> bool:
    """True iff the lowercased word is in the stop word list."""
    if wordlist.kind != "stopword":
        raise ValueError(f"expected a stopword list, got kind {wordlist.kind!r}")
    return word in wordlist


def load_word_list(path: str | Path, kind: str, source: str = "") -> WordList:
    """Load a word list file: UTF-8, one word per line, '#' comment lines."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            entries.append(word)
    return WordList(frozenset(entries), kind, source=source or str(path))


@lru_cache(maxsize=1)
def default_stopwords() -> WordList:
    """The fixed built-in English stop word list shipped with the package."""
    ref = resources.files("kwpos").joinpath("data/stopwords.txt")
    entries = []
    for line in ref.read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            entries.append(word)
    return WordList(frozenset(entries), "stopword", source="builtin")


def build_frequent_word_list(
    corpus: Iterable["Document"], top_n: int, source: str = ""
) -> WordList:
    """Collect the top_n most frequent lowercased target-text tokens.

    Ties are broken lexicographically so the result is deterministic and
    invariant under document reordering.  Raises ValueError on an empty
    corpus.
    """
    if top_n < 0:
        raise ValueError("top_n must be >= 0")
    counts: Counter[str] = Counter()
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        counts.update(t.lower() for t in tokenize_words(doc.target).tokens)
    if n_docs == 0:
        raise ValueError("empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = frozenset(w for w, _ in ranked[:top_n])
    return WordList(
        entries,
        "frequent",
        source=source or f"{n_docs} documents",
        cutoff=top_n,
    )
