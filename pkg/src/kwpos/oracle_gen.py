"""Deterministic constraint-satisfying text generation and controlled perturbation.

This is the test harness half of the toolkit: given a fully positioned
control spec it constructs a text that satisfies every keyword, position and
length constraint by placement arithmetic, and it can re-generate that text
with one constraint deliberately broken so the evaluator's verdict has a
known ground truth.  Filler words come from a fixed lexicon and are kept
disjoint from all keyword tokens, so keyword occurrences in the output are
exactly the planned placements.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .control import ControlSpec, Keyword, is_contiguous_subsequence
from .metrics import Outcome, keyword_inclusion, position_accuracy
from .tokenizer import tokenize_words

__all__ = [
    "ShiftBucket",
    "DropKeyword",
    "Paraphrase",
    "PerturbMode",
    "InfeasibleSpecError",
    "load_filler_lexicon",
    "generate_satisfying",
    "perturb",
]

DEFAULT_LENGTH_BUCKET = 50
LENGTH_WINDOW = 5  # a length bucket L admits word counts L..L+4


class InfeasibleSpecError(ValueError):
    """Raised when no placement satisfies the spec's position constraints."""


@dataclass(frozen=True)
class ShiftBucket:
    """Move one keyword so its bucket changes by exactly delta (a nonzero multiple of 10)."""

    index: int
    delta: int

    def __post_init__(self) -> None:
        if self.delta == 0 or self.delta % 10 != 0:
            raise ValueError("delta must be a nonzero multiple of 10")


@dataclass(frozen=True)
class DropKeyword:
    """Remove one keyword from the text entirely."""

    index: int


@dataclass(frozen=True)
class Paraphrase:
    """Replace one keyword's phrase with different words at the same position."""

    index: int
    replacement: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "replacement", tuple(self.replacement))
        if not self.replacement:
            raise ValueError("replacement phrase must be non-empty")


PerturbMode = ShiftBucket | DropKeyword | Paraphrase


@lru_cache(maxsize=None)
def load_filler_lexicon(path: str | None = None) -> tuple[str, ...]:
    """The filler lexicon: the packaged 1000-word list, or a one-word-per-line file."""
    if path is None:
        text = resources.files("kwpos").joinpath("data/filler_words.txt").read_text(
            encoding="utf-8"
        )
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    words = []
    for line in text.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.append(word)
    return tuple(words)


def _bucket_index_range(bucket: int, total: int) -> tuple[int, int]:
    """Inclusive index interval whose positions quantize to the given bucket.

    floor(10*i/total)*10 == bucket holds exactly for
    bucket*total/100 <= i < (bucket+10)*total/100.
    """
    lo = -(-bucket * total // 100)
    hi = -(-(bucket + 10) * total // 100) - 1
    return lo, hi


def _plan_placements(
    keywords: Sequence[Keyword], total: int
) -> dict[int, int] | None:
    """Greedy start index per keyword (by original index), or None if impossible."""
    order = sorted(range(len(keywords)), key=lambda i: (keywords[i].position, i))
    placements: dict[int, int] = {}
    cursor = 0
    for i in order:
        kw = keywords[i]
        lo, hi = _bucket_index_range(kw.position, total)
        start = max(lo, cursor)
        if start > min(hi, total - len(kw.phrase)):
            return None
        placements[i] = start
        cursor = start + len(kw.phrase)
    return placements


def generate_satisfying(
    spec: ControlSpec,
    filler: Sequence[str] | None = None,
    seed: int = 0,
    exclude: Sequence[str] = (),
) -> str:
    """Construct a text that satisfies every constraint of the spec.

    The word count falls inside [L, L+4] for length bucket L (bucket 50
    when the spec has no length); every keyword's first-word index
    quantizes exactly to its target bucket.  Keywords must all carry
    positions.  Filler slots are filled deterministically by seed from the
    lexicon, minus all keyword tokens and the extra ``exclude`` tokens.
    Raises InfeasibleSpecError when no word count in the window admits a
    non-overlapping placement.
    """
    for kw in spec.keywords:
        if kw.position is None:
            raise ValueError(f"keyword {' '.join(kw.phrase)!r} has no position")
    lexicon = tuple(filler) if filler is not None else load_filler_lexicon()
    banned = {tok for kw in spec.keywords for tok in kw.phrase} | set(exclude)
    pool = [w for w in lexicon if w not in banned]
    if not pool and spec.keywords:
        raise ValueError("filler lexicon exhausted by keyword token exclusion")

    rng = random.Random(seed)
    base = spec.length if spec.length is not None else DEFAULT_LENGTH_BUCKET
    totals = list(range(base, base + LENGTH_WINDOW))
    rng.shuffle(totals)
    placements = None
    for total in totals:
        placements = _plan_placements(spec.keywords, total)
        if placements is not None:
            break
    if placements is None:
        raise InfeasibleSpecError(
            f"no placement for {len(spec.keywords)} keywords in "
            f"{base}..{base + LENGTH_WINDOW - 1} words"
        )

    words: list[str | None] = [None] * total
    for i, start in placements.items():
        for offset, tok in enumerate(spec.keywords[i].phrase):
            words[start + offset] = tok
    filled = [w if w is not None else rng.choice(pool) for w in words]
    text = " ".join(filled)
    if tuple(tokenize_words(text).tokens) != tuple(filled):
        raise ValueError(
            "keyword or filler tokens are not tokenizer-atomic; "
            "use plain word tokens"
        )
    return text


def _expected(n_keywords: int, index: int, kind: Outcome) -> list[Outcome]:
    expected = [Outcome.CORRECT] * n_keywords
    expected[index] = kind
    return expected


def perturb(
    text: str,
    spec: ControlSpec,
    mode: PerturbMode,
    seed: int = 0,
    filler: Sequence[str] | None = None,
) -> tuple[str, list[Outcome]]:
    """Break exactly one constraint of a satisfying text, with known ground truth.

    The input text must satisfy the spec (validated).  Returns the perturbed
    text plus the expected outcome per keyword in spec order: Within10 for a
    10-point shift, Over10 for larger shifts, NotIncluded for drops and
    paraphrases, Correct for untouched keywords.
    """
    if not spec.keywords:
        raise ValueError("spec has no keywords to perturb")
    tok = tokenize_words(text)
    if not keyword_inclusion(tok, spec) or not position_accuracy(tok, spec):
        raise ValueError("text does not satisfy the spec")
    n = len(spec.keywords)
    if not 0 <= mode.index < n:
        raise ValueError(f"keyword index {mode.index} out of range")
    target = spec.keywords[mode.index]
    extra_exclude = [t for kw in spec.keywords for t in kw.phrase]

    if isinstance(mode, ShiftBucket):
        new_bucket = target.position + mode.delta
        if not 0 <= new_bucket <= 90:
            raise ValueError(f"shifted bucket {new_bucket} outside 0..90")
        keywords = list(spec.keywords)
        keywords[mode.index] = Keyword(phrase=target.phrase, position=new_bucket)
        perturbed = ControlSpec(length=spec.length, keywords=tuple(keywords))
        kind = Outcome.WITHIN10 if abs(mode.delta) == 10 else Outcome.OVER10
    elif isinstance(mode, DropKeyword):
        keywords = [kw for i, kw in enumerate(spec.keywords) if i != mode.index]
        perturbed = ControlSpec(length=spec.length, keywords=tuple(keywords))
        kind = Outcome.NOT_INCLUDED
    elif isinstance(mode, Paraphrase):
        if is_contiguous_subsequence(target.phrase, mode.replacement):
            raise ValueError("replacement still contains the original phrase")
        keywords = list(spec.keywords)
        keywords[mode.index] = Keyword(
            phrase=mode.replacement, position=target.position
        )
        perturbed = ControlSpec(length=spec.length, keywords=tuple(keywords))
        extra_exclude.extend(mode.replacement)
        kind = Outcome.NOT_INCLUDED
    else:
        raise TypeError(f"unknown perturbation mode: {mode!r}")

    new_text = generate_satisfying(
        perturbed, filler=filler, seed=seed, exclude=extra_exclude
    )
    return new_text, _expected(n, mode.index, kind)
