"""Keyword candidates, bucket arithmetic, control sampling and the control string.

A control spec pairs an optional length bucket with an ordered list of
keywords, each an exact word-token phrase with an optional position bucket.
Position buckets are relative positions in 10% steps (0..90); length buckets
are word counts quantized to 5-word units.  The serialized form uses the
literal special tokens ``[LENGTH{n}]``, ``[SEP]`` and ``[POSITION{n}]``, e.g.::

    [LENGTH50] [SEP] two dogs [POSITION20]
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Sequence

from .tokenizer import TokenizedText, WordList

__all__ = [
    "KeywordCandidate",
    "Keyword",
    "ControlSpec",
    "SamplingConfig",
    "ControlParseError",
    "POSITION_BUCKETS",
    "LENGTH_STEP",
    "extract_keyword_candidates",
    "quantize_position",
    "quantize_length",
    "sample_control_spec",
    "serialize_control",
    "parse_control",
    "randomize_positions",
    "is_contiguous_subsequence",
]

POSITION_BUCKETS: tuple[int, ...] = tuple(range(0, 100, 10))
LENGTH_STEP = 5
MAX_PHRASE_WORDS = 3


def _validate_position_bucket(value: int) -> None:
    if value not in POSITION_BUCKETS:
        raise ValueError(f"invalid position bucket: {value!r}")


def _validate_length_bucket(value: int) -> None:
    if value < 0 or value % LENGTH_STEP != 0:
        raise ValueError(f"invalid length bucket: {value!r}")


def is_contiguous_subsequence(a: Sequence[str], b: Sequence[str]) -> bool:
    """True iff token sequence ``a`` appears as a contiguous run inside ``b``."""
    n, m = len(a), len(b)
    if n == 0 or n > m:
        return n == 0
    a = tuple(a)
    return any(tuple(b[i : i + n]) == a for i in range(m - n + 1))


@dataclass(frozen=True)
class KeywordCandidate:
    """A 1-3 word phrase occurrence in a target text.

    ``span`` is (start, end), 0-based, inclusive-exclusive word indices into
    the target's token sequence; ``phrase`` equals the tokens at that span.
    """

    phrase: tuple[str, ...]
    span: tuple[int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "phrase", tuple(self.phrase))
        object.__setattr__(self, "span", tuple(self.span))
        start, end = self.span
        if not 1 <= len(self.phrase) <= MAX_PHRASE_WORDS:
            raise ValueError(f"phrase must have 1..{MAX_PHRASE_WORDS} words")
        if end - start != len(self.phrase) or start < 0:
            raise ValueError(f"span {self.span} does not match phrase length")

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[1]


@dataclass(frozen=True)
class Keyword:
    """A control keyword: an exact phrase plus an optional position bucket."""

    phrase: tuple[str, ...]
    position: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phrase", tuple(self.phrase))
        if not self.phrase or any(not w for w in self.phrase):
            raise ValueError("keyword phrase must be a non-empty word sequence")
        if self.position is not None:
            _validate_position_bucket(self.position)


@dataclass(frozen=True)
class ControlSpec:
    """The control tokens for one example.

    Invariants: the length bucket, when present, is a non-negative multiple
    of 5; no keyword's token sequence is a contiguous subsequence of
    another's (which also forbids duplicates).  Samplers additionally bound
    the keyword count by their configured maximum (default 3); the type
    itself does not hard-code that limit.
    """

    length: int | None = None
    keywords: tuple[Keyword, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "keywords", tuple(self.keywords))
        if self.length is not None:
            _validate_length_bucket(self.length)
        phrases = [kw.phrase for kw in self.keywords]
        for i, a in enumerate(phrases):
            for j, b in enumerate(phrases):
                if i != j and is_contiguous_subsequence(a, b):
                    raise ValueError(
                        f"keyword {' '.join(a)!r} is a contiguous subsequence "
                        f"of {' '.join(b)!r}"
                    )


def extract_keyword_candidates(
    target: TokenizedText,
    stoplist: WordList,
    frequentlist: WordList,
    max_words: int = MAX_PHRASE_WORDS,
) -> list[KeywordCandidate]:
    """Enumerate every contiguous 1..max_words-gram whose first word passes the filter.

    A first word fails the filter when it is a stop word or a frequent word
    (case-insensitive).  Candidates come back in document order of the span
    start, then by span length ascending, which fixes a deterministic order
    for sampling and golden tests.
    """
    tokens = target.tokens
    out: list[KeywordCandidate] = []
    for start, first in enumerate(tokens):
        if first in stoplist or first in frequentlist:
            continue
        for n in range(1, max_words + 1):
            end = start + n
            if end > len(tokens):
                break
            out.append(KeywordCandidate(phrase=tokens[start:end], span=(start, end)))
    return out


def quantize_position(start_word_index: int, total_words: int) -> int:
    """Map a 0-based word index to its relative-position bucket (0..90).

    The bucket is floor(10 * index / total) * 10; integer arithmetic keeps
    the result exact for any input size.
    """
    if total_words <= 0:
        raise ValueError("empty text")
    if not 0 <= start_word_index < total_words:
        raise ValueError(
            f"word index {start_word_index} out of range for {total_words} words"
        )
    return min(90, (10 * start_word_index) // total_words * 10)


def quantize_length(total_words: int) -> int:
    """Quantize a word count to its 5-word length bucket."""
    if total_words < 0:
        raise ValueError("word count must be >= 0")
    return (total_words // LENGTH_STEP) * LENGTH_STEP


@dataclass(frozen=True)
class SamplingConfig:
    """Knobs for training-time control sampling."""

    max_keywords: int = 3
    position_dropout: float = 0.1
    length_dropout: float = 0.1

    def __post_init__(self) -> None:
        if self.max_keywords < 0:
            raise ValueError("max_keywords must be >= 0")
        for name in ("position_dropout", "length_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


def _spans_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def _compatible(cand: KeywordCandidate, chosen: list[KeywordCandidate]) -> bool:
    for c in chosen:
        if _spans_overlap(cand.span, c.span):
            return False
        if is_contiguous_subsequence(cand.phrase, c.phrase):
            return False
        if is_contiguous_subsequence(c.phrase, cand.phrase):
            return False
    return True


def _draw_spans(
    candidates: Sequence[KeywordCandidate], k: int, rng: random.Random
) -> list[KeywordCandidate]:
    """Draw up to k mutually compatible candidate spans without replacement.

    Picks are uniform over the remaining pool; a pick that overlaps an
    already chosen span or violates the non-subsequence rule is discarded
    rather than retried, so the loop always terminates.
    """
    remaining = list(candidates)
    chosen: list[KeywordCandidate] = []
    while remaining and len(chosen) < k:
        cand = remaining.pop(rng.randrange(len(remaining)))
        if _compatible(cand, chosen):
            chosen.append(cand)
    return chosen


def sample_control_spec(
    target: TokenizedText,
    candidates: Sequence[KeywordCandidate],
    rng: random.Random,
    config: SamplingConfig = SamplingConfig(),
) -> ControlSpec:
    """Sample a training control spec for one target text.

    The keyword count is uniform over {0..max_keywords}; spans are drawn
    without replacement subject to the non-overlap and non-subsequence
    rules (fewer than k compatible candidates simply yields fewer
    keywords).  Each keyword's position is omitted independently with
    ``position_dropout`` probability, the length bucket with
    ``length_dropout``.  Bit-reproducible for a fixed rng state.
    """
    k = rng.randint(0, config.max_keywords)
    chosen = _draw_spans(candidates, k, rng)
    total = len(target)
    keywords = []
    for cand in chosen:
        position: int | None = quantize_position(cand.start, total)
        if rng.random() < config.position_dropout:
            position = None
        keywords.append(Keyword(phrase=cand.phrase, position=position))
    length: int | None = quantize_length(total)
    if rng.random() < config.length_dropout:
        length = None
    return ControlSpec(length=length, keywords=tuple(keywords))


def randomize_positions(spec: ControlSpec, rng: random.Random) -> ControlSpec:
    """Replace every present position with an independent uniform bucket draw.

    Keywords, their order, omitted positions and the length bucket are all
    preserved; only present position values are redrawn.
    """
    if not spec.keywords:
        raise ValueError("spec has no keywords to randomize")
    keywords = tuple(
        Keyword(
            phrase=kw.phrase,
            position=None if kw.position is None else rng.randrange(10) * 10,
        )
        for kw in spec.keywords
    )
    return ControlSpec(length=spec.length, keywords=keywords)


_LENGTH_TOKEN_RE = re.compile(r"^\[LENGTH(0|[1-9][0-9]*)\]$")
_POSITION_TOKEN_RE = re.compile(r"^\[POSITION(0|[1-9][0-9]*)\]$")
_SEP_TOKEN = "[SEP]"


def serialize_control(spec: ControlSpec) -> str:
    """Render a spec in the bit-exact control-token grammar."""
    parts: list[str] = []
    if spec.length is not None:
        parts.append(f"[LENGTH{spec.length}]")
    for kw in spec.keywords:
        parts.append(_SEP_TOKEN)
        parts.extend(kw.phrase)
        if kw.position is not None:
            parts.append(f"[POSITION{kw.position}]")
    return " ".join(parts)


class ControlParseError(ValueError):
    """Raised on a malformed control string; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _byte_offset(s: str, char_pos: int) -> int:
    return len(s[:char_pos].encode("utf-8"))


def parse_control(s: str) -> ControlSpec:
    """Parse a control string back into a ControlSpec.

    Inverse of :func:`serialize_control`: ``parse_control(serialize_control(x))
    == x`` for every valid spec.  Tokens may be separated by arbitrary
    whitespace.  Any bracketed token that is not exactly ``[SEP]``, a valid
    ``[LENGTHn]`` or a valid ``[POSITIONn]`` is rejected, as are dangling
    separators, positions with no preceding keyword, and length tokens
    after the first keyword.
    """
    items = [(m.group(), m.start()) for m in re.finditer(r"\S+", s)]
    length: int | None = None
    keywords: list[Keyword] = []
    kw_offsets: list[int] = []
    phrase: list[str] | None = None  # None until the first [SEP]
    position: int | None = None
    pending_offset = 0

    def flush(at: int) -> None:
        nonlocal phrase, position
        if phrase is None:
            return
        if not phrase:
            raise ControlParseError("dangling [SEP] with no keyword phrase", at)
        keywords.append(Keyword(phrase=tuple(phrase), position=position))
        kw_offsets.append(pending_offset)
        phrase, position = None, None

    for tok, char_pos in items:
        at = _byte_offset(s, char_pos)
        if tok == _SEP_TOKEN:
            flush(at)
            phrase, position, pending_offset = [], None, at
            continue
        m = _LENGTH_TOKEN_RE.match(tok)
        if m:
            value = int(m.group(1))
            if value % LENGTH_STEP != 0:
                raise ControlParseError(f"invalid length bucket {value}", at)
            if length is not None or keywords or phrase is not None:
                raise ControlParseError("length token must come first", at)
            length = value
            continue
        m = _POSITION_TOKEN_RE.match(tok)
        if m:
            value = int(m.group(1))
            if value not in POSITION_BUCKETS:
                raise ControlParseError(f"invalid position bucket {value}", at)
            if phrase is None:
                raise ControlParseError("position token before any keyword", at)
            if not phrase:
                raise ControlParseError("position token with no keyword phrase", at)
            if position is not None:
                raise ControlParseError("duplicate position token", at)
            position = value
            continue
        if "[" in tok or "]" in tok:
            raise ControlParseError(f"malformed control token {tok!r}", at)
        if phrase is None:
            raise ControlParseError(f"unexpected word {tok!r} before [SEP]", at)
        if position is not None:
            raise ControlParseError(
                f"word {tok!r} after the keyword's position token", at
            )
        phrase.append(tok)

    flush(_byte_offset(s, len(s)))
    try:
        return ControlSpec(length=length, keywords=tuple(keywords))
    except ValueError as exc:
        offset = kw_offsets[-1] if kw_offsets else 0
        raise ControlParseError(str(exc), offset) from exc
