"""Evaluation of generated texts against control specs.

Keyword matching is exact token-sequence matching, case-sensitive by
default: a paraphrased keyword counts as not included.  Position verdicts
are bucket-valued: Correct (same bucket), Within10 (adjacent bucket),
Over10 (two or more buckets away), NotIncluded (no occurrence).  ROUGE and
Self-BLEU are computed from scratch over this toolkit's word tokens, with
no stemming or case folding, so absolute values are comparable only within
the toolkit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .control import ControlSpec, quantize_position
from .tokenizer import TokenizedText, tokenize_words

__all__ = [
    "Outcome",
    "PositionOutcome",
    "RougeScores",
    "EvalRow",
    "EvaluationReport",
    "find_keyword_occurrences",
    "keyword_inclusion",
    "keyword_position_outcome",
    "position_accuracy",
    "evaluate_spec",
    "rouge_scores",
    "rouge_keyword_excluded",
    "self_bleu",
    "aggregate_report",
]

OCCURRENCE_POLICIES = ("nearest", "first")


class Outcome(str, Enum):
    """Four-way verdict for one keyword's realized position."""

    CORRECT = "correct"
    WITHIN10 = "within10"
    OVER10 = "over10"
    NOT_INCLUDED = "not_included"


@dataclass(frozen=True)
class PositionOutcome:
    """Per-keyword verdict; actual_bucket is present iff the keyword occurred."""

    kind: Outcome
    actual_bucket: int | None = None

    def __post_init__(self) -> None:
        if (self.actual_bucket is None) != (self.kind is Outcome.NOT_INCLUDED):
            raise ValueError("actual_bucket must be present iff the keyword occurred")


@dataclass(frozen=True)
class RougeScores:
    """Unigram, bigram and LCS F1 scores, each in [0, 1]."""

    r1: float
    r2: float
    rl: float


@dataclass(frozen=True)
class EvalRow:
    """One evaluated example: per-keyword outcomes plus the two verdicts."""

    spec: ControlSpec
    outcomes: tuple[PositionOutcome, ...]
    included: bool
    position_ok: bool


@dataclass(frozen=True)
class EvaluationReport:
    """Aggregated accuracies plus per-target-bucket outcome distributions."""

    include_acc: float
    pos_acc: float
    n_examples: int
    per_target_bucket: Mapping[int, Mapping[Outcome, float]]

    def to_json_dict(self) -> dict:
        per_bucket = {
            str(bucket): {kind.value: frac for kind, frac in dist.items()}
            for bucket, dist in sorted(self.per_target_bucket.items())
        }
        return {
            "include_acc": self.include_acc,
            "pos_acc": self.pos_acc,
            "n": self.n_examples,
            "per_bucket": per_bucket,
        }


def _match_tokens(tokens: Sequence[str], case_insensitive: bool) -> tuple[str, ...]:
    if case_insensitive:
        return tuple(t.lower() for t in tokens)
    return tuple(tokens)


def find_keyword_occurrences(
    generated: TokenizedText,
    phrase: Sequence[str],
    case_insensitive: bool = False,
) -> list[int]:
    """All 0-based start indices where the phrase occurs as an exact token run."""
    phrase = tuple(phrase)
    if not phrase:
        raise ValueError("phrase must be non-empty")
    hay = _match_tokens(generated.tokens, case_insensitive)
    needle = _match_tokens(phrase, case_insensitive)
    n = len(needle)
    return [i for i in range(len(hay) - n + 1) if hay[i : i + n] == needle]


def keyword_inclusion(
    generated: TokenizedText,
    spec: ControlSpec,
    case_insensitive: bool = False,
) -> bool:
    """True iff every keyword of the spec occurs at least once."""
    if not spec.keywords:
        raise ValueError("nothing to evaluate: spec has no keywords")
    return all(
        find_keyword_occurrences(generated, kw.phrase, case_insensitive)
        for kw in spec.keywords
    )


def keyword_position_outcome(
    generated: TokenizedText,
    phrase: Sequence[str],
    target_bucket: int,
    occurrence: str = "nearest",
    case_insensitive: bool = False,
) -> PositionOutcome:
    """Classify how close the keyword's realized bucket is to the target.

    With the default "nearest" policy the occurrence whose bucket is
    closest to the target bucket is scored (first such occurrence in text
    order on ties); "first" scores only the first occurrence.
    """
    if occurrence not in OCCURRENCE_POLICIES:
        raise ValueError(f"unknown occurrence policy: {occurrence!r}")
    starts = find_keyword_occurrences(generated, phrase, case_insensitive)
    if not starts:
        return PositionOutcome(kind=Outcome.NOT_INCLUDED)
    total = len(generated)
    buckets = [quantize_position(i, total) for i in starts]
    if occurrence == "first":
        actual = buckets[0]
    else:
        actual = min(buckets, key=lambda b: abs(b - target_bucket))
    diff = abs(actual - target_bucket)
    if diff == 0:
        kind = Outcome.CORRECT
    elif diff == 10:
        kind = Outcome.WITHIN10
    else:
        kind = Outcome.OVER10
    return PositionOutcome(kind=kind, actual_bucket=actual)


def position_accuracy(
    generated: TokenizedText,
    spec: ControlSpec,
    occurrence: str = "nearest",
    case_insensitive: bool = False,
) -> bool:
    """True iff every keyword's realized bucket equals its target bucket."""
    if not spec.keywords:
        raise ValueError("nothing to evaluate: spec has no keywords")
    for kw in spec.keywords:
        if kw.position is None:
            raise ValueError(f"keyword {' '.join(kw.phrase)!r} has no position")
    return all(
        keyword_position_outcome(
            generated, kw.phrase, kw.position, occurrence, case_insensitive
        ).kind
        is Outcome.CORRECT
        for kw in spec.keywords
    )


def evaluate_spec(
    generated: TokenizedText,
    spec: ControlSpec,
    occurrence: str = "nearest",
    case_insensitive: bool = False,
) -> EvalRow:
    """Evaluate one generated text against one spec (all positions required)."""
    if not spec.keywords:
        raise ValueError("nothing to evaluate: spec has no keywords")
    outcomes = []
    for kw in spec.keywords:
        if kw.position is None:
            raise ValueError(f"keyword {' '.join(kw.phrase)!r} has no position")
        outcomes.append(
            keyword_position_outcome(
                generated, kw.phrase, kw.position, occurrence, case_insensitive
            )
        )
    included = all(o.kind is not Outcome.NOT_INCLUDED for o in outcomes)
    position_ok = all(o.kind is Outcome.CORRECT for o in outcomes)
    return EvalRow(
        spec=spec,
        outcomes=tuple(outcomes),
        included=included,
        position_ok=position_ok,
    )


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(overlap: int, pred_total: int, ref_total: int) -> float:
    p = overlap / pred_total if pred_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def _lcs_length(xs: Sequence[str], ys: Sequence[str]) -> int:
    if len(xs) < len(ys):
        xs, ys = ys, xs
    prev = [0] * (len(ys) + 1)
    for x in xs:
        cur = [0]
        for j, y in enumerate(ys, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_scores(generated: TokenizedText, reference: TokenizedText) -> RougeScores:
    """ROUGE-1/2 overlap F1 and ROUGE-L LCS F1 over word tokens.

    Both texts empty yields all zeros by convention.
    """
    gen, ref = generated.tokens, reference.tokens
    scores = []
    for n in (1, 2):
        gen_counts = _ngram_counts(gen, n)
        ref_counts = _ngram_counts(ref, n)
        overlap = sum(min(c, ref_counts[g]) for g, c in gen_counts.items())
        scores.append(_f1(overlap, sum(gen_counts.values()), sum(ref_counts.values())))
    lcs = _lcs_length(gen, ref)
    scores.append(_f1(lcs, len(gen), len(ref)))
    return RougeScores(r1=scores[0], r2=scores[1], rl=scores[2])


def _delete_phrases(
    tokens: Sequence[str],
    phrases: Sequence[tuple[str, ...]],
    case_insensitive: bool,
) -> list[str]:
    """Remove exact phrase occurrences, longest phrase first, left to right."""
    out = list(tokens)
    for phrase in sorted(phrases, key=len, reverse=True):
        needle = _match_tokens(phrase, case_insensitive)
        kept: list[str] = []
        i = 0
        hay = _match_tokens(out, case_insensitive)
        while i < len(out):
            if hay[i : i + len(needle)] == needle:
                i += len(needle)
            else:
                kept.append(out[i])
                i += 1
        out = kept
    return out


def rouge_keyword_excluded(
    generated: TokenizedText,
    reference: TokenizedText,
    keywords: Sequence[Sequence[str]],
    case_insensitive: bool = False,
) -> RougeScores:
    """ROUGE after deleting every keyword occurrence from both texts.

    Deletion is exact-match, non-overlapping, left-to-right, processing
    longer phrases before shorter ones (equal lengths keep the given
    order).  An empty keyword list reduces to plain :func:`rouge_scores`.
    """
    phrases = [tuple(p) for p in keywords]
    if any(not p for p in phrases):
        raise ValueError("keyword phrases must be non-empty")
    gen = _delete_phrases(generated.tokens, phrases, case_insensitive)
    ref = _delete_phrases(reference.tokens, phrases, case_insensitive)
    return rouge_scores(TokenizedText.from_words(gen), TokenizedText.from_words(ref))


def _bleu(hyp: Sequence[str], refs: Sequence[Sequence[str]], max_n: int) -> float:
    """Corpus-style BLEU of one token sequence against several references.

    Modified n-gram precision with clipping; add-one smoothing on orders
    >= 2 (empty orders smooth to 1 so short identical texts still score 1);
    an unsmoothed unigram precision of zero gives score 0.
    """
    c = len(hyp)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        hyp_counts = _ngram_counts(hyp, n)
        total = sum(hyp_counts.values())
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        clipped = sum(min(count, max_ref[gram]) for gram, count in hyp_counts.items())
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_sum += math.log(precision)
    ref_lens = [len(r) for r in refs]
    r = min(ref_lens, key=lambda rl: (abs(rl - c), rl))
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum / max_n)


def self_bleu(texts: Sequence[str], max_n: int = 4) -> float:
    """Mean BLEU of each text against the remaining texts, scaled to [0, 100].

    Lower means more diverse generations.  Requires at least two texts.
    """
    if len(texts) < 2:
        raise ValueError("self-BLEU needs at least 2 texts")
    tokenized = [tokenize_words(t).tokens for t in texts]
    scores = []
    for i, hyp in enumerate(tokenized):
        refs = [toks for j, toks in enumerate(tokenized) if j != i]
        scores.append(_bleu(hyp, refs, max_n))
    return 100.0 * sum(scores) / len(scores)


def aggregate_report(rows: Iterable[EvalRow]) -> EvaluationReport:
    """Aggregate evaluated rows into corpus accuracies and bucket distributions.

    Per-bucket distributions are computed over single-keyword rows grouped
    by the keyword's target bucket; each distribution covers all four
    outcome kinds and sums to 1.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to aggregate")
    include_acc = sum(r.included for r in rows) / len(rows)
    pos_acc = sum(r.position_ok for r in rows) / len(rows)
    bucket_counts: dict[int, Counter] = {}
    for row in rows:
        if len(row.spec.keywords) != 1:
            continue
        target = row.spec.keywords[0].position
        if target is None:
            continue
        bucket_counts.setdefault(target, Counter())[row.outcomes[0].kind] += 1
    per_bucket = {
        bucket: {
            kind: counts[kind] / sum(counts.values()) for kind in Outcome
        }
        for bucket, counts in bucket_counts.items()
    }
    return EvaluationReport(
        include_acc=include_acc,
        pos_acc=pos_acc,
        n_examples=len(rows),
        per_target_bucket=per_bucket,
    )
