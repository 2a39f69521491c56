"""Corpus ingestion, splitting, and control-conditioned example construction.

Corpora are normalized JSONL files, one record per line::

    {"id": "doc-1", "source": "full document text or null", "target": "reference text"}

``source`` is present for summarization-style corpora and null/absent for
story-style corpora.  All randomness is derived from (seed, purpose, doc id
[, epoch]) so results are independent of iteration order and worker
scheduling.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from .control import (
    ControlSpec,
    Keyword,
    SamplingConfig,
    extract_keyword_candidates,
    quantize_length,
    quantize_position,
    randomize_positions,
    sample_control_spec,
    serialize_control,
    _draw_spans,
)
from .tokenizer import WordList, tokenize_words

__all__ = [
    "Document",
    "TrainingExample",
    "EvalSpec",
    "CorpusFormatError",
    "load_corpus",
    "split_corpus",
    "build_training_examples",
    "build_eval_specs",
    "derive_rng",
    "derive_seed",
    "assemble_input",
    "training_example_to_dict",
    "eval_spec_to_dict",
    "eval_spec_from_dict",
    "load_eval_specs",
    "load_generations",
]

INPUT_SEPARATOR = " [SEP] "

EVAL_MODES = ("oracle", "random")


class CorpusFormatError(ValueError):
    """Raised when a corpus file violates the JSONL schema."""


@dataclass(frozen=True)
class Document:
    """One corpus record: optional source text plus the target (reference) text."""

    id: str
    target: str
    source: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.target:
            raise ValueError("document target must be non-empty")


@dataclass(frozen=True)
class TrainingExample:
    """A control-conditioned training record."""

    doc_id: str
    control: str
    input: str
    target: str


@dataclass(frozen=True)
class EvalSpec:
    """An evaluation control spec for one document.

    In oracle mode every position equals the quantized true position of the
    sampled occurrence and the length equals the target's true bucket; in
    random mode the same keywords carry independently redrawn positions.
    """

    doc_id: str
    spec: ControlSpec
    mode: str
    n_keywords: int

    def __post_init__(self) -> None:
        if self.mode not in EVAL_MODES:
            raise ValueError(f"unknown eval mode: {self.mode!r}")


def derive_seed(*parts: object) -> int:
    """A reproducible integer seed keyed on the given parts (seed, purpose, doc id)."""
    key = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(*parts: object) -> random.Random:
    """A reproducible RNG keyed on the given parts (seed, purpose, doc id, ...)."""
    return random.Random(derive_seed(*parts))


_T = TypeVar("_T")
_R = TypeVar("_R")


def _pmap(fn: Callable[[_T], _R], items: Iterable[_T], workers: int) -> list[_R]:
    """Order-preserving map over independent items, optionally on a thread pool.

    Per-document RNG streams are keyed on ids rather than call order, so the
    result is identical for any pool size.
    """
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_corpus(path: str | Path, format: str = "jsonl") -> Iterator[Document]:
    """Stream Documents from a normalized JSONL corpus file, in file order.

    Raises CorpusFormatError naming the offending line for malformed JSON,
    missing/empty fields, or duplicate ids.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format: {format!r}")
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: malformed JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"line {lineno}: record must be an object")
            doc_id = record.get("id")
            target = record.get("target")
            source = record.get("source")
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusFormatError(f"line {lineno}: missing or empty 'id'")
            if not isinstance(target, str) or not target:
                raise CorpusFormatError(f"line {lineno}: missing or empty 'target'")
            if source is not None and not isinstance(source, str):
                raise CorpusFormatError(f"line {lineno}: 'source' must be string or null")
            if doc_id in seen:
                raise CorpusFormatError(f"line {lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            yield Document(id=doc_id, target=target, source=source)


def split_corpus(
    docs: Sequence[Document],
    ratios: tuple[float, float, float],
    seed: int,
) -> tuple[list[Document], list[Document], list[Document]]:
    """Deterministically shuffle and partition a corpus into train/dev/test.

    All three ratios must be strictly positive and sum to 1 within 1e-9.
    Split sizes depend only on the corpus size and the ratios; membership
    depends on the seeded shuffle of the input order.
    """
    docs = list(docs)
    if len(docs) < 3:
        raise ValueError("need at least 3 documents to split")
    r_train, r_dev, r_test = ratios
    if min(r_train, r_dev, r_test) <= 0:
        raise ValueError("all split ratios must be > 0")
    if abs((r_train + r_dev + r_test) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    rng = random.Random(seed)
    rng.shuffle(docs)
    n = len(docs)
    # Half-up rounding of cumulative cuts avoids drift from per-split floors.
    cut1 = int(n * r_train + 0.5)
    cut2 = int(n * (r_train + r_dev) + 0.5)
    return docs[:cut1], docs[cut1:cut2], docs[cut2:]


def assemble_input(control: str, source: str | None) -> str:
    """Join the control string with the source document when one exists."""
    if source is None:
        return control
    if not control:
        return source
    return control + INPUT_SEPARATOR + source


def _build_training_example(
    doc: Document,
    stoplist: WordList,
    frequentlist: WordList,
    config: SamplingConfig,
    seed: int,
    epoch: int,
) -> TrainingExample:
    try:
        tok = tokenize_words(doc.target)
        candidates = extract_keyword_candidates(tok, stoplist, frequentlist)
        rng = derive_rng(seed, "train", epoch, doc.id)
        spec = sample_control_spec(tok, candidates, rng, config)
    except ValueError as exc:
        raise ValueError(f"document {doc.id!r}: {exc}") from exc
    control = serialize_control(spec)
    return TrainingExample(
        doc_id=doc.id,
        control=control,
        input=assemble_input(control, doc.source),
        target=doc.target,
    )


def build_training_examples(
    docs: Iterable[Document],
    stoplist: WordList,
    frequentlist: WordList,
    config: SamplingConfig,
    seed: int,
    epoch: int,
    workers: int = 1,
) -> list[TrainingExample]:
    """Build one control-conditioned example per document for the given epoch.

    The per-document RNG is keyed on (seed, epoch, doc id), so the same
    (seed, epoch) reproduces the stream exactly while different epochs
    resample the controls.  ``workers`` > 1 fans out over a thread pool
    without changing the output.
    """
    return _pmap(
        lambda doc: _build_training_example(
            doc, stoplist, frequentlist, config, seed, epoch
        ),
        docs,
        workers,
    )


def _build_eval_spec(
    doc: Document,
    stoplist: WordList,
    frequentlist: WordList,
    n_keywords: int,
    mode: str,
    seed: int,
) -> EvalSpec | None:
    tok = tokenize_words(doc.target)
    candidates = extract_keyword_candidates(tok, stoplist, frequentlist)
    # Keyed on the keyword-count setting too, so the 1/2/3-keyword runs draw
    # independently; oracle and random modes still share the "kw" stream.
    rng_kw = derive_rng(seed, "kw", n_keywords, doc.id)
    chosen = _draw_spans(candidates, n_keywords, rng_kw)
    if len(chosen) < n_keywords:
        return None
    total = len(tok)
    keywords = tuple(
        Keyword(phrase=c.phrase, position=quantize_position(c.start, total))
        for c in chosen
    )
    spec = ControlSpec(length=quantize_length(total), keywords=keywords)
    if mode == "random":
        spec = randomize_positions(spec, derive_rng(seed, "pos", n_keywords, doc.id))
    return EvalSpec(doc_id=doc.id, spec=spec, mode=mode, n_keywords=n_keywords)


def build_eval_specs(
    docs: Iterable[Document],
    stoplist: WordList,
    frequentlist: WordList,
    n_keywords: int,
    mode: str,
    seed: int,
    workers: int = 1,
) -> tuple[list[EvalSpec], int]:
    """Build evaluation specs with exactly n_keywords keywords per document.

    Returns (specs, skipped) where skipped counts documents without enough
    mutually compatible candidates.  Keyword selection and position
    randomization use separate RNG streams keyed on the doc id, so oracle
    and random runs with the same seed pick identical keyword phrases and
    differ only in position buckets.
    """
    if not 1 <= n_keywords <= 3:
        raise ValueError("n_keywords must be in {1, 2, 3}")
    if mode not in EVAL_MODES:
        raise ValueError(f"unknown eval mode: {mode!r}")
    results = _pmap(
        lambda doc: _build_eval_spec(
            doc, stoplist, frequentlist, n_keywords, mode, seed
        ),
        docs,
        workers,
    )
    specs = [r for r in results if r is not None]
    return specs, len(results) - len(specs)


def training_example_to_dict(example: TrainingExample) -> dict:
    return {
        "doc_id": example.doc_id,
        "control": example.control,
        "input": example.input,
        "target": example.target,
    }


def eval_spec_to_dict(espec: EvalSpec) -> dict:
    return {
        "doc_id": espec.doc_id,
        "length": espec.spec.length,
        "keywords": [
            {"phrase": " ".join(kw.phrase), "position": kw.position}
            for kw in espec.spec.keywords
        ],
        "mode": espec.mode,
    }


def eval_spec_from_dict(record: dict) -> EvalSpec:
    keywords = tuple(
        Keyword(phrase=tuple(kw["phrase"].split(" ")), position=kw["position"])
        for kw in record["keywords"]
    )
    spec = ControlSpec(length=record["length"], keywords=keywords)
    return EvalSpec(
        doc_id=record["doc_id"],
        spec=spec,
        mode=record["mode"],
        n_keywords=len(keywords),
    )


def load_eval_specs(path: str | Path) -> list[EvalSpec]:
    """Read an eval-spec JSONL file."""
    specs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                specs.append(eval_spec_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    return specs


def load_generations(path: str | Path) -> dict[str, str]:
    """Read a generated-text JSONL file ({"doc_id", "generated"}) into a mapping."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc_id, generated = record["doc_id"], record["generated"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
            if doc_id in out:
                raise CorpusFormatError(f"line {lineno}: duplicate doc_id {doc_id!r}")
            out[doc_id] = generated
    return out
