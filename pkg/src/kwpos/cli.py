"""Command-line interface binding the pipeline end to end.

Subcommands::

    kwpos build       corpus JSONL -> training-example JSONL (+ stats)
    kwpos specs       corpus JSONL -> eval-spec JSONL (oracle or random positions)
    kwpos eval        eval specs + generations -> report JSON (+ tables)
    kwpos selfbleu    grouped generations -> per-group Self-BLEU + mean
    kwpos oracle-gen  eval specs -> constraint-satisfying generations

Options can also come from a ``--config`` file of ``key=value`` lines
(``#`` comments allowed); command-line flags override the file.  Commands
that draw random numbers require an explicit seed (no wall-clock defaults)
and every command is byte-deterministic for a fixed config, regardless of
worker count.  Set KWPOS_LOG=DEBUG (or INFO, ...) for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .control import ControlParseError, SamplingConfig, extract_keyword_candidates
from .dataset import (
    CorpusFormatError,
    build_eval_specs,
    build_training_examples,
    derive_seed,
    eval_spec_to_dict,
    load_corpus,
    load_eval_specs,
    load_generations,
    training_example_to_dict,
)
from .metrics import (
    aggregate_report,
    evaluate_spec,
    rouge_keyword_excluded,
    self_bleu,
)
from .oracle_gen import (
    DropKeyword,
    InfeasibleSpecError,
    Paraphrase,
    ShiftBucket,
    generate_satisfying,
    load_filler_lexicon,
    perturb,
)
from .tokenizer import (
    WordList,
    build_frequent_word_list,
    default_stopwords,
    load_word_list,
    tokenize_words,
)

__all__ = ["main", "RunConfig"]

logger = logging.getLogger("kwpos")


@dataclass
class RunConfig:
    """Resolved options for one command invocation."""

    seed: int | None = None
    corpus: str | None = None
    out: str | None = None
    epochs: int = 1
    max_keywords: int = 3
    position_dropout: float = 0.1
    length_dropout: float = 0.1
    frequent_top_n: int = 100
    stopwords: str | None = None
    n_keywords: int = 1
    mode: str = "oracle"
    occurrence: str = "nearest"
    case_insensitive: bool = False
    workers: int = 1

    def validate(self) -> None:
        for name in ("position_dropout", "length_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.n_keywords not in (1, 2, 3):
            raise ValueError("n_keywords must be in {1, 2, 3}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.frequent_top_n < 0:
            raise ValueError("frequent_top_n must be >= 0")
        if self.max_keywords < 0:
            raise ValueError("max_keywords must be >= 0")


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a key=value config file; '#' lines are comments."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


_CASTS = {
    "seed": int,
    "epochs": int,
    "max_keywords": int,
    "frequent_top_n": int,
    "n_keywords": int,
    "workers": int,
    "delta": int,
    "keyword_index": int,
    "max_n": int,
    "position_dropout": float,
    "length_dropout": float,
    "case_insensitive": _parse_bool,
    "rouge": _parse_bool,
}


class _Options:
    """Flag values layered over config-file values, with casts."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        config_path = self._args.get("config")
        self._file = load_config_file(config_path) if config_path else {}

    def get(self, key: str, default=None):
        value = self._args.get(key)
        if value is None and key in self._file:
            cast = _CASTS.get(key, str)
            value = cast(self._file[key])
        return default if value is None else value

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        return value


def _configure_logging() -> None:
    level_name = os.environ.get("KWPOS_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _write_jsonl(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def _write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def _load_word_lists(cfg: RunConfig, docs) -> tuple[WordList, WordList]:
    if cfg.stopwords:
        stoplist = load_word_list(cfg.stopwords, "stopword")
    else:
        stoplist = default_stopwords()
    if cfg.frequent_top_n > 0:
        frequentlist = build_frequent_word_list(docs, cfg.frequent_top_n)
    else:
        frequentlist = WordList(frozenset(), "frequent", source="disabled", cutoff=0)
    return stoplist, frequentlist


def _print_histogram(title: str, counts: Counter, total: int) -> None:
    print(title)
    for key in sorted(counts):
        print(f"  {key:>12}  {counts[key]:>8}  {counts[key] / total:.4f}")


def cmd_build(args: argparse.Namespace) -> int:
    opts = _Options(args)
    cfg = RunConfig(
        seed=opts.require("seed"),
        corpus=str(opts.require("corpus")),
        out=str(opts.require("out")),
        epochs=opts.get("epochs", 1),
        max_keywords=opts.get("max_keywords", 3),
        position_dropout=opts.get("position_dropout", 0.1),
        length_dropout=opts.get("length_dropout", 0.1),
        frequent_top_n=opts.get("frequent_top_n", 100),
        stopwords=opts.get("stopwords"),
        workers=opts.get("workers", 1),
    )
    cfg.validate()
    docs = list(load_corpus(cfg.corpus))
    stoplist, frequentlist = _load_word_lists(cfg, docs)
    sampling = SamplingConfig(
        max_keywords=cfg.max_keywords,
        position_dropout=cfg.position_dropout,
        length_dropout=cfg.length_dropout,
    )

    candidate_hist: Counter = Counter()
    for doc in docs:
        n_cand = len(
            extract_keyword_candidates(tokenize_words(doc.target), stoplist, frequentlist)
        )
        candidate_hist[f"{n_cand // 10 * 10}-{n_cand // 10 * 10 + 9}"] += 1

    spec_size_hist: Counter = Counter()
    records = []
    for epoch in range(cfg.epochs):
        examples = build_training_examples(
            docs, stoplist, frequentlist, sampling, cfg.seed, epoch, workers=cfg.workers
        )
        for example in examples:
            spec_size_hist[example.control.count("[SEP]")] += 1
            records.append(training_example_to_dict(example))
    _write_jsonl(cfg.out, records)

    print(f"wrote {len(records)} examples ({len(docs)} documents x {cfg.epochs} epochs)")
    _print_histogram("candidate count histogram:", candidate_hist, len(docs))
    _print_histogram("keywords per example:", spec_size_hist, len(records))
    return 0


def cmd_specs(args: argparse.Namespace) -> int:
    opts = _Options(args)
    cfg = RunConfig(
        seed=opts.require("seed"),
        corpus=str(opts.require("corpus")),
        out=str(opts.require("out")),
        n_keywords=opts.get("n_keywords", 1),
        mode=opts.get("mode", "oracle"),
        frequent_top_n=opts.get("frequent_top_n", 100),
        stopwords=opts.get("stopwords"),
        workers=opts.get("workers", 1),
    )
    cfg.validate()
    docs = list(load_corpus(cfg.corpus))
    stoplist, frequentlist = _load_word_lists(cfg, docs)
    specs, skipped = build_eval_specs(
        docs,
        stoplist,
        frequentlist,
        n_keywords=cfg.n_keywords,
        mode=cfg.mode,
        seed=cfg.seed,
        workers=cfg.workers,
    )
    _write_jsonl(cfg.out, [eval_spec_to_dict(s) for s in specs])
    print(f"wrote {len(specs)} specs (mode={cfg.mode}, n_keywords={cfg.n_keywords})")
    print(f"skipped {skipped} documents with too few compatible candidates")
    return 0


def _render_report_tables(report: dict) -> str:
    lines = [
        f"{'n':>8}  {'include_acc':>12}  {'pos_acc':>8}",
        f"{report['n']:>8}  {report['include_acc']:>12.4f}  {report['pos_acc']:>8.4f}",
    ]
    per_bucket = report.get("per_bucket") or {}
    if per_bucket:
        lines.append("")
        lines.append(
            f"{'bucket':>8}  {'correct':>8}  {'within10':>8}  "
            f"{'over10':>8}  {'not_included':>12}"
        )
        for bucket in sorted(per_bucket, key=int):
            dist = per_bucket[bucket]
            lines.append(
                f"{bucket:>8}  {dist['correct']:>8.4f}  {dist['within10']:>8.4f}  "
                f"{dist['over10']:>8.4f}  {dist['not_included']:>12.4f}"
            )
    return "\n".join(lines)


def cmd_eval(args: argparse.Namespace) -> int:
    opts = _Options(args)
    specs_path = opts.require("specs")
    generations_path = opts.require("generations")
    out_path = opts.require("out")
    occurrence = opts.get("occurrence", "nearest")
    case_insensitive = opts.get("case_insensitive", False)
    want_rouge = opts.get("rouge", False)

    specs = load_eval_specs(specs_path)
    if not specs:
        raise ValueError(f"no specs in {specs_path}")
    generations = load_generations(generations_path)
    missing = [s.doc_id for s in specs if s.doc_id not in generations]
    if missing:
        raise ValueError(
            f"generations file is missing {len(missing)} doc ids: "
            + ", ".join(missing[:20])
            + (", ..." if len(missing) > 20 else "")
        )

    rows = []
    tokenized = {}
    for espec in specs:
        tok = tokenize_words(generations[espec.doc_id])
        tokenized[espec.doc_id] = tok
        rows.append(evaluate_spec(tok, espec.spec, occurrence, case_insensitive))
    report = aggregate_report(rows).to_json_dict()
    report["self_bleu"] = None
    report["rouge"] = None

    if want_rouge:
        references_path = opts.require("references")
        targets = {doc.id: doc.target for doc in load_corpus(references_path)}
        missing_refs = [s.doc_id for s in specs if s.doc_id not in targets]
        if missing_refs:
            raise ValueError(
                f"references file is missing {len(missing_refs)} doc ids: "
                + ", ".join(missing_refs[:20])
                + (", ..." if len(missing_refs) > 20 else "")
            )
        totals = [0.0, 0.0, 0.0]
        for espec in specs:
            scores = rouge_keyword_excluded(
                tokenized[espec.doc_id],
                tokenize_words(targets[espec.doc_id]),
                [kw.phrase for kw in espec.spec.keywords],
                case_insensitive,
            )
            totals[0] += scores.r1
            totals[1] += scores.r2
            totals[2] += scores.rl
        report["rouge"] = {
            "r1": totals[0] / len(specs),
            "r2": totals[1] / len(specs),
            "rl": totals[2] / len(specs),
        }

    _write_json(out_path, report)
    print(_render_report_tables(report))
    if report["rouge"] is not None:
        r = report["rouge"]
        print()
        print(f"{'r1':>8}  {'r2':>8}  {'rl':>8}")
        print(f"{r['r1']:>8.4f}  {r['r2']:>8.4f}  {r['rl']:>8.4f}")
    return 0


def cmd_selfbleu(args: argparse.Namespace) -> int:
    opts = _Options(args)
    generations_path = opts.require("generations")
    out_path = opts.require("out")
    max_n = opts.get("max_n", 4)

    groups: dict[str, list[str]] = {}
    with open(generations_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc_id, generated = record["doc_id"], record["generated"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from exc
            groups.setdefault(doc_id, []).append(generated)

    per_group = {}
    skipped = 0
    for doc_id, texts in groups.items():
        if len(texts) < 2:
            logger.warning("group %r has a single text, skipped", doc_id)
            skipped += 1
            continue
        per_group[doc_id] = self_bleu(texts, max_n=max_n)
    if not per_group:
        raise ValueError("no group has 2 or more texts")

    mean = sum(per_group.values()) / len(per_group)
    payload = {
        "per_group": per_group,
        "mean": mean,
        "n_groups": len(per_group),
        "skipped_groups": skipped,
    }
    _write_json(out_path, payload)
    print(f"{'group':>16}  {'self_bleu':>10}")
    for doc_id in sorted(per_group):
        print(f"{doc_id:>16}  {per_group[doc_id]:>10.2f}")
    print(f"{'mean':>16}  {mean:>10.2f}")
    return 0


def _apply_perturbation(
    opts: _Options,
    text: str,
    spec,
    seed: int,
    lexicon: tuple[str, ...],
) -> str:
    kind = opts.get("perturb")
    index = opts.get("keyword_index", 0)
    if kind == "drop":
        return perturb(text, spec, DropKeyword(index=index), seed, lexicon)[0]
    if kind == "paraphrase":
        # Deterministic replacement: unused words from the end of the lexicon.
        phrase_len = len(spec.keywords[index].phrase)
        replacement = tuple(lexicon[-(i + 1)] for i in range(phrase_len))
        mode = Paraphrase(index=index, replacement=replacement)
        return perturb(text, spec, mode, seed, lexicon)[0]
    if kind == "shift":
        # The outcome taxonomy depends only on |delta|, so mirror the shift
        # direction when one direction leaves 0..90 or cannot be placed.
        delta = opts.require("delta")
        last_error: Exception | None = None
        for signed in (delta, -delta):
            try:
                mode = ShiftBucket(index=index, delta=signed)
                return perturb(text, spec, mode, seed, lexicon)[0]
            except (InfeasibleSpecError, ValueError) as exc:
                last_error = exc
        raise ValueError(f"shift by +/-{abs(delta)} infeasible: {last_error}")
    raise ValueError(f"unknown perturbation: {kind!r}")


def cmd_oracle_gen(args: argparse.Namespace) -> int:
    opts = _Options(args)
    specs_path = opts.require("specs")
    out_path = opts.require("out")
    seed = opts.require("seed")
    filler_path = opts.get("filler")
    perturb_kind = opts.get("perturb")

    lexicon = load_filler_lexicon(filler_path)
    specs = load_eval_specs(specs_path)
    records = []
    for espec in specs:
        doc_seed = derive_seed(seed, "gen", espec.doc_id)
        try:
            text = generate_satisfying(espec.spec, filler=lexicon, seed=doc_seed)
            if perturb_kind:
                text = _apply_perturbation(
                    opts,
                    text,
                    espec.spec,
                    derive_seed(seed, "perturb", espec.doc_id),
                    lexicon,
                )
        except (InfeasibleSpecError, ValueError) as exc:
            raise ValueError(f"doc {espec.doc_id!r}: {exc}") from exc
        records.append({"doc_id": espec.doc_id, "generated": text})
    _write_jsonl(out_path, records)
    print(f"wrote {len(records)} generations")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--seed", type=int, help="random seed (required where used)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kwpos",
        description="Keyword-position control: dataset construction and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build control-conditioned training examples")
    _add_common(p)
    p.add_argument("--corpus", help="input corpus JSONL")
    p.add_argument("--out", help="output training-example JSONL")
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-keywords", type=int, dest="max_keywords")
    p.add_argument("--position-dropout", type=float, dest="position_dropout")
    p.add_argument("--length-dropout", type=float, dest="length_dropout")
    p.add_argument("--frequent-top-n", type=int, dest="frequent_top_n")
    p.add_argument("--stopwords", help="override the built-in stop word list")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("specs", help="build evaluation specs")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--n-keywords", type=int, dest="n_keywords", choices=(1, 2, 3))
    p.add_argument("--mode", choices=("oracle", "random"))
    p.add_argument("--frequent-top-n", type=int, dest="frequent_top_n")
    p.add_argument("--stopwords")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_specs)

    p = sub.add_parser("eval", help="evaluate generations against specs")
    _add_common(p)
    p.add_argument("--specs", help="eval-spec JSONL")
    p.add_argument("--generations", help="generated-text JSONL")
    p.add_argument("--out", help="output report JSON")
    p.add_argument("--occurrence", choices=("nearest", "first"))
    p.add_argument(
        "--case-insensitive",
        dest="case_insensitive",
        action="store_const",
        const=True,
        help="lenient keyword matching (default: exact case)",
    )
    p.add_argument(
        "--rouge",
        action="store_const",
        const=True,
        help="also compute keyword-excluded ROUGE against --references",
    )
    p.add_argument("--references", help="reference corpus JSONL for --rouge")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selfbleu", help="Self-BLEU per generation group")
    _add_common(p)
    p.add_argument("--generations", help="generated-text JSONL, many rows per doc_id")
    p.add_argument("--out", help="output JSON")
    p.add_argument("--max-n", type=int, dest="max_n")
    p.set_defaults(func=cmd_selfbleu)

    p = sub.add_parser("oracle-gen", help="generate constraint-satisfying texts")
    _add_common(p)
    p.add_argument("--specs")
    p.add_argument("--out")
    p.add_argument("--filler", help="override the built-in filler lexicon")
    p.add_argument("--perturb", choices=("shift", "drop", "paraphrase"))
    p.add_argument("--delta", type=int, help="bucket shift for --perturb shift")
    p.add_argument("--keyword-index", type=int, dest="keyword_index")
    p.set_defaults(func=cmd_oracle_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusFormatError, ControlParseError, InfeasibleSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
