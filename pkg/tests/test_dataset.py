import json

import pytest

from kwpos.control import SamplingConfig, parse_control, quantize_length, quantize_position
from kwpos.dataset import (
    CorpusFormatError,
    Document,
    assemble_input,
    build_eval_specs,
    build_training_examples,
    derive_rng,
    eval_spec_from_dict,
    eval_spec_to_dict,
    load_corpus,
    load_eval_specs,
    load_generations,
    split_corpus,
)
from kwpos.metrics import find_keyword_occurrences
from kwpos.tokenizer import tokenize_words

from conftest import make_corpus


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadCorpus:
    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [
                json.dumps({"id": "a", "source": None, "target": "alpha bravo"}),
                json.dumps({"id": "b", "source": "src text", "target": "charlie"}),
                json.dumps({"id": "c", "target": "delta"}),
            ],
        )
        docs = list(load_corpus(path))
        assert [d.id for d in docs] == ["a", "b", "c"]
        assert docs[0].source is None
        assert docs[1].source == "src text"
        assert docs[2].source is None

    def test_empty_target_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [
                json.dumps({"id": "a", "target": "ok"}),
                json.dumps({"id": "b", "target": ""}),
            ],
        )
        with pytest.raises(CorpusFormatError, match="line 2"):
            list(load_corpus(path))

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [json.dumps({"id": "a", "target": "ok"}), "{not json"])
        with pytest.raises(CorpusFormatError, match="line 2"):
            list(load_corpus(path))

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [
                json.dumps({"id": "a", "target": "x"}),
                json.dumps({"id": "a", "target": "y"}),
            ],
        )
        with pytest.raises(CorpusFormatError, match="duplicate id"):
            list(load_corpus(path))

    def test_long_source_parses_intact(self, tmp_path):
        source = " ".join(f"w{i}" for i in range(778))
        path = tmp_path / "c.jsonl"
        write_lines(path, [json.dumps({"id": "a", "source": source, "target": "t"})])
        (doc,) = load_corpus(path)
        assert doc.source == source

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ValueError):
            list(load_corpus(tmp_path / "c.csv", format="csv"))


class TestSplitCorpus:
    def test_ten_docs_8_1_1(self):
        docs = make_corpus(10, seed=0)
        train, dev, test = split_corpus(docs, (0.8, 0.1, 0.1), seed=1)
        assert (len(train), len(dev), len(test)) == (8, 1, 1)
        ids = {d.id for d in train} | {d.id for d in dev} | {d.id for d in test}
        assert ids == {d.id for d in docs}

    def test_zero_ratio_rejected(self):
        docs = make_corpus(10, seed=0)
        with pytest.raises(ValueError, match="> 0"):
            split_corpus(docs, (1.0, 0.0, 0.0), seed=1)

    def test_ratio_sum_enforced(self):
        docs = make_corpus(10, seed=0)
        with pytest.raises(ValueError, match="sum to 1"):
            split_corpus(docs, (0.8, 0.1, 0.2), seed=1)

    def test_too_few_documents(self):
        docs = make_corpus(2, seed=0)
        with pytest.raises(ValueError):
            split_corpus(docs, (0.8, 0.1, 0.1), seed=1)

    def test_deterministic(self):
        docs = make_corpus(50, seed=0)
        a = split_corpus(docs, (0.8, 0.1, 0.1), seed=7)
        b = split_corpus(docs, (0.8, 0.1, 0.1), seed=7)
        assert a == b

    def test_sizes_invariant_under_reordering(self):
        docs = make_corpus(37, seed=0)
        a = split_corpus(docs, (0.6, 0.2, 0.2), seed=7)
        b = split_corpus(list(reversed(docs)), (0.6, 0.2, 0.2), seed=7)
        assert [len(part) for part in a] == [len(part) for part in b]

    def test_partition_is_disjoint(self):
        docs = make_corpus(23, seed=3)
        train, dev, test = split_corpus(docs, (0.5, 0.25, 0.25), seed=9)
        ids = [d.id for d in train] + [d.id for d in dev] + [d.id for d in test]
        assert len(ids) == len(set(ids)) == len(docs)


class TestDocument:
    def test_rejects_empty_target(self):
        with pytest.raises(ValueError):
            Document(id="a", target="")

    def test_rejects_empty_id(self):
        with pytest.raises(ValueError):
            Document(id="", target="x")


class TestAssembleInput:
    def test_without_source(self):
        assert assemble_input("[LENGTH50]", None) == "[LENGTH50]"

    def test_with_source(self):
        assert assemble_input("[LENGTH50]", "doc text") == "[LENGTH50] [SEP] doc text"

    def test_empty_control_with_source(self):
        assert assemble_input("", "doc text") == "doc text"


class TestBuildTrainingExamples:
    def test_deterministic_per_seed_epoch(self, stoplist, no_frequent):
        docs = make_corpus(30, seed=1)
        cfg = SamplingConfig()
        a = build_training_examples(docs, stoplist, no_frequent, cfg, seed=5, epoch=0)
        b = build_training_examples(docs, stoplist, no_frequent, cfg, seed=5, epoch=0)
        assert a == b

    def test_workers_do_not_change_output(self, stoplist, no_frequent):
        docs = make_corpus(30, seed=1)
        cfg = SamplingConfig()
        a = build_training_examples(docs, stoplist, no_frequent, cfg, 5, 0, workers=1)
        b = build_training_examples(docs, stoplist, no_frequent, cfg, 5, 0, workers=4)
        assert a == b

    def test_epochs_resample(self, stoplist, no_frequent):
        docs = make_corpus(100, seed=2)
        cfg = SamplingConfig()
        e0 = build_training_examples(docs, stoplist, no_frequent, cfg, seed=5, epoch=0)
        e1 = build_training_examples(docs, stoplist, no_frequent, cfg, seed=5, epoch=1)
        assert [x.control for x in e0] != [x.control for x in e1]

    def test_controls_round_trip_and_occur_in_target(self, stoplist, no_frequent):
        docs = make_corpus(50, seed=3)
        cfg = SamplingConfig()
        examples = build_training_examples(docs, stoplist, no_frequent, cfg, 11, 0)
        by_id = {d.id: d for d in docs}
        for example in examples:
            spec = parse_control(example.control)
            tok = tokenize_words(by_id[example.doc_id].target)
            for kw in spec.keywords:
                assert find_keyword_occurrences(tok, kw.phrase)

    def test_tiny_target_bounded_by_candidates(self, stoplist, no_frequent):
        docs = [Document(id="a", target="Hello .")]
        cfg = SamplingConfig()
        for seed in range(50):
            (example,) = build_training_examples(
                docs, stoplist, no_frequent, cfg, seed, 0
            )
            spec = parse_control(example.control)
            assert len(spec.keywords) <= 2

    def test_input_includes_source(self, stoplist, no_frequent):
        docs = [Document(id="a", target="storm harbor lantern", source="src doc")]
        (example,) = build_training_examples(
            docs, stoplist, no_frequent, SamplingConfig(), 3, 0
        )
        assert example.input.endswith(" [SEP] src doc") or example.input == "src doc"
        assert example.target == "storm harbor lantern"


class TestBuildEvalSpecs:
    def test_oracle_positions_re_derivable(self, stoplist, no_frequent):
        docs = make_corpus(40, seed=4)
        specs, skipped = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=2, mode="oracle", seed=9
        )
        assert skipped == 0
        by_id = {d.id: d for d in docs}
        for espec in specs:
            tok = tokenize_words(by_id[espec.doc_id].target)
            assert espec.spec.length == quantize_length(len(tok))
            for kw in espec.spec.keywords:
                buckets = {
                    quantize_position(i, len(tok))
                    for i in find_keyword_occurrences(tok, kw.phrase)
                }
                assert kw.position in buckets

    def test_random_mode_shares_keywords(self, stoplist, no_frequent):
        docs = make_corpus(40, seed=4)
        oracle, _ = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=1, mode="oracle", seed=9
        )
        randomized, _ = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=1, mode="random", seed=9
        )
        assert [s.doc_id for s in oracle] == [s.doc_id for s in randomized]
        for a, b in zip(oracle, randomized):
            assert [kw.phrase for kw in a.spec.keywords] == [
                kw.phrase for kw in b.spec.keywords
            ]
            assert a.spec.length == b.spec.length

    def test_short_doc_skipped(self, stoplist, no_frequent):
        docs = [Document(id="a", target="Hello .")]
        specs, skipped = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=3, mode="oracle", seed=1
        )
        assert specs == []
        assert skipped == 1

    def test_bad_n_keywords(self, stoplist, no_frequent):
        with pytest.raises(ValueError):
            build_eval_specs([], stoplist, no_frequent, 4, "oracle", 0)

    def test_bad_mode(self, stoplist, no_frequent):
        with pytest.raises(ValueError):
            build_eval_specs([], stoplist, no_frequent, 1, "sideways", 0)

    def test_workers_do_not_change_output(self, stoplist, no_frequent):
        docs = make_corpus(40, seed=4)
        a = build_eval_specs(docs, stoplist, no_frequent, 1, "oracle", 9, workers=1)
        b = build_eval_specs(docs, stoplist, no_frequent, 1, "oracle", 9, workers=3)
        assert a == b


class TestSerialization:
    def test_eval_spec_dict_round_trip(self, stoplist, no_frequent):
        docs = make_corpus(10, seed=5)
        specs, _ = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=2, mode="oracle", seed=2
        )
        for espec in specs:
            assert eval_spec_from_dict(eval_spec_to_dict(espec)) == espec

    def test_load_eval_specs_file(self, tmp_path, stoplist, no_frequent):
        docs = make_corpus(10, seed=5)
        specs, _ = build_eval_specs(
            docs, stoplist, no_frequent, n_keywords=1, mode="oracle", seed=2
        )
        path = tmp_path / "specs.jsonl"
        write_lines(path, [json.dumps(eval_spec_to_dict(s)) for s in specs])
        assert load_eval_specs(path) == specs

    def test_load_generations_duplicate(self, tmp_path):
        path = tmp_path / "g.jsonl"
        write_lines(
            path,
            [
                json.dumps({"doc_id": "a", "generated": "x"}),
                json.dumps({"doc_id": "a", "generated": "y"}),
            ],
        )
        with pytest.raises(CorpusFormatError, match="duplicate"):
            load_generations(path)


class TestDeriveRng:
    def test_stable_across_calls(self):
        assert derive_rng(1, "x", "a").random() == derive_rng(1, "x", "a").random()

    def test_distinct_streams(self):
        assert derive_rng(1, "x", "a").random() != derive_rng(1, "x", "b").random()
        assert derive_rng(1, "kw", "a").random() != derive_rng(1, "pos", "a").random()
