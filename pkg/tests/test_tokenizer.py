import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwpos.dataset import Document
from kwpos.tokenizer import (
    TokenizedText,
    WordList,
    build_frequent_word_list,
    default_stopwords,
    is_stopword,
    load_word_list,
    tokenize_words,
)


class TestTokenizeWords:
    def test_sentence_with_trailing_period_has_nine_tokens(self):
        tok = tokenize_words("Marcia was looking forward to trying hang gliding.")
        assert tok.tokens == (
            "Marcia", "was", "looking", "forward", "to", "trying", "hang", "gliding", ".",
        )

    def test_empty_input(self):
        tok = tokenize_words("")
        assert tok.tokens == ()
        assert tok.offsets == ()

    def test_clitic_split(self):
        # Frozen from a reference Treebank tokenizer run on this string.
        tok = tokenize_words("She's a true miracle dog")
        assert tok.tokens == ("She", "'s", "a", "true", "miracle", "dog")

    def test_negation_clitic(self):
        assert tokenize_words("don't").tokens == ("do", "n't")
        assert tokenize_words("can't").tokens == ("ca", "n't")
        assert tokenize_words("shouldn't've").tokens == ("should", "n't", "'ve")

    def test_hyphenated_words_stay_joined(self):
        assert tokenize_words("a state-of-the-art plan").tokens == (
            "a", "state-of-the-art", "plan",
        )

    def test_numbers_and_currency(self):
        assert tokenize_words("Good muffins cost $3.88 in New York.").tokens == (
            "Good", "muffins", "cost", "$", "3.88", "in", "New", "York", ".",
        )

    def test_possessive_plural(self):
        assert tokenize_words("the dogs' bones").tokens == ("the", "dogs", "'", "bones")

    def test_punctuation_detached(self):
        assert tokenize_words('"Hello," she said...').tokens == (
            '"', "Hello", ",", '"', "she", "said", "...",
        )

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_offsets_reconstruct_surfaces(self, raw):
        tok = tokenize_words(raw)
        for token, (start, end) in zip(tok.tokens, tok.offsets):
            assert raw[start:end] == token

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_offsets_strictly_increasing_non_overlapping(self, raw):
        tok = tokenize_words(raw)
        for (s1, e1), (s2, e2) in zip(tok.offsets, tok.offsets[1:]):
            assert s1 < e1 <= s2 < e2

    @given(st.text(max_size=200))
    @settings(max_examples=100)
    def test_deterministic(self, raw):
        assert tokenize_words(raw) == tokenize_words(raw)

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_tokens_empty_iff_only_whitespace(self, raw):
        tok = tokenize_words(raw)
        assert (len(tok) == 0) == (raw.strip() == "")


class TestFromWords:
    def test_round_trips_words(self):
        tok = TokenizedText.from_words(["alpha", "bravo", "."])
        assert tok.tokens == ("alpha", "bravo", ".")
        assert tok.raw == "alpha bravo ."
        for token, (s, e) in zip(tok.tokens, tok.offsets):
            assert tok.raw[s:e] == token

    def test_rejects_whitespace_words(self):
        with pytest.raises(ValueError):
            TokenizedText.from_words(["two words"])
        with pytest.raises(ValueError):
            TokenizedText.from_words([""])


class TestStopwords:
    def test_was_is_a_stopword(self, stoplist):
        assert is_stopword("was", stoplist)

    def test_dog_is_not(self, stoplist):
        assert not is_stopword("dog", stoplist)

    def test_case_insensitive(self, stoplist):
        assert is_stopword("To", stoplist)
        assert is_stopword("WAS", stoplist)

    def test_kind_guard(self, no_frequent):
        with pytest.raises(ValueError):
            is_stopword("was", no_frequent)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            WordList(frozenset({"x"}), "oddkind")

    def test_load_word_list_skips_comments(self, tmp_path):
        path = tmp_path / "words.txt"
        path.write_text("# header\nAlpha\n\nbravo\n# tail\n", encoding="utf-8")
        wl = load_word_list(path, "stopword")
        assert "alpha" in wl
        assert "ALPHA" in wl
        assert "bravo" in wl
        assert len(wl) == 2


class TestFrequentWordList:
    def test_single_dominant_token(self):
        docs = [Document(id=str(i), target="the dog ran and the cat sat") for i in range(3)]
        wl = build_frequent_word_list(docs, top_n=1)
        # "the" appears twice per doc, everything else once.
        assert wl.entries == frozenset({"the"})

    def test_tie_breaks_lexicographically(self):
        docs = [Document(id=str(i), target="the dog ran") for i in range(3)]
        wl = build_frequent_word_list(docs, top_n=1)
        # Three-way count tie resolves lexicographically: "dog" < "ran" < "the".
        assert wl.entries == frozenset({"dog"})

    def test_top_zero_is_empty(self):
        docs = [Document(id="a", target="the dog ran")]
        wl = build_frequent_word_list(docs, top_n=0)
        assert len(wl) == 0

    def test_five_doc_corpus_exact_top3(self):
        # Hand-counted: tree=4, blue=3, fish=3, red/green/sky=1.
        docs = [
            Document(id="d1", target="red fish blue fish"),
            Document(id="d2", target="blue fish"),
            Document(id="d3", target="green tree"),
            Document(id="d4", target="tree tree tree"),
            Document(id="d5", target="blue sky"),
        ]
        wl = build_frequent_word_list(docs, top_n=3)
        assert wl.entries == frozenset({"tree", "blue", "fish"})
        assert wl.cutoff == 3
        assert wl.kind == "frequent"

    def test_reorder_invariance(self):
        docs = [
            Document(id="d1", target="red fish blue fish"),
            Document(id="d2", target="blue fish"),
            Document(id="d3", target="green tree tree tree"),
        ]
        a = build_frequent_word_list(docs, top_n=2)
        b = build_frequent_word_list(list(reversed(docs)), top_n=2)
        assert a.entries == b.entries

    def test_output_size_bounded(self):
        docs = [Document(id="a", target="one two three")]
        assert len(build_frequent_word_list(docs, top_n=100)) == 3

    def test_empty_corpus_error(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_frequent_word_list([], top_n=5)

    def test_case_folding(self):
        docs = [Document(id="a", target="Dog dog DOG cat")]
        wl = build_frequent_word_list(docs, top_n=1)
        assert wl.entries == frozenset({"dog"})
