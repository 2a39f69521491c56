import json
import random

import pytest

from kwpos.dataset import Document
from kwpos.tokenizer import WordList, default_stopwords

# Content vocabulary for synthetic corpora; disjoint from the stop word list.
CONTENT_VOCAB = (
    "storm harbor lantern meadow copper violin garden puzzle rocket candle "
    "willow marble desert anchor bridge canyon ember forest glacier harvest "
    "island jungle kettle ladder mirror needle ocean palace quartz ribbon "
    "saddle temple umbrella valley walnut xenon yonder zephyr beacon cliff"
).split()

STOP_SAMPLE = ("the", "a", "was", "to", "of", "and")


@pytest.fixture(scope="session")
def stoplist() -> WordList:
    return default_stopwords()


@pytest.fixture(scope="session")
def no_frequent() -> WordList:
    return WordList(frozenset(), "frequent")


def make_corpus(n_docs: int, seed: int, min_words: int = 15, max_words: int = 60,
                with_source: bool = False) -> list[Document]:
    """Synthetic corpus of random content/stop word mixes ending in a period."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        n = rng.randint(min_words, max_words)
        words = [
            rng.choice(CONTENT_VOCAB) if rng.random() < 0.75 else rng.choice(STOP_SAMPLE)
            for _ in range(n)
        ]
        target = " ".join(words) + " ."
        source = " ".join(rng.choice(CONTENT_VOCAB) for _ in range(80)) if with_source else None
        docs.append(Document(id=f"doc{i:05d}", target=target, source=source))
    return docs


def write_corpus_jsonl(path, docs) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(json.dumps({"id": doc.id, "source": doc.source, "target": doc.target}) + "\n")
