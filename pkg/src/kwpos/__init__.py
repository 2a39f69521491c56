"""Keyword-position control toolkit.

Extract control tokens (keywords, relative-position buckets, length
buckets) from reference texts, build control-conditioned training and
evaluation data, and measure whether generated texts honor keyword,
position and length constraints.
"""

from .control import (
    ControlParseError,
    ControlSpec,
    Keyword,
    KeywordCandidate,
    SamplingConfig,
    extract_keyword_candidates,
    parse_control,
    quantize_length,
    quantize_position,
    randomize_positions,
    sample_control_spec,
    serialize_control,
)
from .dataset import (
    CorpusFormatError,
    Document,
    EvalSpec,
    TrainingExample,
    build_eval_specs,
    build_training_examples,
    load_corpus,
    split_corpus,
)
from .metrics import (
    EvaluationReport,
    EvalRow,
    Outcome,
    PositionOutcome,
    RougeScores,
    aggregate_report,
    evaluate_spec,
    find_keyword_occurrences,
    keyword_inclusion,
    keyword_position_outcome,
    position_accuracy,
    rouge_keyword_excluded,
    rouge_scores,
    self_bleu,
)
from .oracle_gen import (
    DropKeyword,
    InfeasibleSpecError,
    Paraphrase,
    PerturbMode,
    ShiftBucket,
    generate_satisfying,
    load_filler_lexicon,
    perturb,
)
from .tokenizer import (
    TokenizedText,
    WordList,
    build_frequent_word_list,
    default_stopwords,
    is_stopword,
    load_word_list,
    tokenize_words,
)

__version__ = "0.1.0"
