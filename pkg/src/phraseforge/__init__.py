"""Branching-entropy phrase selection and placeholder-based translation tooling."""

from .aligner import (CandidatePair, PhraseTable, align_candidates, load_phrase_table,
                      load_word_alignment)
from .corpus import (ParallelCorpus, Vocabulary, build_vocabulary, filter_by_length, is_oov,
                     load_parallel_corpus)
from .evaluation import adequacy_average, corpus_bleu, count_untranslated, pairwise_score
from .pipeline import PipelineConfig, decode_with_tokens, run_training_prep
from .rewriter import TokenMap, prepare_training_corpus, replace_with_tokens, restore_tokens
from .selector import (PhrasePair, SelectionConfig, mine_training_pairs, select_phrase_pairs)
from .stats import (NgramStatistics, branching_entropy_left, branching_entropy_right,
                    count_ngrams, is_entropy_boundary)
from .translators import builtin_translators

__version__ = "0.1.0"

__all__ = [
    "CandidatePair", "NgramStatistics", "ParallelCorpus", "PhrasePair", "PhraseTable",
    "PipelineConfig", "SelectionConfig", "TokenMap", "Vocabulary", "adequacy_average",
    "align_candidates", "branching_entropy_left", "branching_entropy_right", "build_vocabulary",
    "builtin_translators", "corpus_bleu", "count_ngrams", "count_untranslated",
    "decode_with_tokens", "filter_by_length", "is_entropy_boundary", "is_oov",
    "load_parallel_corpus", "load_phrase_table", "load_word_alignment", "mine_training_pairs",
    "pairwise_score", "prepare_training_corpus", "replace_with_tokens", "restore_tokens",
    "run_training_prep", "select_phrase_pairs",
]
