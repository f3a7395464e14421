from .lexicon import Lexicon, LexiconCounts, lexicon_counts
from .stats import (
    RankTest,
    StatTestResult,
    compare_groups,
    correct_and_star,
    rank_test,
    signed_rank_test,
    write_results_csv,
)
from .topics import TopicModel, fit_lda, heldout_perplexity, salient_terms, topic_tokens, unigram_perplexity

__all__ = [
    "Lexicon", "LexiconCounts", "lexicon_counts", "RankTest", "StatTestResult", "compare_groups",
    "correct_and_star", "rank_test", "signed_rank_test", "write_results_csv", "TopicModel", "fit_lda",
    "heldout_perplexity", "salient_terms", "topic_tokens", "unigram_perplexity",
]
