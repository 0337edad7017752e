"""Co-citation case similarity labeling, contrastive pair mining and SCR evaluation."""

__version__ = "0.1.0"

from .errors import CociteError, ParseError, ValidationError, MissingArtifactError
from .corpus import ArticleRef, Case, CaseSet, EmbeddingStore, parse_article_ref, load_cases, load_embeddings, corpus_stats, pair_count
from .grouping import GroupKey, GroupingScheme, compile_scheme, apply_filter, group_of, encode
from .simcore import SimilarityParams, dice, dice2, g_dice, g_dice_weighted, all_pairs, score_histogram

__all__ = [
    "CociteError", "ParseError", "ValidationError", "MissingArtifactError",
    "ArticleRef", "Case", "CaseSet", "EmbeddingStore",
    "parse_article_ref", "load_cases", "load_embeddings", "corpus_stats", "pair_count",
    "GroupKey", "GroupingScheme", "compile_scheme", "apply_filter", "group_of", "encode",
    "SimilarityParams", "dice", "dice2", "g_dice", "g_dice_weighted", "all_pairs", "score_histogram",
]
