"""Hierarchical naive Bayes + lexicon language identification for short texts."""

from .corpus import (Dataset, GroupMap, LabeledSample, LanguageGroup, ZA_GROUP_MAP,
                     builtin_group_map, group_of, load_group_map, load_tsv, truncate_short,
                     write_tsv)
from .evaluation import (PUBLISHED_ACCURACY, COMPARISON_VARIANTS, BenchReport, EvalReport,
                         MatrixVariant, benchmark, evaluate, run_matrix)
from .features import FeatureConfig, featurize, featurize_batch, normalize
from .lexicon import Lexicon, build_lexicon, lex_counts, lex_predict
from .nb import Aggregation, NBModel, posteriors, predict_group, predict_within, score, train_nb
from .stack import (FallbackScope, LexiconOptions, Prediction, Source, StackedModel,
                    StackVariant, build_stacked, classify, load_model, save_model)

__version__ = "0.1.0"
