"""Multinomial naive Bayes over hashed count features.

Likelihoods use additive (Lidstone) smoothing over the full bucket space.
Only buckets seen in training are materialized; every other bucket shares
one per-class default log likelihood.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import GroupMap, LabeledSample, LanguageGroup, group_of
from ._kernels import accumulate, route
from .features import FeatureConfig, FeatureVector, featurize_batch, fv_arrays


class TrainingError(ValueError):
    pass


class Aggregation(str, enum.Enum):
    SUM = "sum"
    MAX = "max"


@dataclass(frozen=True, eq=False)
class NBModel:
    classes: tuple[str, ...]
    log_prior: np.ndarray          # (C,)
    buckets: np.ndarray            # (S,) sorted bucket ids with stored likelihoods
    table: np.ndarray              # (S, C) log likelihood per stored bucket
    default: np.ndarray            # (C,) log likelihood of any other bucket
    alpha: float
    feature_config: FeatureConfig
    _class_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_class_index", {c: i for i, c in enumerate(self.classes)})

    @property
    def num_buckets(self) -> int:
        return self.feature_config.num_buckets

    def log_likelihood(self, cls: str, bucket: int) -> float:
        c = self._class_index[cls]
        r = int(np.searchsorted(self.buckets, bucket))
        if r < len(self.buckets) and self.buckets[r] == bucket:
            return float(self.table[r, c])
        return float(self.default[c])

    def score_array(self, fv: FeatureVector) -> np.ndarray:
        return self.score_keys(*fv_arrays(fv))

    def score_keys(self, keys: np.ndarray, counts: np.ndarray) -> np.ndarray:
        """Scores from parallel bucket/count arrays; accumulation follows array order."""
        return accumulate(keys, counts, self.buckets, self.table, self.default, self.log_prior)

    def score_matrix(self, X: sp.csr_matrix) -> np.ndarray:
        """Vectorized scores for each row of a count matrix.

        Same formula as :meth:`score_array` but a different summation order,
        so results agree to rounding only.
        """
        X = sp.csr_matrix(X, dtype=np.float64)
        seen = X[:, self.buckets]
        unseen = np.asarray(X.sum(axis=1)).ravel() - np.asarray(seen.sum(axis=1)).ravel()
        return self.log_prior + seen @ self.table + np.outer(unseen, self.default)


def class_feature_counts(X: sp.csr_matrix, y: np.ndarray, n_classes: int) -> sp.csr_matrix:
    """Per-class bucket count totals (``n_classes x num_buckets``)."""
    indicator = sp.csr_matrix((np.ones(len(y), dtype=np.int64), (y, np.arange(len(y)))),
                              shape=(n_classes, len(y)))
    return (indicator @ sp.csr_matrix(X, dtype=np.int64)).tocsr()


def train_nb(samples: Sequence[LabeledSample], config: FeatureConfig = FeatureConfig(),
             alpha: float = 0.01, classes: Sequence[str] | None = None,
             features: sp.csr_matrix | None = None) -> NBModel:
    """Fit a multinomial NB on specific-language labels.

    ``classes`` fixes the class order (default: sorted labels).  ``features``
    may pass a precomputed :func:`featurize_batch` matrix aligned with
    ``samples``.
    """
    if not samples:
        raise TrainingError("no training samples")
    if not alpha > 0:
        raise TrainingError(f"alpha must be positive, got {alpha}")
    labels = [s.label for s in samples]
    if classes is None:
        classes = sorted(set(labels))
    else:
        classes = list(classes)
        missing = set(labels) - set(classes)
        if missing:
            raise TrainingError(f"labels not in class list: {sorted(missing)}")
    index = {c: i for i, c in enumerate(classes)}
    y = np.fromiter((index[l] for l in labels), dtype=np.int64, count=len(labels))
    doc_counts = np.bincount(y, minlength=len(classes))
    for c, n in zip(classes, doc_counts):
        if n == 0:
            raise TrainingError(f"class {c!r} has no training samples")

    X = featurize_batch([s.text for s in samples], config) if features is None else features
    if X.shape != (len(samples), config.num_buckets):
        raise TrainingError("feature matrix does not match samples/config")

    counts = class_feature_counts(X, y, len(classes))
    totals = np.asarray(counts.sum(axis=1)).ravel()
    for c, t in zip(classes, totals):
        if t == 0:
            raise TrainingError(f"class {c!r} has zero total feature count")

    buckets = np.unique(counts.indices).astype(np.int64)
    dense = counts[:, buckets].toarray().T.astype(np.float64)   # (S, C)
    denom = np.log(totals.astype(np.float64) + alpha * config.num_buckets)
    table = np.log(dense + alpha) - denom
    default = np.log(alpha) - denom
    log_prior = np.log(doc_counts.astype(np.float64)) - np.log(float(len(samples)))
    return NBModel(tuple(classes), log_prior, buckets, np.ascontiguousarray(table),
                   default, float(alpha), config)


def score(model: NBModel, fv: FeatureVector) -> dict[str, float]:
    s = model.score_array(fv)
    return dict(zip(model.classes, s.tolist()))


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def posteriors(model: NBModel, fv: FeatureVector) -> dict[str, float]:
    return dict(zip(model.classes, softmax(model.score_array(fv)).tolist()))


def group_index(classes: Sequence[str], group_map: GroupMap) -> np.ndarray:
    """Position in ``group_map.groups`` of each class's group."""
    pos = {g.name: i for i, g in enumerate(group_map.groups)}
    return np.array([pos[group_of(c, group_map).name] for c in classes], dtype=np.int64)


def group_from_scores(classes: Sequence[str], scores: np.ndarray, group_map: GroupMap,
                      aggregation: Aggregation = Aggregation.SUM,
                      index: np.ndarray | None = None) -> LanguageGroup:
    if index is None:
        index = group_index(classes, group_map)
    use_sum = Aggregation(aggregation) is Aggregation.SUM
    # ties go to the earlier class / earlier group
    return group_map.groups[int(route(scores, index, len(group_map.groups), use_sum))]


def within_from_scores(classes: Sequence[str], scores: np.ndarray,
                       group: LanguageGroup, index: dict | None = None) -> str:
    if index is None:
        index = {c: i for i, c in enumerate(classes)}
    best = None
    best_score = -np.inf
    for code in group.members:
        i = index.get(code)
        if i is not None and (best is None or scores[i] > best_score):
            best, best_score = code, scores[i]
    if best is None:
        raise ValueError(f"no model class belongs to group {group.name!r}")
    return best


def predict_group(model: NBModel, fv: FeatureVector, group_map: GroupMap,
                  aggregation: Aggregation = Aggregation.SUM) -> LanguageGroup:
    """Route to a group: SUM marginalizes posteriors, MAX maps the top class."""
    return group_from_scores(model.classes, model.score_array(fv), group_map, aggregation)


def predict_within(model: NBModel, fv: FeatureVector, group: LanguageGroup) -> str:
    """Highest-scoring class among ``group``'s members (ties: member order)."""
    return within_from_scores(model.classes, model.score_array(fv), group, model._class_index)
