import math
import random

import mpmath
import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

import oracles
from hierlid.corpus import GroupMap, LabeledSample, LanguageGroup, ZA_GROUP_MAP
from hierlid.features import FeatureConfig, featurize
from hierlid.nb import (Aggregation, TrainingError, group_from_scores, posteriors,
                        predict_group, predict_within, score, train_nb)


def matrix(rows, num_buckets):
    m = np.zeros((len(rows), num_buckets), dtype=np.int64)
    for i, r in enumerate(rows):
        for b, n in r.items():
            m[i, b] = n
    return sp.csr_matrix(m)


def toy(rows, labels, num_buckets=4, alpha=0.01, classes=None):
    cfg = FeatureConfig((1,), (), num_buckets)
    samples = [LabeledSample(f"doc{i}", y) for i, y in enumerate(labels)]
    return train_nb(samples, cfg, alpha, classes, matrix(rows, num_buckets))


TOY_ROWS = [{0: 3, 1: 1}, {1: 2, 2: 2}, {3: 4}]
TOY_LABELS = ["zul", "xho", "eng"]


def test_uniform_prior_two_classes():
    m = toy([{0: 1}, {1: 1}], ["a", "b"])
    assert m.log_prior.tolist() == [math.log(0.5)] * 2


def test_single_class_degenerate():
    m = toy([{0: 1}], ["eng"])
    assert m.log_prior.tolist() == [0.0]
    assert predict_within(m, {2: 5}, LanguageGroup("E", ("eng",))) == "eng"
    assert max(score(m, {3: 1}), key=score(m, {3: 1}).get) == "eng"


def test_toy_likelihoods_match_closed_form():
    m = toy(TOY_ROWS, TOY_LABELS)
    docs = list(zip(TOY_ROWS, TOY_LABELS))
    classes, prior, lik = oracles.exact_nb(docs, 4, "0.01")
    assert list(m.classes) == classes
    for c in classes:
        for b in range(4):
            expected = float(oracles.mp_log(lik[c][b]))
            assert m.log_likelihood(c, b) == pytest.approx(expected, rel=1e-12)
    # zul: counts (3,1,0,0), total 4, denominator 4.04
    assert m.log_likelihood("zul", 0) == pytest.approx(math.log(3.01 / 4.04), rel=1e-12)
    assert m.log_likelihood("zul", 3) == pytest.approx(math.log(0.01 / 4.04), rel=1e-12)


def test_training_doc_classifies_to_its_class():
    m = toy(TOY_ROWS, TOY_LABELS)
    for row, y in zip(TOY_ROWS, TOY_LABELS):
        s = score(m, row)
        assert max(s, key=s.get) == y


def test_empty_fv_scores_are_priors():
    m = toy(TOY_ROWS, TOY_LABELS)
    assert list(score(m, {}).values()) == m.log_prior.tolist()


def test_scaling_counts_doubles_evidence():
    m = toy(TOY_ROWS, TOY_LABELS)
    fv = {0: 1, 2: 3, 3: 1}
    s1 = score(m, fv)
    s2 = score(m, {b: 2 * n for b, n in fv.items()})
    for c, lp in zip(m.classes, m.log_prior):
        assert s2[c] - lp == pytest.approx(2 * (s1[c] - lp), rel=1e-12)


def test_unseen_bucket_uses_default():
    m = toy([{0: 1}, {1: 1}], ["a", "b"], num_buckets=1 << 20)
    assert len(m.buckets) == 2
    assert m.log_likelihood("a", 12345) == pytest.approx(math.log(0.01 / (1 + 0.01 * (1 << 20))))


def test_posteriors():
    m = toy([{0: 1}, {0: 1}], ["a", "b"])
    assert posteriors(m, {0: 1}) == pytest.approx({"a": 0.5, "b": 0.5}, abs=1e-15)
    p = posteriors(m, {})
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-12)


def test_posterior_closed_form_gap_ln9():
    # scores differ by ln 9 => posteriors 0.9 / 0.1
    from hierlid.nb import softmax
    p = softmax(np.array([math.log(9.0) - 700.0, -700.0]))
    assert p.tolist() == pytest.approx([0.9, 0.1], abs=1e-12)


def test_posterior_argmax_matches_score_argmax():
    m = toy(TOY_ROWS, TOY_LABELS)
    rng = random.Random(0)
    for _ in range(200):
        fv = {b: rng.randint(1, 5) for b in rng.sample(range(4), rng.randint(0, 4))}
        s, p = score(m, fv), posteriors(m, fv)
        assert max(s, key=s.get) == max(p, key=p.get)
        assert sum(p.values()) == pytest.approx(1.0, abs=1e-9)


class FixedPosterior:
    """Scores whose softmax equals the given posteriors."""

    def __init__(self, post):
        self.classes = tuple(post)
        self.scores = np.log(np.array(list(post.values())))


ZA_SMALL = ZA_GROUP_MAP.restrict({"zul", "xho", "eng"})


@pytest.mark.parametrize("post,sum_group,max_group", [
    ({"zul": 0.4, "xho": 0.3, "eng": 0.3}, "Nguni", "Nguni"),
    ({"zul": 0.3, "xho": 0.3, "eng": 0.4}, "Nguni", "English"),
])
def test_group_aggregation(post, sum_group, max_group):
    f = FixedPosterior(post)
    assert group_from_scores(f.classes, f.scores, ZA_SMALL, Aggregation.SUM).name == sum_group
    assert group_from_scores(f.classes, f.scores, ZA_SMALL, Aggregation.MAX).name == max_group


def test_single_group_map_always_wins():
    m = toy(TOY_ROWS, TOY_LABELS)
    gm = GroupMap((LanguageGroup("All", ("zul", "xho", "eng")),))
    for fv in ({}, {0: 1}, {3: 9}):
        assert predict_group(m, fv, gm).name == "All"
        assert predict_group(m, fv, gm, Aggregation.MAX).name == "All"


def test_group_tie_goes_to_earlier_group():
    gm = GroupMap((LanguageGroup("A", ("a",)), LanguageGroup("B", ("b",))))
    scores = np.array([-1.0, -1.0])
    assert group_from_scores(("a", "b"), scores, gm).name == "A"
    assert group_from_scores(("b", "a"), scores, gm).name == "A"


def test_predict_within_restricts_to_group():
    # four classes; the fv ranks eng > afr > xho > zul
    rows = [{0: 5}, {1: 5}, {2: 5}, {3: 5}]
    m = toy(rows, ["eng", "afr", "xho", "zul"])
    fv = {0: 3, 1: 2, 2: 1}
    docs = list(zip(rows, ["eng", "afr", "xho", "zul"]))
    exact = oracles.exact_scores(*oracles.exact_nb(docs, 4, "0.01"), fv)
    ranking = sorted(exact, key=exact.get, reverse=True)
    assert ranking == ["eng", "afr", "xho", "zul"]
    assert predict_within(m, fv, LanguageGroup("Nguni", ("zul", "xho"))) == "xho"
    assert predict_within(m, fv, LanguageGroup("E", ("eng",))) == "eng"
    all_group = LanguageGroup("All", m.classes)
    s = score(m, fv)
    assert predict_within(m, fv, all_group) == max(s, key=s.get)
    with pytest.raises(ValueError):
        predict_within(m, fv, LanguageGroup("X", ("fra",)))


def test_training_errors():
    cfg = FeatureConfig((2,), (), 8)
    with pytest.raises(TrainingError):
        train_nb([], cfg)
    with pytest.raises(TrainingError, match="'eng'"):
        train_nb([LabeledSample("a", "eng"), LabeledSample("ab", "zul")], cfg)
    with pytest.raises(TrainingError):
        train_nb([LabeledSample("ab", "eng")], cfg, alpha=0.0)


def check_normalization(m):
    assert math.fsum(np.exp(m.log_prior)) == pytest.approx(1.0, abs=1e-9)
    unstored = m.num_buckets - len(m.buckets)
    for j in range(len(m.classes)):
        total = math.fsum(np.exp(m.table[:, j])) + unstored * math.exp(m.default[j])
        assert total == pytest.approx(1.0, abs=1e-6)


def test_normalization_invariants_real_features(small_dataset):
    m = train_nb(list(small_dataset.train))
    check_normalization(m)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.dictionaries(st.integers(0, 31), st.integers(1, 6), min_size=1,
                                          max_size=6),
                          st.sampled_from("abc")), min_size=1, max_size=20))
def test_normalization_invariants_random(docs):
    m = toy([d for d, _ in docs], [y for _, y in docs], num_buckets=32)
    check_normalization(m)


def test_label_permutation_equivariance(small_dataset):
    train = list(small_dataset.train)
    a = train_nb(train)
    perm = list(reversed(a.classes))
    b = train_nb(train, classes=perm)
    assert b.classes == tuple(perm)
    for s in small_dataset.test[:50]:
        fv = featurize(s.text)
        sa, sb = score(a, fv), score(b, fv)
        assert sa == pytest.approx(sb, rel=1e-12)
        assert max(sa, key=sa.get) == max(sb, key=sb.get)


def test_duplicating_training_data():
    rows = TOY_ROWS
    m1 = toy(rows, TOY_LABELS)
    m2 = toy(rows + rows, TOY_LABELS + TOY_LABELS)
    assert m1.log_prior.tolist() == pytest.approx(m2.log_prior.tolist(), abs=1e-15)
    # with additive smoothing the likelihoods follow the doubled counts exactly
    docs = list(zip(rows + rows, TOY_LABELS + TOY_LABELS))
    _, _, lik = oracles.exact_nb(docs, 4, "0.01")
    for c in m2.classes:
        for b in range(4):
            assert m2.log_likelihood(c, b) == pytest.approx(float(oracles.mp_log(lik[c][b])),
                                                            rel=1e-12)
    # and approach the original ones as alpha -> 0
    f1 = toy(rows, TOY_LABELS, alpha=1e-9)
    f2 = toy(rows + rows, TOY_LABELS + TOY_LABELS, alpha=1e-9)
    for b in range(4):
        if f1.log_likelihood("zul", b) > -10:
            assert f1.log_likelihood("zul", b) == pytest.approx(f2.log_likelihood("zul", b),
                                                                abs=1e-6)


def test_score_matrix_agrees_with_score_array(small_dataset):
    from hierlid.features import featurize_batch
    m = train_nb(list(small_dataset.train))
    texts = [s.text for s in small_dataset.test[:40]]
    batch = m.score_matrix(featurize_batch(texts))
    for i, t in enumerate(texts):
        np.testing.assert_allclose(batch[i], m.score_array(featurize(t)), rtol=1e-12)
