import dataclasses
import io
import random
import struct

import numpy as np
import pytest

from hierlid.corpus import Dataset, GroupMap, LabeledSample, LanguageGroup, group_of
from hierlid.features import FeatureConfig, featurize
from hierlid.lexicon import Lexicon
from hierlid.nb import TrainingError, predict_group, predict_within
from hierlid.stack import (FallbackScope, InputError, LexiconOptions, ModelFormatError,
                           ModelVersionError, Source, StackVariant, build_stacked, classify,
                           dumps_model, load_model, loads_model, save_model)

GMAP = GroupMap((LanguageGroup("Nguni", ("zul", "xho")), LanguageGroup("English", ("eng",))))
TOY_TRAIN = [
    LabeledSample("ngi ya bona ngi ya bona", "zul"),
    LabeledSample("ngi ya hamba kakhulu", "zul"),
    LabeledSample("ndi ya bona ndi ya bona", "xho"),
    LabeledSample("ndi ya hamba kakhulu", "xho"),
    LabeledSample("the cat sat on the mat", "eng"),
    LabeledSample("the dog ran to the park", "eng"),
]
TOY = Dataset.from_samples(TOY_TRAIN, TOY_TRAIN[:3], name="toy")
SMALL_CFG = FeatureConfig(num_buckets=1 << 16)


def toy_model(variant="nb+lex", vocab=None, **kw):
    m = build_stacked(TOY, variant, SMALL_CFG, group_map=GMAP, **kw)
    if vocab is not None:
        m = dataclasses.replace(m, lexicon=Lexicon({k: frozenset(v) for k, v in vocab.items()}))
    return m


def random_texts(n, seed=0):
    rng = random.Random(seed)
    alphabet = "abcdefghijklmnopqrstuvwxyz  éšž'-"
    out = []
    while len(out) < n:
        t = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40)))
        if t.strip():
            out.append(t)
    return out


@pytest.fixture(scope="module")
def za_models(za_dataset):
    return {v: build_stacked(za_dataset, v) for v in StackVariant}


def test_variant_contracts(za_models):
    nb = za_models[StackVariant.NB_ONLY]
    assert nb.router is not None and nb.lexicon is None and not nb.group_models
    assert set(za_models[StackVariant.NB_NB].group_models) == {"Nguni", "Sotho"}
    assert za_models[StackVariant.NB_LEX].lexicon is not None
    lex = za_models[StackVariant.LEX_ONLY]
    assert lex.router is None and lex.lexicon is not None
    assert lex.metadata["lex_only_fallback"] == lex.group_map.languages[0]


def test_include_test_lexicon(za_dataset):
    m = build_stacked(za_dataset, "nb+lex", lexicon=LexiconOptions(include_test=True))
    assert m.lexicon.built_with_test
    assert not build_stacked(za_dataset, "nb+lex").lexicon.built_with_test


def test_nb_nb_needs_two_members():
    ds = Dataset(tuple(s for s in TOY_TRAIN if s.label != "xho"), (),
                 frozenset({"zul", "xho", "eng"}))
    gm = GroupMap((LanguageGroup("Nguni", ("zul", "xho")), LanguageGroup("English", ("eng",))))
    with pytest.raises(TrainingError, match="Nguni"):
        build_stacked(ds, "nb+nb", SMALL_CFG, group_map=gm)


def test_missing_group_map_language():
    with pytest.raises(TrainingError, match="eng"):
        build_stacked(TOY, "nb", SMALL_CFG, group_map=GMAP.restrict({"zul", "xho"}))


def test_lexicon_confident_path():
    m = toy_model(vocab={"zul": {"ngi", "ya", "bona"}, "xho": {"ya", "bona"}, "eng": {"the"}})
    p = classify(m, "ngi ya bona")
    assert (p.language, p.group.name, p.source, p.lex_confident) == \
        ("zul", "Nguni", Source.LEXICON, True)
    assert p.row() == "zul\tNguni\tLEXICON"


def test_lexicon_tie_falls_back_to_group_nb():
    m = toy_model(vocab={"zul": {"ya", "bona"}, "xho": {"ya", "bona"}, "eng": set()})
    text = "ndi ya bona"
    p = classify(m, text)
    assert p.source is Source.NB and not p.lex_confident
    assert p.group.name == "Nguni"
    assert p.language == predict_within(m.router, featurize(text, SMALL_CFG), p.group) == "xho"


def test_singleton_group_bypasses_lexicon():
    m = toy_model(vocab={"zul": {"the"}, "xho": set(), "eng": set()})
    p = classify(m, "the cat sat")
    assert (p.language, p.group.name, p.source) == ("eng", "English", Source.NB)


def test_global_fallback_scope():
    m = toy_model(vocab={"zul": set(), "xho": set(), "eng": set()}, fallback_scope="global")
    for t in ["ngi ya bona", "the cat", "ndi hamba"]:
        p = classify(m, t)
        s = m.router.score_array(featurize(t, SMALL_CFG))
        assert p.language == m.router.classes[int(np.argmax(s))]
        assert p.language in p.group


def test_lex_only_fallback():
    m = toy_model("lex")
    p = classify(m, "zzz qqq")
    assert p.language == m.group_map.languages[0] and not p.lex_confident
    assert p.source is Source.LEXICON
    q = classify(m, "the cat")
    assert q.language == "eng" and q.lex_confident


def test_empty_text_rejected(za_models):
    for m in za_models.values():
        with pytest.raises(InputError):
            classify(m, "   \t ")


def test_hierarchical_consistency(za_dataset, za_models):
    for v, m in za_models.items():
        for s in za_dataset.test[:150]:
            p = classify(m, s.text)
            assert p.language in p.group
            assert p.group == group_of(p.language, m.group_map)
            if v is not StackVariant.LEX_ONLY:
                fv = featurize(s.text)
                assert p.group == predict_group(m.router, fv, m.group_map, m.aggregation)


def test_empty_lexicon_degenerates_to_router_within_group(za_dataset, za_models):
    m = za_models[StackVariant.NB_LEX]
    empty = dataclasses.replace(m, lexicon=Lexicon({l: frozenset() for l in m.languages}))
    for s in za_dataset.test:
        p = classify(empty, s.text)
        fv = featurize(s.text)
        g = predict_group(m.router, fv, m.group_map)
        assert p.source is Source.NB
        assert p.language == predict_within(m.router, fv, g)


def test_components_validated(za_models):
    m = za_models[StackVariant.NB_ONLY]
    with pytest.raises(ValueError):
        dataclasses.replace(m, variant=StackVariant.NB_LEX)
    with pytest.raises(ValueError):
        dataclasses.replace(m, feature_config=FeatureConfig(num_buckets=1 << 10))


def test_deterministic(za_dataset, za_models):
    m = za_models[StackVariant.NB_LEX]
    first = [classify(m, s.text, with_scores=True) for s in za_dataset.test[:50]]
    again = [classify(m, s.text, with_scores=True) for s in za_dataset.test[:50]]
    assert first == again
    assert dumps_model(build_stacked(za_dataset, "nb+lex")) == dumps_model(m)


@pytest.mark.parametrize("variant", list(StackVariant))
def test_round_trip(za_models, tmp_path, variant):
    m = za_models[variant]
    path = tmp_path / "m.hlid"
    save_model(m, path)
    m2 = load_model(path)
    assert m2.variant is m.variant and m2.group_map == m.group_map
    for t in random_texts(100, seed=1):
        assert classify(m, t, with_scores=True) == classify(m2, t, with_scores=True)
    buf = io.BytesIO()
    save_model(m2, buf)
    assert buf.getvalue() == path.read_bytes()


@pytest.fixture(scope="module")
def toy_bytes():
    return dumps_model(toy_model())


def test_corrupted_byte_detected(toy_bytes):
    rng = random.Random(0)
    for _ in range(20):
        data = bytearray(toy_bytes)
        i = rng.randrange(len(data))
        data[i] ^= 0x01 << rng.randrange(8)
        with pytest.raises(ModelFormatError):
            loads_model(bytes(data))


def test_unknown_version(toy_bytes):
    data = bytearray(toy_bytes)
    struct.pack_into("<I", data, 8, 99)
    with pytest.raises(ModelVersionError, match="99"):
        loads_model(bytes(data))


@pytest.mark.parametrize("cut", [0, 10, 52, 1000, -1])
def test_truncation_detected(toy_bytes, cut):
    with pytest.raises(ModelFormatError):
        loads_model(toy_bytes[:cut])


def test_not_a_model():
    with pytest.raises(ModelFormatError):
        loads_model(b"PK\x03\x04" + bytes(100))
