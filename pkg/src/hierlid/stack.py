"""The hierarchical classifier and its model file.

A router NB trained on specific language labels picks a language group.
Multi-member groups are then resolved by the lexicon (``nb+lex``), by a
per-group NB (``nb+nb``), or not at all (``nb``); ``lex`` runs the lexicon
alone over every task language.
"""

from __future__ import annotations

import enum
import hashlib
import io
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .corpus import Dataset, GroupMap, LanguageGroup, ZA_GROUP_MAP, group_of, parse_group_map
from .features import FeatureConfig, featurize_arrays, featurize_batch, normalize
from .lexicon import Lexicon, build_lexicon, decide, token_counts
from .nb import (Aggregation, NBModel, TrainingError, group_from_scores, group_index,
                 train_nb, within_from_scores)

log = logging.getLogger(__name__)


class StackVariant(str, enum.Enum):
    NB_ONLY = "nb"
    NB_NB = "nb+nb"
    NB_LEX = "nb+lex"
    LEX_ONLY = "lex"


class FallbackScope(str, enum.Enum):
    GROUP = "group"
    GLOBAL = "global"


class Source(str, enum.Enum):
    NB = "NB"
    LEXICON = "LEXICON"


class InputError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class Prediction:
    language: str
    group: LanguageGroup
    source: Source
    lex_confident: bool
    scores: Mapping[str, float] | None = None

    def row(self) -> str:
        return f"{self.language}\t{self.group.name}\t{self.source.value}"


@dataclass(frozen=True)
class LexiconOptions:
    include_test: bool = False
    dropout_rate: float = 0.0
    seed: int = 0
    margin: int = 1
    dropout_unit: str = "type"


@dataclass(frozen=True, eq=False)
class StackedModel:
    variant: StackVariant
    group_map: GroupMap
    feature_config: FeatureConfig
    router: NBModel | None = None
    group_models: Mapping[str, NBModel] = field(default_factory=dict)
    lexicon: Lexicon | None = None
    aggregation: Aggregation = Aggregation.SUM
    fallback_scope: FallbackScope = FallbackScope.GROUP
    metadata: Mapping = field(default_factory=dict)
    _router_groups: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        v = StackVariant(self.variant)
        needs_router = v is not StackVariant.LEX_ONLY
        needs_lex = v in (StackVariant.NB_LEX, StackVariant.LEX_ONLY)
        if needs_router != (self.router is not None):
            raise ValueError(f"variant {v.value} {'requires' if needs_router else 'takes no'} router")
        if needs_lex != (self.lexicon is not None):
            raise ValueError(f"variant {v.value} {'requires' if needs_lex else 'takes no'} lexicon")
        if (v is StackVariant.NB_NB) != bool(self.group_models):
            raise ValueError("group models are present iff the variant is nb+nb")
        for m in [self.router, *self.group_models.values()]:
            if m is not None and m.feature_config != self.feature_config:
                raise ValueError("component feature configs differ")
        object.__setattr__(self, "variant", v)
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        object.__setattr__(self, "fallback_scope", FallbackScope(self.fallback_scope))
        if self.router is not None:
            object.__setattr__(self, "_router_groups",
                               group_index(self.router.classes, self.group_map))

    @property
    def languages(self) -> tuple[str, ...]:
        if self.router is not None:
            return self.router.classes
        return self.group_map.languages


def build_stacked(dataset: Dataset, variant: StackVariant | str = StackVariant.NB_LEX,
                  feature_config: FeatureConfig = FeatureConfig(), alpha: float = 0.01,
                  lexicon: LexiconOptions = LexiconOptions(), *,
                  group_map: GroupMap = ZA_GROUP_MAP,
                  aggregation: Aggregation | str = Aggregation.SUM,
                  fallback_scope: FallbackScope | str = FallbackScope.GROUP,
                  train_features: sp.csr_matrix | None = None,
                  router: NBModel | None = None) -> StackedModel:
    """Train every component ``variant`` needs on ``dataset``.

    ``train_features`` (a featurized ``dataset.train``) and ``router`` let
    callers share work between variants.
    """
    variant = StackVariant(variant)
    if not dataset.train:
        raise TrainingError("dataset has no training samples")
    missing = set(dataset.languages) - set(group_map.languages)
    if missing:
        raise TrainingError(f"languages missing from group map: {sorted(missing)}")
    gmap = group_map.restrict(dataset.languages)
    train = list(dataset.train)

    nb_router = None
    group_models = {}
    lex = None
    if variant is not StackVariant.LEX_ONLY:
        if router is not None:
            nb_router = router
        else:
            if train_features is None:
                train_features = featurize_batch([s.text for s in train], feature_config)
            try:
                nb_router = train_nb(train, feature_config, alpha, None, train_features)
            except TrainingError as exc:
                raise TrainingError(f"router: {exc}") from None
    if variant is StackVariant.NB_NB:
        if train_features is None:
            train_features = featurize_batch([s.text for s in train], feature_config)
        for g in gmap.groups:
            if g.is_singleton:
                continue
            idx = [i for i, s in enumerate(train) if s.label in g.members]
            present = {train[i].label for i in idx}
            if len(present) < 2:
                raise TrainingError(f"group model {g.name}: needs training data for >= 2 members, "
                                    f"has {sorted(present)}")
            try:
                group_models[g.name] = train_nb([train[i] for i in idx], feature_config, alpha,
                                                None, train_features[idx])
            except TrainingError as exc:
                raise TrainingError(f"group model {g.name}: {exc}") from None
    if variant in (StackVariant.NB_LEX, StackVariant.LEX_ONLY):
        test = list(dataset.test) if lexicon.include_test else []
        if lexicon.include_test and not test:
            raise TrainingError("include_test requested but the dataset has no test split")
        lex = build_lexicon(train, test, lexicon.dropout_rate, lexicon.seed,
                            margin=lexicon.margin, dropout_unit=lexicon.dropout_unit,
                            lowercase=feature_config.lowercase)
    meta = {"dataset": dataset.name, "checksums": dataset.checksums(), "alpha": alpha}
    if variant is StackVariant.LEX_ONLY:
        meta["lex_only_fallback"] = gmap.languages[0]
    return StackedModel(variant, gmap, feature_config, nb_router, group_models, lex,
                        aggregation, fallback_scope, meta)


def classify(model: StackedModel, text: str, with_scores: bool = False) -> Prediction:
    norm = normalize(text, model.feature_config)
    if not norm:
        raise InputError("text is empty after normalization")
    v = model.variant
    gmap = model.group_map
    lex = model.lexicon
    if lex is not None:
        tokens = norm.split(" ") if lex.lowercase == model.feature_config.lowercase \
            else lex.tokens(text)

    if v is StackVariant.LEX_ONLY:
        langs = gmap.languages
        counts = token_counts(lex, tokens, langs)
        lang = decide(counts, langs, lex.margin)
        confident = lang is not None
        if lang is None:
            lang = langs[0]
        return Prediction(lang, group_of(lang, gmap), Source.LEXICON, confident,
                          dict(counts) if with_scores else None)

    router = model.router
    keys, counts = featurize_arrays(norm, model.feature_config)
    scores = router.score_keys(keys, counts)
    shown = dict(zip(router.classes, scores.tolist())) if with_scores else None

    if v is StackVariant.NB_ONLY:
        lang = router.classes[int(np.argmax(scores))]
        return Prediction(lang, group_of(lang, gmap), Source.NB, False, shown)

    group = group_from_scores(router.classes, scores, gmap, model.aggregation,
                              model._router_groups)
    if group.is_singleton:
        return Prediction(group.members[0], group, Source.NB, False, shown)

    if v is StackVariant.NB_NB:
        gm = model.group_models[group.name]
        lang = within_from_scores(gm.classes, gm.score_keys(keys, counts), group,
                                  gm._class_index)
        return Prediction(lang, group, Source.NB, False, shown)

    counts = token_counts(lex, tokens, group.members)
    lang = decide(counts, group.members, lex.margin)
    if lang is not None:
        return Prediction(lang, group, Source.LEXICON, True, shown)
    if model.fallback_scope is FallbackScope.GLOBAL:
        lang = router.classes[int(np.argmax(scores))]
        return Prediction(lang, group_of(lang, gmap), Source.NB, False, shown)
    lang = within_from_scores(router.classes, scores, group, router._class_index)
    return Prediction(lang, group, Source.NB, False, shown)


# -- model file -------------------------------------------------------------
#
# layout: MAGIC | u32 version | u64 payload length | sha256(payload) | payload
# payload is an .npz archive holding a JSON header and the NB arrays.

MAGIC = b"HLIDMDL\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQ32s")


def _nb_arrays(prefix: str, m: NBModel, arrays: dict) -> dict:
    arrays[f"{prefix}_log_prior"] = m.log_prior
    arrays[f"{prefix}_buckets"] = m.buckets
    arrays[f"{prefix}_table"] = m.table
    arrays[f"{prefix}_default"] = m.default
    return {"classes": list(m.classes), "alpha": m.alpha}


def _nb_from(prefix: str, info: dict, arrays, config: FeatureConfig) -> NBModel:
    return NBModel(tuple(info["classes"]), arrays[f"{prefix}_log_prior"],
                   arrays[f"{prefix}_buckets"], np.ascontiguousarray(arrays[f"{prefix}_table"]),
                   arrays[f"{prefix}_default"], float(info["alpha"]), config)


def dumps_model(model: StackedModel) -> bytes:
    arrays: dict[str, np.ndarray] = {}
    header = {
        "variant": model.variant.value,
        "aggregation": model.aggregation.value,
        "fallback_scope": model.fallback_scope.value,
        "feature_config": model.feature_config.to_dict(),
        "group_map": model.group_map.to_text(),
        "metadata": dict(model.metadata),
        "router": None,
        "group_models": [],
        "lexicon": None,
    }
    if model.router is not None:
        header["router"] = _nb_arrays("router", model.router, arrays)
    for i, (name, gm) in enumerate(model.group_models.items()):
        info = _nb_arrays(f"group{i}", gm, arrays)
        info["name"] = name
        header["group_models"].append(info)
    if model.lexicon is not None:
        lx = model.lexicon
        header["lexicon"] = {
            "margin": lx.margin, "built_with_test": lx.built_with_test,
            "dropout_rate": lx.dropout_rate, "dropout_seed": lx.dropout_seed,
            "dropout_unit": lx.dropout_unit, "lowercase": lx.lowercase,
            "vocab": {lang: sorted(words) for lang, words in lx.vocab.items()},
        }
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"),
                                     dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    payload = buf.getvalue()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(payload),
                        hashlib.sha256(payload).digest()) + payload


def loads_model(data: bytes) -> StackedModel:
    if len(data) < _HEADER.size:
        raise ModelFormatError("model file truncated (header)")
    magic, version, length, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("not a hierlid model file")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format version {version} "
                                f"(this build reads {FORMAT_VERSION})")
    payload = data[_HEADER.size:]
    if len(payload) != length:
        raise ModelFormatError(f"model payload is {len(payload)} bytes, header says {length}")
    if hashlib.sha256(payload).digest() != digest:
        raise ModelFormatError("model checksum mismatch")
    try:
        with np.load(io.BytesIO(payload), allow_pickle=False) as npz:
            arrays = {k: npz[k] for k in npz.files}
        header = json.loads(arrays["header"].tobytes().decode("utf-8"))
        config = FeatureConfig.from_dict(header["feature_config"])
        router = None
        if header["router"] is not None:
            router = _nb_from("router", header["router"], arrays, config)
        group_models = {info["name"]: _nb_from(f"group{i}", info, arrays, config)
                        for i, info in enumerate(header["group_models"])}
        lex = None
        if header["lexicon"] is not None:
            h = header["lexicon"]
            lex = Lexicon({lang: frozenset(w) for lang, w in h["vocab"].items()}, h["margin"],
                          h["built_with_test"], h["dropout_rate"], h["dropout_seed"],
                          h["dropout_unit"], h["lowercase"])
        return StackedModel(StackVariant(header["variant"]), parse_group_map(header["group_map"]),
                            config, router, group_models, lex, header["aggregation"],
                            header["fallback_scope"], header["metadata"])
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model payload: {exc}") from None


def save_model(model: StackedModel, sink) -> None:
    data = dumps_model(model)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def load_model(source) -> StackedModel:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return loads_model(fh.read())
    return loads_model(source.read())
