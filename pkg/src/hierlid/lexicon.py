"""Per-language word-type lexicons and the margin-based lexicon classifier.

A lexicon answer is accepted only when the winning language covers at
least ``margin`` more tokens than the runner-up; otherwise it abstains and
the caller falls back to another model.
"""

from __future__ import annotations

import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import LabeledSample, LanguageGroup
from .features import FeatureConfig, normalize

log = logging.getLogger(__name__)

DROPOUT_UNITS = ("type", "token")


def _uniform(*key) -> float:
    """Deterministic uniform [0, 1) draw keyed by ``key``."""
    digest = hashlib.blake2b("\x1f".join(map(str, key)).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0 ** 64


@dataclass(frozen=True, eq=False)
class Lexicon:
    vocab: Mapping[str, frozenset]
    margin: int = 1
    built_with_test: bool = False
    dropout_rate: float = 0.0
    dropout_seed: int = 0
    dropout_unit: str = "type"
    lowercase: bool = True
    _owners: dict = field(init=False, repr=False)
    _cfg: FeatureConfig = field(init=False, repr=False)

    def __post_init__(self):
        if self.margin < 1:
            raise ValueError("margin must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        owners = defaultdict(set)
        for lang, words in self.vocab.items():
            for w in words:
                owners[w].add(lang)
        object.__setattr__(self, "_owners", {w: frozenset(s) for w, s in owners.items()})
        object.__setattr__(self, "_cfg", FeatureConfig(lowercase=self.lowercase))

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.vocab))

    def tokens(self, text: str) -> list[str]:
        return normalize(text, self._cfg).split()

    def with_margin(self, margin: int) -> "Lexicon":
        return Lexicon(self.vocab, margin, self.built_with_test, self.dropout_rate,
                       self.dropout_seed, self.dropout_unit, self.lowercase)

    def size(self) -> int:
        return sum(len(v) for v in self.vocab.values())

    def export(self, sink) -> None:
        """Write ``language<TAB>word`` lines, sorted."""
        for lang in self.languages:
            for w in sorted(self.vocab[lang]):
                sink.write(f"{lang}\t{w}\n")


def build_lexicon(train: Sequence[LabeledSample], test: Sequence[LabeledSample] = (),
                  dropout_rate: float = 0.0, seed: int = 0, *, margin: int = 1,
                  dropout_unit: str = "type", lowercase: bool = True) -> Lexicon:
    """Collect word types per language from ``train`` and, if given, ``test``.

    With ``dropout_unit="type"`` each (language, word) type is removed with
    probability ``dropout_rate``.  With ``"token"`` each occurrence is dropped
    independently and a type survives if any occurrence does.  Both draws are
    keyed by the seed and the item, so results do not depend on corpus order
    beyond occurrence numbering.
    """
    if not train:
        raise ValueError("lexicon needs training samples")
    if dropout_unit not in DROPOUT_UNITS:
        raise ValueError(f"dropout_unit must be one of {DROPOUT_UNITS}")
    if test:
        log.warning("lexicon includes test-set vocabulary (%d samples): transductive leakage",
                    len(test))
    cfg = FeatureConfig(lowercase=lowercase)
    vocab: dict[str, set] = defaultdict(set)
    seen: dict[tuple, int] = defaultdict(int)
    for s in list(train) + list(test):
        words = vocab[s.label]
        for w in normalize(s.text, cfg).split():
            if dropout_rate > 0 and dropout_unit == "token":
                k = seen[s.label, w]
                seen[s.label, w] = k + 1
                if _uniform(seed, s.label, w, k) < dropout_rate:
                    continue
            words.add(w)
    if dropout_rate > 0 and dropout_unit == "type":
        for lang, words in vocab.items():
            vocab[lang] = {w for w in words if _uniform(seed, lang, w) >= dropout_rate}
    frozen = {lang: frozenset(words) for lang, words in sorted(vocab.items())}
    return Lexicon(frozen, margin, bool(test), float(dropout_rate), int(seed),
                   dropout_unit, lowercase)


def lex_counts(lex: Lexicon, text: str, candidates: Iterable[str]) -> dict[str, int]:
    return token_counts(lex, lex.tokens(text), candidates)


def token_counts(lex: Lexicon, tokens: Iterable[str], candidates: Iterable[str]) -> dict[str, int]:
    counts = {c: 0 for c in candidates}
    owners = lex._owners
    for tok in tokens:
        for lang in owners.get(tok, ()):
            if lang in counts:
                counts[lang] += 1
    return counts


def decide(counts: Mapping[str, int], order: Sequence[str], margin: int) -> str | None:
    """Apply the margin rule to ``counts`` over languages in ``order``."""
    if len(order) == 1:
        return order[0] if counts[order[0]] > 0 else None
    top_lang = None
    top = second = 0
    for lang in order:
        c = counts[lang]
        if top_lang is None or c > top:
            if top_lang is not None:
                second = top
            top_lang, top = lang, c
        elif c > second:
            second = c
    if top > 0 and top - second >= margin:
        return top_lang
    return None


def lex_predict(lex: Lexicon, text: str, group: LanguageGroup) -> tuple[str | None, dict[str, int]]:
    counts = lex_counts(lex, text, group.members)
    return decide(counts, group.members, lex.margin), counts
