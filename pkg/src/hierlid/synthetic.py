"""Synthetic stand-in corpora with the shape of the South African task.

Languages in a group share most of their word roots and differ through a
few spelling rules, so group routing is easy and within-group resolution is
hard.  Intended for demos, tests and throughput runs when the real corpora
are not at hand; accuracies on it say nothing about real data.
"""

from __future__ import annotations

import random

from .corpus import ZA_GROUP_MAP, Dataset, GroupMap, LabeledSample, truncate_short

_CONSONANTS = "bcdfghjklmnprstvwyz"
_VOWELS = "aeiou"


def _syllables(rng: random.Random, k: int) -> list[str]:
    out = set()
    while len(out) < k:
        onset = rng.choice(_CONSONANTS) + (rng.choice("hlwy") if rng.random() < 0.25 else "")
        out.add(onset + rng.choice(_VOWELS))
    return sorted(out)


def _word(rng: random.Random, syl: list[str], weights: list[float]) -> str:
    n = rng.choice((1, 2, 2, 3, 3, 4))
    return "".join(rng.choices(syl, weights, k=n))


def _zipf(rng: random.Random, words: list[str], k: int, s: float = 1.1) -> list[str]:
    weights = [1.0 / (i + 1) ** s for i in range(len(words))]
    return rng.choices(words, weights, k=k)


def make_language_vocabs(group_map: GroupMap = ZA_GROUP_MAP, vocab_size: int = 1500,
                         shared: float = 0.6, seed: int = 0) -> dict[str, list[str]]:
    rng = random.Random(seed)
    vocabs = {}
    for group in group_map.groups:
        syl = _syllables(rng, 40)
        n_roots = int(vocab_size * shared)
        roots = list(dict.fromkeys(_word(rng, syl, [1.0] * len(syl)) for _ in range(n_roots * 2)))
        roots = roots[:n_roots]
        for lang in group.members:
            weights = [rng.random() + 0.2 for _ in syl]
            rules = [(rng.choice(_VOWELS) + rng.choice(_CONSONANTS),
                      rng.choice(_VOWELS) + rng.choice(_CONSONANTS)) for _ in range(3)]
            own = []
            for r in roots:
                for a, b in rules:
                    r = r.replace(a, b)
                own.append(r)
            while len(own) < vocab_size:
                own.append(_word(rng, syl, weights))
            rng.shuffle(own)
            vocabs[lang] = list(dict.fromkeys(own))
    return vocabs


def make_dataset(group_map: GroupMap = ZA_GROUP_MAP, n_train: int = 300, n_test: int = 100,
                 short_test: bool = True, seed: int = 0, vocab_size: int = 1500) -> Dataset:
    """Balanced train/test splits; test texts are cut to 15-20 characters."""
    vocabs = make_language_vocabs(group_map, vocab_size, seed=seed)
    rng = random.Random(seed + 1)
    train, test = [], []
    for lang in group_map.languages:
        words = vocabs[lang]
        for _ in range(n_train):
            train.append(LabeledSample(" ".join(_zipf(rng, words, rng.randint(8, 30))), lang))
        for _ in range(n_test):
            text = " ".join(_zipf(rng, words, 12))
            if short_test:
                text = truncate_short(text, 15, 20)
            test.append(LabeledSample(text, lang))
    rng.shuffle(train)
    return Dataset.from_samples(train, test, name=f"synthetic-{seed}")
