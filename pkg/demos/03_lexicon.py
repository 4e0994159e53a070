"""The lexicon classifier and its confidence margin.

Run: python demos/03_lexicon.py
"""

from hierlid.corpus import LabeledSample, ZA_GROUP_MAP
from hierlid.lexicon import build_lexicon, lex_predict

train = [
    LabeledSample("ngiyabonga kakhulu mngane", "zul"),
    LabeledSample("enkosi kakhulu mhlobo", "xho"),
    LabeledSample("ngiyabonga baba", "nbl"),
]
lex = build_lexicon(train)
nguni = ZA_GROUP_MAP.group_named("Nguni")

for text in ["ngiyabonga kakhulu mngane", "kakhulu", "ngiyabonga baba", "hello there"]:
    lang, counts = lex_predict(lex, text, nguni)
    shown = {k: v for k, v in counts.items() if v}
    print(f"{text!r:30} counts={shown} -> {lang or 'abstain'}")

# A stricter margin trades answers for precision.
strict = lex.with_margin(2)
print("\nmargin 2:", lex_predict(strict, "ngiyabonga kakhulu mngane", nguni)[0])

# Dropout removes word types deterministically per (seed, language, word).
big = [LabeledSample(" ".join(f"w{i}" for i in range(1000)), "zul")]
for seed in (1, 2):
    kept = build_lexicon(big, dropout_rate=0.5, seed=seed).size()
    print(f"dropout 0.5, seed {seed}: kept {kept} of 1000 types")
