"""Walk through text normalization and hashed n-gram features.

Run: python demos/01_features.py
"""

from hierlid.features import FeatureConfig, char_ngrams, featurize, normalize, word_ngrams

text = "Sawubona   Baba!"
norm = normalize(text)
print(f"raw:        {text!r}")
print(f"normalized: {norm!r}")

# Character n-grams run over the whole normalized string, spaces included.
for n in (2, 4, 6):
    grams = char_ngrams(norm, n)
    print(f"c{n}: {sum(grams.values())} grams, e.g. {sorted(grams)[:4]}")
print("w1:", dict(word_ngrams(norm, 1)))
print("w2:", dict(word_ngrams(norm, 2)))

# Every tagged n-gram hashes into one of 2^20 buckets; the tag keeps "ab"
# as a character bigram apart from "ab" as a word.
fv = featurize(text)
print(f"\n{len(fv)} distinct buckets, {sum(fv.values())} n-grams in total")

# A small bucket space makes collisions visible.
tiny = FeatureConfig(num_buckets=64)
fv_tiny = featurize(text, tiny)
print(f"with 64 buckets: {len(fv_tiny)} distinct buckets for the same "
      f"{sum(fv_tiny.values())} n-grams")
