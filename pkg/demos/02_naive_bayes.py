"""Train the hashed multinomial naive Bayes router and inspect its decisions.

Run: python demos/02_naive_bayes.py
"""

from hierlid.corpus import ZA_GROUP_MAP
from hierlid.features import featurize
from hierlid.nb import Aggregation, posteriors, predict_group, predict_within, train_nb
from hierlid.synthetic import make_dataset

# Synthetic stand-in for the eleven South African languages. Languages in a
# family share word roots, so within-family confusions are the hard part.
data = make_dataset(n_train=300, n_test=200, seed=0)
model = train_nb(data.train)
print(f"classes: {', '.join(model.classes)}")
print(f"stored buckets: {len(model.buckets):,} of {model.num_buckets:,}")

sample = data.test[0]
fv = featurize(sample.text)
post = posteriors(model, fv)
top = sorted(post, key=post.get, reverse=True)[:4]
print(f"\ntext {sample.text!r} (gold {sample.label})")
for lang in top:
    print(f"  P({lang}) = {post[lang]:.3f}")

group = predict_group(model, fv, ZA_GROUP_MAP)
print(f"routed to {group.name} (posterior mass); "
      f"MAX routing says {predict_group(model, fv, ZA_GROUP_MAP, Aggregation.MAX).name}")
print(f"best member of {group.name}: {predict_within(model, fv, group)}")

correct = sum(max(p := posteriors(model, featurize(s.text)), key=p.get) == s.label
              for s in data.test)
print(f"\nflat accuracy on {len(data.test)} short texts: {correct / len(data.test):.3f}")
