"""Hierarchical classification end to end: train, classify, save, reload.

Run: python demos/04_stacked.py
"""

import collections
import io

from hierlid.evaluation import evaluate
from hierlid.stack import LexiconOptions, build_stacked, classify, load_model, save_model
from hierlid.synthetic import make_dataset

data = make_dataset(n_train=300, n_test=200, seed=0)
model = build_stacked(data, "nb+lex", lexicon=LexiconOptions(include_test=False))

for s in data.test[:6]:
    p = classify(model, s.text)
    mark = "ok " if p.language == s.label else "err"
    print(f"{mark} {s.text!r:24} gold={s.label} -> {p.row()}")

# Which stage answered? LEXICON rows passed the margin rule; NB rows are
# singleton groups or lexicon abstentions.
sources = collections.Counter(classify(model, s.text).source.value for s in data.test)
print("\nanswer sources:", dict(sources))

report = evaluate(model, data.test)
print(f"accuracy {report.accuracy:.3f}, group accuracy {report.group_accuracy:.3f}, "
      f"lexicon precision {report.lexicon_precision:.3f} / recall {report.lexicon_recall:.3f}")

buf = io.BytesIO()
save_model(model, buf)
buf.seek(0)
again = load_model(buf)
same = all(classify(again, s.text, True) == classify(model, s.text, True) for s in data.test)
print(f"model file: {len(buf.getvalue()) / 1e6:.1f} MB, reload identical: {same}")
