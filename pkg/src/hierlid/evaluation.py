"""Accuracy reports, the variant comparison matrix and the throughput benchmark."""

from __future__ import annotations

import io
import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Dataset, GroupMap, LabeledSample, ZA_GROUP_MAP, group_of, samples_checksum
from .features import FeatureConfig, featurize_batch
from .nb import Aggregation, train_nb
from .stack import (FallbackScope, LexiconOptions, Source, StackedModel, StackVariant,
                    build_stacked, classify)

log = logging.getLogger(__name__)


class UnknownLabelError(ValueError):
    pass


class BenchmarkError(ValueError):
    pass


@dataclass
class ClassStats:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict[str, ClassStats]
    labels: list[str]
    confusion: np.ndarray          # gold x predicted
    group_accuracy: float
    lexicon_answer_rate: float
    lexicon_precision: float       # among samples the lexicon answered
    lexicon_recall: float          # correct lexicon answers over all samples
    run_metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def to_text(self) -> str:
        lines = [f"accuracy        {self.accuracy * 100:6.2f}",
                 f"group accuracy  {self.group_accuracy * 100:6.2f}",
                 f"lexicon answers {self.lexicon_answer_rate * 100:6.2f}%  "
                 f"(precision {self.lexicon_precision * 100:.2f}, "
                 f"recall {self.lexicon_recall * 100:.2f})",
                 "",
                 f"{'lang':<8}{'prec':>8}{'recall':>8}{'f1':>8}{'support':>9}"]
        for lang in self.labels:
            st = self.per_class[lang]
            lines.append(f"{lang:<8}{st.precision:8.4f}{st.recall:8.4f}{st.f1:8.4f}{st.support:9d}")
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        rows = ["metric\tvalue",
                f"accuracy\t{self.accuracy:.6f}",
                f"group_accuracy\t{self.group_accuracy:.6f}",
                f"lexicon_answer_rate\t{self.lexicon_answer_rate:.6f}",
                f"lexicon_precision\t{self.lexicon_precision:.6f}",
                f"lexicon_recall\t{self.lexicon_recall:.6f}"]
        for lang in self.labels:
            st = self.per_class[lang]
            rows.append(f"{lang}\tprecision={st.precision:.6f};recall={st.recall:.6f};"
                        f"f1={st.f1:.6f};support={st.support}")
        return "\n".join(rows) + "\n"

    def confusion_csv(self) -> str:
        out = io.StringIO()
        out.write("gold\\predicted," + ",".join(self.labels) + "\n")
        for lang, row in zip(self.labels, self.confusion):
            out.write(lang + "," + ",".join(str(int(v)) for v in row) + "\n")
        return out.getvalue()


def _safe_div(a: float, b: float) -> float:
    return a / b if b else 0.0


def report_from_predictions(gold: Sequence[str], predicted: Sequence[str],
                            gold_groups: Sequence[str], predicted_groups: Sequence[str],
                            lexicon_answered: Sequence[bool], labels: Sequence[str],
                            metadata: dict | None = None) -> EvalReport:
    labels = list(labels)
    index = {l: i for i, l in enumerate(labels)}
    conf = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, predicted):
        conf[index[g], index[p]] += 1
    n = len(gold)
    tp = np.diag(conf)
    per_class = {}
    for i, lang in enumerate(labels):
        prec = _safe_div(tp[i], conf[:, i].sum())
        rec = _safe_div(tp[i], conf[i].sum())
        per_class[lang] = ClassStats(float(prec), float(rec),
                                     float(_safe_div(2 * prec * rec, prec + rec)),
                                     int(conf[i].sum()))
    answered = np.asarray(lexicon_answered, dtype=bool)
    correct = np.asarray([g == p for g, p in zip(gold, predicted)], dtype=bool)
    lex_correct = int((answered & correct).sum())
    return EvalReport(
        accuracy=float(tp.sum() / n),
        per_class=per_class,
        labels=labels,
        confusion=conf,
        group_accuracy=float(np.mean([a == b for a, b in zip(gold_groups, predicted_groups)])),
        lexicon_answer_rate=float(answered.mean()),
        lexicon_precision=_safe_div(lex_correct, int(answered.sum())),
        lexicon_recall=lex_correct / n,
        run_metadata=dict(metadata or {}),
    )


def evaluate(model: StackedModel, test: Sequence[LabeledSample]) -> EvalReport:
    """Classify every test sample once and summarize."""
    if not test:
        raise ValueError("empty test set")
    known = set(model.languages)
    unknown = sorted({s.label for s in test} - known)
    if unknown:
        raise UnknownLabelError(f"test labels unknown to the model: {', '.join(unknown)}")
    preds = [classify(model, s.text) for s in test]
    gold = [s.label for s in test]
    meta = {
        "variant": model.variant.value,
        "aggregation": model.aggregation.value,
        "fallback_scope": model.fallback_scope.value,
        "feature_config": model.feature_config.to_dict(),
        "model": dict(model.metadata),
        "test_checksum": samples_checksum(test),
    }
    if model.lexicon is not None:
        lx = model.lexicon
        meta["lexicon"] = {"built_with_test": lx.built_with_test, "margin": lx.margin,
                           "dropout_rate": lx.dropout_rate, "dropout_seed": lx.dropout_seed,
                           "dropout_unit": lx.dropout_unit, "size": lx.size()}
    return report_from_predictions(
        gold, [p.language for p in preds],
        [group_of(g, model.group_map).name for g in gold], [p.group.name for p in preds],
        [p.lex_confident for p in preds], model.languages, meta)


# -- variant matrix ---------------------------------------------------------

@dataclass(frozen=True)
class MatrixVariant:
    name: str
    variant: StackVariant
    lexicon: LexiconOptions = LexiconOptions()


COMPARISON_VARIANTS = (
    MatrixVariant("Naive-Bayes only", StackVariant.NB_ONLY),
    MatrixVariant("Stacked (NB)", StackVariant.NB_NB),
    MatrixVariant("Stacked (lexicon)", StackVariant.NB_LEX, LexiconOptions(include_test=True)),
    MatrixVariant("Stacked (50% lex dropout)", StackVariant.NB_LEX,
                  LexiconOptions(include_test=True, dropout_rate=0.5)),
    MatrixVariant("Lexicon only", StackVariant.LEX_ONLY, LexiconOptions(include_test=True)),
    MatrixVariant("Lexicon only (sans test data)", StackVariant.LEX_ONLY,
                  LexiconOptions(include_test=False)),
)

# Published accuracies (percent) of the six configurations above, reported
# for the NCHLT short-text, DSL 2015 and DSL 2017 test sets.
PUBLISHED_ACCURACY = {
    "nchlt": {"Naive-Bayes only": 94.36, "Stacked (NB)": 94.41, "Stacked (lexicon)": 96.12,
              "Stacked (50% lex dropout)": 94.90, "Lexicon only": 82.88,
              "Lexicon only (sans test data)": 75.39},
    "dsl2015": {"Naive-Bayes only": 94.98, "Stacked (NB)": 95.23, "Stacked (lexicon)": 99.34,
                "Stacked (50% lex dropout)": 98.06, "Lexicon only": 97.86,
                "Lexicon only (sans test data)": 81.57},
    "dsl2017": {"Naive-Bayes only": 91.89, "Stacked (NB)": 91.96, "Stacked (lexicon)": 98.70,
                "Stacked (50% lex dropout)": 96.21, "Lexicon only": 93.56,
                "Lexicon only (sans test data)": 69.74},
}

# Published single-machine throughput (requests/s) on NCHLT, for context.
PUBLISHED_THROUGHPUT = {"fasttext": 44_000.0, "NB+Lex (un-hashed)": 2.3, "BRNN": 0.75,
                        "hierarchical NB+Lex (sklearn)": 7.4}


@dataclass
class MatrixRow:
    name: str
    report: EvalReport | None = None
    error: str | None = None
    seconds: float = 0.0


def run_matrix(dataset: Dataset, variants: Sequence[MatrixVariant] = COMPARISON_VARIANTS,
               feature_config: FeatureConfig = FeatureConfig(), alpha: float = 0.01, *,
               group_map: GroupMap = ZA_GROUP_MAP,
               aggregation: Aggregation | str = Aggregation.SUM,
               fallback_scope: FallbackScope | str = FallbackScope.GROUP) -> list[MatrixRow]:
    """Build and evaluate each variant; a failing variant yields an error row."""
    train = list(dataset.train)
    needs_nb = any(v.variant is not StackVariant.LEX_ONLY for v in variants)
    X = router = None
    if needs_nb:
        X = featurize_batch([s.text for s in train], feature_config)
        router = train_nb(train, feature_config, alpha, None, X)
    rows = []
    for mv in variants:
        t0 = time.perf_counter()
        try:
            model = build_stacked(dataset, mv.variant, feature_config, alpha, mv.lexicon,
                                  group_map=group_map, aggregation=aggregation,
                                  fallback_scope=fallback_scope, train_features=X,
                                  router=router if mv.variant is not StackVariant.LEX_ONLY else None)
            report = evaluate(model, dataset.test)
            report.run_metadata["matrix_row"] = mv.name
            rows.append(MatrixRow(mv.name, report, seconds=time.perf_counter() - t0))
        except Exception as exc:  # isolate per-variant failures
            log.exception("variant %s failed", mv.name)
            rows.append(MatrixRow(mv.name, error=f"{type(exc).__name__}: {exc}",
                                  seconds=time.perf_counter() - t0))
    return rows


def format_matrix(rows: Sequence[MatrixRow], reference: dict[str, float] | None = None) -> str:
    width = max(len(r.name) for r in rows)
    head = f"{'model':<{width}}  {'acc':>7}  {'group':>7}  {'lex%':>6}"
    if reference:
        head += f"  {'published':>9}  {'delta':>7}"
    lines = [head, "-" * len(head)]
    for r in rows:
        if r.report is None:
            lines.append(f"{r.name:<{width}}  ERROR {r.error}")
            continue
        acc = r.report.accuracy * 100
        line = (f"{r.name:<{width}}  {acc:7.2f}  {r.report.group_accuracy * 100:7.2f}  "
                f"{r.report.lexicon_answer_rate * 100:6.1f}")
        if reference and r.name in reference:
            line += f"  {reference[r.name]:9.2f}  {acc - reference[r.name]:+7.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def matrix_tsv(rows: Sequence[MatrixRow], reference: dict[str, float] | None = None) -> str:
    out = ["model\taccuracy\tgroup_accuracy\tlexicon_answer_rate\tpublished\terror"]
    for r in rows:
        pub = "" if not reference or r.name not in reference else f"{reference[r.name]:.2f}"
        if r.report is None:
            out.append(f"{r.name}\t\t\t\t{pub}\t{r.error}")
        else:
            out.append(f"{r.name}\t{r.report.accuracy * 100:.2f}\t"
                       f"{r.report.group_accuracy * 100:.2f}\t"
                       f"{r.report.lexicon_answer_rate:.4f}\t{pub}\t")
    return "\n".join(out) + "\n"


# -- throughput -------------------------------------------------------------

MIN_TIMED = 1000


@dataclass
class BenchReport:
    requests_per_sec: float
    total_samples: int
    wall_time: float
    warmup_discarded: int
    threads: int = 1
    machine_descriptor: str = ""

    def to_text(self) -> str:
        mode = "single-threaded" if self.threads == 1 else f"{self.threads} threads"
        return (f"{self.requests_per_sec:,.0f} requests/s ({mode}; {self.total_samples} timed, "
                f"{self.warmup_discarded} warm-up, {self.wall_time:.3f} s)\n"
                f"machine: {self.machine_descriptor}\n")


def machine_descriptor() -> str:
    return (f"{platform.machine()} {platform.processor() or platform.system()}, "
            f"{os.cpu_count()} cpus, Python {platform.python_version()}")


def benchmark(model: StackedModel, samples: Sequence[str], warmup: int = 1000,
              threads: int = 1) -> BenchReport:
    """Time classification of ``samples[warmup:]`` with a monotonic clock.

    ``threads=1`` is the reported mode; larger values fan the timed samples
    out to a thread pool and are reported separately.
    """
    if warmup < 0:
        raise BenchmarkError("warmup must be >= 0")
    if len(samples) < warmup + MIN_TIMED:
        raise BenchmarkError(f"need at least warmup + {MIN_TIMED} = {warmup + MIN_TIMED} "
                             f"samples, got {len(samples)}")
    for text in samples[:warmup]:
        classify(model, text)
    timed = list(samples[warmup:])
    if threads <= 1:
        t0 = time.perf_counter()
        for text in timed:
            classify(model, text)
        wall = time.perf_counter() - t0
    else:
        with ThreadPoolExecutor(threads) as pool:
            t0 = time.perf_counter()
            list(pool.map(lambda t: classify(model, t), timed, chunksize=256))
            wall = time.perf_counter() - t0
    return BenchReport(len(timed) / wall, len(timed), wall, warmup, max(threads, 1),
                       machine_descriptor())
