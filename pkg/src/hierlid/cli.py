"""Command-line interface: train, classify, eval, matrix, bench, export-lexicon.

Exit status is 0 on success, 1 on usage errors and 2 on data or model
errors.  Results go to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys

from .corpus import (CorpusError, Dataset, UnknownLanguageError, builtin_group_map,
                     load_group_map, load_tsv)
from .evaluation import (PUBLISHED_ACCURACY, PUBLISHED_THROUGHPUT, COMPARISON_VARIANTS,
                         BenchmarkError, MatrixVariant, UnknownLabelError, benchmark, evaluate,
                         format_matrix, matrix_tsv, run_matrix)
from .features import FeatureConfig
from .lexicon import DROPOUT_UNITS
from .nb import TrainingError
from .stack import (InputError, LexiconOptions, ModelFormatError, StackVariant, build_stacked,
                    classify, load_model, save_model)

log = logging.getLogger("hierlid")

DATA_ERRORS = (CorpusError, UnknownLanguageError, UnknownLabelError, TrainingError,
               ModelFormatError, InputError, BenchmarkError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _orders(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _rate(text: str) -> float:
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError("dropout rate must be in [0, 1)")
    return v


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _add_groups(p):
    p.add_argument("--groups", metavar="FILE", help="group-map file (GroupName: code1,code2)")
    p.add_argument("--group-map", default="za", choices=["za", "dsl2015", "dsl2017"],
                   help="built-in group map used when --groups is not given (default: za)")


def _add_model_options(p):
    p.add_argument("--char-orders", type=_orders, default=(2, 4, 6), metavar="N,N")
    p.add_argument("--word-orders", type=_orders, default=(1, 2), metavar="N,N")
    p.add_argument("--num-buckets", type=_positive(int), default=1 << 20)
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--alpha", type=_positive(float), default=0.01)
    p.add_argument("--aggregation", choices=["sum", "max"], default="sum")
    p.add_argument("--fallback-scope", choices=["group", "global"], default="group")
    p.add_argument("--seed", type=int, default=0, help="lexicon dropout seed")


def _add_lexicon_options(p):
    p.add_argument("--include-test-lexicon", action="store_true",
                   help="add test-split vocabulary to the lexicon (transductive)")
    p.add_argument("--lex-dropout", type=_rate, default=0.0, metavar="RATE")
    p.add_argument("--dropout-unit", choices=DROPOUT_UNITS, default="type")
    p.add_argument("--margin", type=_positive(int), default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hierlid", description=__doc__.splitlines()[0])
    parser.add_argument("--config", metavar="JSON",
                        help="JSON file of option defaults, keyed by long option name")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write it to --model")
    p.add_argument("--train", required=True, metavar="TSV")
    p.add_argument("--test", metavar="TSV", help="test split (needed for --include-test-lexicon)")
    p.add_argument("--variant", choices=[v.value for v in StackVariant], default="nb+lex")
    p.add_argument("--model", required=True, metavar="FILE")
    _add_groups(p)
    _add_model_options(p)
    _add_lexicon_options(p)

    p = sub.add_parser("classify", help="classify --text arguments or stdin lines")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--text", action="append", help="text to classify (repeatable)")
    p.add_argument("--scores", action="store_true", help="append per-language scores as JSON")
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("eval", help="evaluate a model on a labeled TSV")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--test", required=True, metavar="TSV")
    p.add_argument("--format", choices=["text", "tsv"], default="text")
    p.add_argument("--confusion", metavar="CSV", help="also write the confusion matrix")
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("matrix", help="train and evaluate the six comparison variants")
    p.add_argument("--train", required=True, metavar="TSV")
    p.add_argument("--test", required=True, metavar="TSV")
    p.add_argument("--reference", choices=sorted(PUBLISHED_ACCURACY),
                   help="print deltas against published accuracies for this dataset")
    p.add_argument("--format", choices=["text", "tsv"], default="text")
    p.add_argument("--out", metavar="FILE")
    _add_groups(p)
    _add_model_options(p)
    p.add_argument("--dropout-unit", choices=DROPOUT_UNITS, default="type")
    p.add_argument("--margin", type=_positive(int), default=1)

    p = sub.add_parser("bench", help="measure classification throughput")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--input", required=True, metavar="TSV",
                   help="labeled TSV or plain text, one sample per line")
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--min-samples", type=int, default=0,
                   help="cycle the input until at least this many samples are timed")
    p.add_argument("--threads", type=_positive(int), default=1)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("export-lexicon", help="dump the lexicon as language<TAB>word lines")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {known.config}: {exc}")
        if not isinstance(defaults, dict):
            raise UsageError("config file must hold a JSON object")
        defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                for a in sp._actions:
                    if a.dest in defaults:
                        a.required = False
                sp.set_defaults(**{k: tuple(v) if isinstance(v, list) else v
                                   for k, v in defaults.items()})
    return parser.parse_args(argv)


def _group_map(args):
    if args.groups:
        return load_group_map(args.groups)
    return builtin_group_map(args.group_map)


def _feature_config(args) -> FeatureConfig:
    try:
        return FeatureConfig(args.char_orders, args.word_orders, args.num_buckets,
                             not args.no_lowercase)
    except ValueError as exc:
        raise UsageError(str(exc))


@contextlib.contextmanager
def _output(path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def cmd_train(args) -> int:
    if not (args.char_orders or args.word_orders):
        raise UsageError("at least one of --char-orders/--word-orders must be non-empty")
    if args.include_test_lexicon and not args.test:
        raise UsageError("--include-test-lexicon needs --test")
    config = _feature_config(args)
    dataset = Dataset.from_files(args.train, args.test, name=args.train)
    lex = LexiconOptions(args.include_test_lexicon, args.lex_dropout, args.seed, args.margin,
                         args.dropout_unit)
    model = build_stacked(dataset, args.variant, config, args.alpha, lex,
                          group_map=_group_map(args), aggregation=args.aggregation,
                          fallback_scope=args.fallback_scope)
    save_model(model, args.model)
    log.info("wrote %s model to %s", args.variant, args.model)
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    texts = args.text if args.text else (line.rstrip("\r\n") for line in sys.stdin)
    with _output(args.out) as out:
        for text in texts:
            if not text.strip():
                if args.text:
                    raise InputError("empty --text")
                continue
            pred = classify(model, text, with_scores=args.scores)
            row = pred.row()
            if args.scores:
                row += "\t" + json.dumps(pred.scores, sort_keys=True)
            out.write(row + "\n")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    report = evaluate(model, load_tsv(args.test))
    with _output(args.out) as out:
        out.write(report.to_tsv() if args.format == "tsv" else report.to_text())
    if args.confusion:
        with open(args.confusion, "w", encoding="utf-8") as fh:
            fh.write(report.confusion_csv())
    return 0


def cmd_matrix(args) -> int:
    config = _feature_config(args)
    dataset = Dataset.from_files(args.train, args.test, name=args.train)
    variants = [MatrixVariant(v.name, v.variant,
                              LexiconOptions(v.lexicon.include_test, v.lexicon.dropout_rate,
                                             args.seed, args.margin, args.dropout_unit))
                for v in COMPARISON_VARIANTS]
    rows = run_matrix(dataset, variants, config, args.alpha, group_map=_group_map(args),
                      aggregation=args.aggregation, fallback_scope=args.fallback_scope)
    reference = PUBLISHED_ACCURACY.get(args.reference) if args.reference else None
    with _output(args.out) as out:
        if args.format == "tsv":
            out.write(matrix_tsv(rows, reference))
        else:
            out.write(format_matrix(rows, reference))
            if reference:
                out.write("published: accuracies reported for the same six configurations\n")
    return 2 if any(r.report is None for r in rows) else 0


def _read_texts(path) -> list[str]:
    texts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\r\n")
            text = line.split("\t", 1)[0] if "\t" in line else line
            if text.strip():
                texts.append(text)
    return texts


def cmd_bench(args) -> int:
    model = load_model(args.model)
    texts = _read_texts(args.input)
    if not texts:
        raise BenchmarkError("no input texts")
    need = args.warmup + max(args.min_samples, 0)
    samples = list(texts)
    while len(samples) < need:
        samples.extend(texts)
    report = benchmark(model, samples, args.warmup, args.threads)
    with _output(args.out) as out:
        out.write(report.to_text())
        out.write("published throughput on NCHLT for context: "
                  + ", ".join(f"{k} {v:g}/s" for k, v in PUBLISHED_THROUGHPUT.items()) + "\n")
    return 0


def cmd_export_lexicon(args) -> int:
    model = load_model(args.model)
    if model.lexicon is None:
        raise InputError(f"{model.variant.value} model has no lexicon")
    with _output(args.out) as out:
        model.lexicon.export(out)
    return 0


COMMANDS = {"train": cmd_train, "classify": cmd_classify, "eval": cmd_eval,
            "matrix": cmd_matrix, "bench": cmd_bench, "export-lexicon": cmd_export_lexicon}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if not args.command:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hierlid {args.command}: {exc}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"hierlid {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
