"""Command-line entry point: ``stats``, ``featurize``, ``train``, ``predict``, ``evaluate``.

Exit codes: 0 ok, 1 usage/config, 2 data, 3 embedding backend, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .corpus import Split, compute_stats, format_stats, load_dataset, write_atomic
from .errors import ConfigError, PipelineError
from .evaluation import evaluate_cascade, render_report
from .model import CascadeModel, file_checksum, load_model, save_model
from .pipeline import (
    align,
    featurize_dataset,
    load_predictions,
    load_split,
    open_featurizer,
    predict_dataset,
    predictions_to_tsv,
    train_from_dataset,
)

log = logging.getLogger("abusecascade")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def cmd_stats(args) -> int:
    cfg = load_config(args.config)
    columns = []
    for name, path, split in (("Train", cfg.train, Split.TRAIN), ("Test", cfg.test, Split.TEST)):
        if path is not None:
            columns.append((name, compute_stats(load_dataset(path, cfg.language, split))))
    if not columns:
        raise ConfigError("config lists no data files")
    sys.stdout.write(format_stats(columns))
    return 0


def cmd_featurize(args) -> int:
    cfg = load_config(args.config)
    paths = [Path(p) for p in args.inputs] or [p for p in (cfg.train, cfg.test) if p]
    with open_featurizer(cfg) as featurizer:
        if featurizer.cache is None:
            raise ConfigError("featurize needs a cache path in the config")
        for path in paths:
            ds = load_dataset(path, cfg.language, Split.TRAIN)
            featurize_dataset(ds, featurizer, cfg.preprocessing)
            print(f"{path}: {len(ds)} rows cached")
        featurizer.cache.flush()
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    with open_featurizer(cfg) as featurizer:
        ds = load_split(cfg.train, cfg, Split.TRAIN)
        cascade, summary = train_from_dataset(ds, featurizer, cfg)
    save_model(cascade, cfg.model)
    for line in summary:
        print(line)
    print(f"model written to {cfg.model}")
    return 0


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    cascade = load_model(cfg.model)
    if not isinstance(cascade, CascadeModel):
        raise PipelineError(f"{cfg.model}: expected a cascade model")
    if cascade.language is not cfg.language:
        raise PipelineError(f"{cfg.model}: model language {cascade.language.value} != {cfg.language.value}")
    ds = load_dataset(args.input, cfg.language, Split.TEST)
    with open_featurizer(cfg) as featurizer:
        labels = predict_dataset(cascade, ds, featurizer, cfg.preprocessing)
    write_atomic(args.output, predictions_to_tsv([p.id for p in ds.posts], labels, cfg.language))
    print(f"{len(labels)} predictions written to {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    gold = load_dataset(args.gold, cfg.language, Split.TEST)
    pred = load_predictions(args.pred, cfg.language)
    gold_labels, pred_labels = align(gold, pred)
    reports = evaluate_cascade(gold_labels, pred_labels, cfg.language)
    checksums = {}
    if cfg.model.exists():
        checksums[cfg.model.name] = file_checksum(cfg.model)
    table = render_report(reports, "text-table", cfg.rounding)
    out_dir = Path(args.out_dir) if args.out_dir else (cfg.reports or Path(args.pred).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"report_{cfg.language.value}"
    write_atomic(out_dir / f"{stem}.txt", table)
    write_atomic(out_dir / f"{stem}.json", render_report(reports, "machine-readable", model_checksums=checksums))
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="abusecascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="pipeline config file (YAML/JSON)")
        p.set_defaults(func=func)
        return p

    add("stats", cmd_stats, "per-class counts of the configured train/test files")
    p = add("featurize", cmd_featurize, "embed data files into the feature cache")
    p.add_argument("inputs", nargs="*", help="data files (default: configured train/test)")
    add("train", cmd_train, "train the task cascade and write the model file")
    p = add("predict", cmd_predict, "write a prediction TSV for an input file")
    p.add_argument("input")
    p.add_argument("output")
    p = add("evaluate", cmd_evaluate, "score a prediction TSV against a gold file")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--out-dir", help="where report files go (default: config 'reports' or next to pred)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
