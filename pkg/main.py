"""
Main Entry Point for the Music Dependency Parser
Command-line surface: convert, train, parse, eval, render, synth
"""

import argparse
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from src.config import CLI_LOSS_FLAGS, CORPUS_KINDS, DECODER_MODES, DEFAULT_OUTPUT_DIR, METRIC_NAMES
from src.corpus_io import convert_corpus, load_corpus, save_corpus
from src.exceptions import MusicParserError, UsageError
from src.pipeline import ParsingPipeline
from src.rendering import event_labels, render_dot
from src.scorer import ModelConfig
from src.synthetic import make_synthetic_corpus
from src.training import TrainConfig
from src.trees import strip_rests, try_dep_to_constituent

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class CliParser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting, so usage errors map to exit code 1"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(name)s - %(message)s',
        datefmt='[%X]',
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', action='store_true', help='Warnings and errors only')


def _add_kind(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument('--kind', choices=CORPUS_KINDS, required=required,
                        help='Corpus kind: chord sequences or melodies')


def _add_training(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('training')
    group.add_argument('--config', help='JSON file with optional "model" and "train" sections')
    group.add_argument('--loss', choices=sorted(CLI_LOSS_FLAGS), help='Loss terms (default: both)')
    group.add_argument('--seed', type=int, help='Seed for initialization, shuffling and splits')
    group.add_argument('--epochs', type=int, help='Epochs (default: 60 for chords, 20 for melodies)')
    group.add_argument('--lr', type=float, help='Peak learning rate')
    group.add_argument('--weight-decay', type=float, help='AdamW weight decay')
    group.add_argument('--warmup', type=int, help='Linear warmup steps')
    group.add_argument('--batch-size', type=int, help='Pieces per optimizer step')
    group.add_argument('--no-augment', action='store_true', help='Disable transposition augmentation')
    group.add_argument('--strict-durations', action='store_true',
                       help='Fail on durations missing from the vocabulary instead of using the nearest one')
    group.add_argument('--arc-predictor', choices=['mlp', 'bilinear'], help='Arc predictor head')


def build_parser() -> CliParser:
    parser = CliParser(
        prog='main.py',
        description='Music Dependency Parser - parse chord and melody sequences into dependency trees',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('convert', help='Convert corpus trees between dependency and constituent form')
    p.add_argument('input')
    p.add_argument('output')
    _add_kind(p)
    p.add_argument('--to', choices=['dependency', 'constituent'],
                   help='Target representation (default: the other one)')
    _add_common(p)

    p = sub.add_parser('train', help='Train a parser on an annotated corpus')
    p.add_argument('corpus')
    _add_kind(p)
    p.add_argument('--output-dir', default=DEFAULT_OUTPUT_DIR)
    p.add_argument('--weights-name', default='model.mdpw')
    p.add_argument('--excel', action='store_true',
                   help='Also write a workbook with training-set metrics and per-epoch losses')
    _add_training(p)
    _add_common(p)

    p = sub.add_parser('parse', help='Parse a sequence file with trained weights')
    p.add_argument('weights')
    p.add_argument('input')
    _add_kind(p, required=False)
    p.add_argument('--decoder', choices=DECODER_MODES, default='eisner')
    p.add_argument('--output-dir', default=DEFAULT_OUTPUT_DIR)
    p.add_argument('--output-name', default='parsed.json')
    p.add_argument('--dot', action='store_true', help='Also write a DOT rendering of every tree')
    p.add_argument('--strict-durations', action='store_true')
    _add_common(p)

    p = sub.add_parser('eval', help='Score predictions against gold trees, or cross-validate on a corpus')
    p.add_argument('corpora', nargs='+', metavar='CORPUS',
                   help='PRED GOLD, or a single corpus with --loo / --splits')
    _add_kind(p)
    p.add_argument('--loo', action='store_true', help='Leave-one-out cross-validation')
    p.add_argument('--splits', type=int, help='Repeated random train/test splits')
    p.add_argument('--test-fraction', type=float, default=0.1)
    p.add_argument('--workers', type=int, default=1, help='Folds run concurrently in this many processes')
    p.add_argument('--decoder', choices=DECODER_MODES, default='eisner')
    p.add_argument('--output-dir', default=DEFAULT_OUTPUT_DIR)
    p.add_argument('--report-name', help='Base name of the CSV/Excel report')
    p.add_argument('--excel', action='store_true', help='Also write an Excel workbook')
    _add_training(p)
    _add_common(p)

    p = sub.add_parser('render', help='Render the trees of a corpus file as DOT')
    p.add_argument('input')
    _add_kind(p)
    p.add_argument('--format', choices=['dependency', 'constituent'], default='dependency')
    p.add_argument('--output', help='DOT file (default: stdout)')
    _add_common(p)

    p = sub.add_parser('synth', help='Write a synthetic chord corpus')
    p.add_argument('output')
    p.add_argument('--pieces', type=int, default=20)
    p.add_argument('--min-len', type=int, default=8)
    p.add_argument('--max-len', type=int, default=16)
    p.add_argument('--seed', type=int, default=0)
    _add_common(p)
    return parser


def build_configs(args: argparse.Namespace) -> Tuple[ModelConfig, TrainConfig]:
    """Defaults, then the --config file, then explicit flags"""
    model: Dict[str, Any] = {}
    train: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"--config {args.config}: {e}") from e
        if not isinstance(data, dict) or set(data) - {'model', 'train'}:
            raise UsageError(f"--config {args.config}: expected an object with 'model' and/or 'train'")
        model.update(data.get('model', {}))
        train.update(data.get('train', {}))

    flags = {
        'loss_mode': CLI_LOSS_FLAGS[args.loss] if args.loss else None,
        'seed': args.seed,
        'epochs': args.epochs,
        'learning_rate': args.lr,
        'weight_decay': args.weight_decay,
        'warmup_steps': args.warmup,
        'batch_size': args.batch_size,
    }
    train.update({k: v for k, v in flags.items() if v is not None})
    if args.no_augment:
        train['augment'] = False
    if args.strict_durations:
        train['strict_durations'] = True
    if args.arc_predictor:
        model['arc_predictor'] = args.arc_predictor

    try:
        return ModelConfig(**model), TrainConfig(**train)
    except ValidationError as e:
        first = e.errors()[0]
        field = '.'.join(str(part) for part in first['loc'])
        raise UsageError(f"invalid setting '{field}': {first['msg']}") from e


def print_report(report, title: str) -> None:
    table = Table(title=title)
    table.add_column('Piece')
    columns = [c for c in METRIC_NAMES + ['valid_trees'] if c in report.columns]
    for column in columns:
        table.add_column(column.replace('_', ' '), justify='right')
    for _, row in report.iterrows():
        cells = ['n/a' if isinstance(row[c], float) and math.isnan(row[c]) else f"{row[c]:.3f}" for c in columns]
        table.add_row(str(row['title']), *cells, style='bold' if row['title'] == 'mean' else None)
    console.print(table)


def cmd_convert(args) -> int:
    path = convert_corpus(args.input, args.output, args.kind, args.to)
    console.print(f"✅ Converted corpus written to {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    model_cfg, train_cfg = build_configs(args)
    results = ParsingPipeline(args.output_dir).train(args.corpus, args.kind, train_cfg, model_cfg,
                                                     args.weights_name, args.excel)
    summary = results['summary']
    console.print(f"\n✅ Training finished: {summary['pieces']} pieces, {summary['epochs']} epochs, "
                  f"final loss {summary['final_loss']:.4f}")
    console.print(f"📁 Weights: {results['files']['weights']}")
    console.print(f"📈 Loss log: {results['files']['loss_log']}")
    if 'excel' in results['files']:
        console.print(f"📊 Excel report: {results['files']['excel']}")
    return EXIT_OK


def cmd_parse(args) -> int:
    results = ParsingPipeline(args.output_dir).parse(
        args.weights, args.input, args.kind, args.decoder, args.output_name, args.dot, args.strict_durations
    )
    summary = results['summary']
    console.print(f"✅ Parsed {summary['pieces']} pieces ({summary['valid_trees']} valid trees)")
    for name, path in results['files'].items():
        console.print(f"📁 {name}: {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pipeline = ParsingPipeline(args.output_dir)
    cross = args.loo or args.splits is not None
    if args.loo and args.splits is not None:
        raise UsageError("--loo and --splits are mutually exclusive")
    if cross:
        if len(args.corpora) != 1:
            raise UsageError("cross-validation takes exactly one corpus")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        model_cfg, train_cfg = build_configs(args)
        corpus = load_corpus(args.corpora[0], args.kind)
        results = pipeline.cross_validate(corpus, train_cfg, model_cfg, args.decoder, args.splits,
                                          args.test_fraction, args.workers, args.report_name, args.excel)
        for failure in results['failed']:
            logger.warning(f"Fold {failure['fold']} failed: {failure['error']}")
        title = 'Leave-one-out' if args.loo else f'{args.splits} random splits'
    else:
        if len(args.corpora) != 2:
            raise UsageError("eval takes PRED GOLD (or one corpus with --loo / --splits)")
        results = pipeline.evaluate(args.corpora[0], args.corpora[1], args.kind, args.report_name, args.excel)
        title = 'Evaluation'

    print_report(results['report'], title)
    for name, path in results['files'].items():
        console.print(f"📁 {name}: {path}")
    return EXIT_OK if results['success'] else EXIT_DATA


def cmd_render(args) -> int:
    pieces = load_corpus(args.input, args.kind)
    chunks: List[str] = []
    for piece in pieces:
        if piece.tree is None:
            logger.warning(f"'{piece.title}' has no tree; skipped")
            continue
        labels = event_labels(piece.events)
        if args.format == 'constituent':
            constituent = try_dep_to_constituent(piece.tree)
            if constituent is None:
                logger.warning(f"'{piece.title}' has no constituent form; skipped")
                continue
            _, kept = strip_rests(piece.tree)
            chunks.append(f"// {piece.title}\n" + render_dot(constituent, [labels[i] for i in kept]))
        else:
            chunks.append(f"// {piece.title}\n" + render_dot(piece.tree, labels))

    text = ''.join(chunks)
    if args.output:
        with open(args.output, 'w', encoding='utf-8') as f:
            f.write(text)
        console.print(f"✅ {len(chunks)} trees rendered to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    pieces = make_synthetic_corpus(args.pieces, args.min_len, args.max_len, args.seed)
    path = save_corpus(pieces, args.output, tree_format='constituent')
    console.print(f"✅ {len(pieces)} synthetic pieces written to {path}")
    return EXIT_OK


COMMANDS = {
    'convert': cmd_convert,
    'train': cmd_train,
    'parse': cmd_parse,
    'eval': cmd_eval,
    'render': cmd_render,
    'synth': cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on usage errors, 2 on data errors"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        console.print(f"❌ {e}", style='red')
        return EXIT_USAGE

    setup_logging(args.verbose, args.quiet)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except (MusicParserError, ValueError, OSError) as e:
        logger.error(f"❌ {e}")
        return EXIT_DATA
    except KeyboardInterrupt:
        logger.error("⏹️ Interrupted by user")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
