"""
Main Pipeline Module for the Music Dependency Parser
Orchestrates train → parse → evaluate, and fold-wise cross-validation
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime
from typing import Any, Dict, Optional, Sequence, Tuple

import pandas as pd

from .config import DEFAULT_OUTPUT_DIR, METRIC_NAMES, NONE
from .corpus_io import load_corpus, load_predicted_heads, piece_to_dict, write_corpus_payload
from .decoder import DecodeResult, decode
from .exceptions import LengthMismatchError, MusicParserError
from .features import DurationVocab, Piece, extract_features
from .metrics import corpus_report, evaluate_piece
from .report_exporter import export_report, write_loss_log
from .rendering import event_labels, render_dot
from .scorer import ArcScorer, ModelConfig, predict_scores
from .training import Split, TrainConfig, fit, leave_one_out_splits, random_splits
from .trees import DependencyTree
from .weights import load_checkpoint, save_weights

logger = logging.getLogger(__name__)


def parse_piece(model: ArcScorer, vocab: DurationVocab, piece: Piece, mode: str = 'eisner',
                strict: bool = False) -> DecodeResult:
    """Score and decode one piece"""
    x = extract_features(piece.events, vocab, strict, model.cfg.metrical_templates)
    scores = predict_scores(model, x, piece.rest_mask)
    return decode(piece.events, scores, mode)


def evaluate_predictions(results: Sequence[DecodeResult], gold: Sequence[Piece]) -> pd.DataFrame:
    """Per-piece metrics plus the fraction of valid decoded trees, with a 'mean' row"""
    if len(results) != len(gold):
        raise LengthMismatchError(f"{len(results)} predictions for {len(gold)} gold pieces")
    records = []
    for result, piece in zip(results, gold):
        if piece.tree is None:
            raise MusicParserError(f"gold piece '{piece.title}' has no tree")
        metrics = evaluate_piece(result.heads, piece.tree)
        records.append({'title': piece.title, **metrics.as_dict(), 'valid_trees': float(result.valid)})
    return corpus_report(records)


def _run_fold(args: Tuple[int, Split, TrainConfig, Optional[ModelConfig], str]) -> Dict[str, Any]:
    """One train/test fold; errors are recorded rather than raised"""
    index, split, train_cfg, model_cfg, mode = args
    try:
        trained = fit(split.train, train_cfg, model_cfg)
        results = [parse_piece(trained.model, trained.vocab, p, mode, train_cfg.strict_durations)
                   for p in split.test]
        report = evaluate_predictions(results, split.test)
        records = report[report['title'] != 'mean'].assign(fold=index).to_dict('records')
        return {'fold': index, 'success': True, 'records': records}
    except MusicParserError as e:
        logger.error(f"❌ Fold {index} failed: {e}")
        return {'fold': index, 'success': False, 'error': str(e)}


class ParsingPipeline:
    """
    Complete pipeline for training, parsing and evaluating music dependency parsers
    """

    def __init__(self, output_dir: str = DEFAULT_OUTPUT_DIR):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)
        logger.info(f"Pipeline initialized with output directory: {output_dir}")

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def train(self, corpus_path: str, kind: str, train_cfg: TrainConfig,
              model_cfg: Optional[ModelConfig] = None, weights_name: str = 'model.mdpw',
              excel: bool = False) -> Dict[str, Any]:
        """
        Train on a corpus file and save the weights plus the loss log

        With excel=True the trained model also parses the training corpus
        (Eisner) and a workbook with the fit metrics, the summary and the
        per-epoch losses is written next to the weights.

        Returns:
            Dict with 'success', 'summary' and 'files'
        """
        logger.info("🚀 Starting training")
        corpus = load_corpus(corpus_path, kind)
        trained = fit(corpus, train_cfg, model_cfg)

        stem = os.path.splitext(weights_name)[0]
        weights_path = save_weights(trained.model, self._path(weights_name), trained.vocab, kind)
        log_path = write_loss_log(trained.step_log, self._path(stem + '_loss.jsonl'))
        epoch_log = trained.epoch_log
        final = epoch_log.iloc[-1].to_dict() if not epoch_log.empty else {}
        summary = {
            'pieces': len(corpus),
            'epochs': int(final.get('epoch', 0)),
            'final_loss': float(final.get('total', float('nan'))),
            'duration_vocab_size': len(trained.vocab),
        }
        files = {'weights': weights_path, 'loss_log': log_path}

        if excel:
            results = [parse_piece(trained.model, trained.vocab, p, 'eisner', train_cfg.strict_durations)
                       for p in corpus]
            report = evaluate_predictions(results, corpus)
            exported = export_report(report, self.output_dir, stem + '_train', loss_log=epoch_log,
                                     summary=summary, excel=True)
            files['report'] = exported['csv']
            files['excel'] = exported['excel']

        return {'success': True, 'files': files, 'summary': summary, 'epoch_log': epoch_log}

    def parse(self, weights_path: str, input_path: str, kind: Optional[str] = None, mode: str = 'eisner',
              output_name: str = 'parsed.json', dot: bool = False, strict: bool = False) -> Dict[str, Any]:
        """
        Parse every piece of a sequence file; trees in the input are ignored

        Invalid greedy outputs are written as raw heads.
        """
        checkpoint = load_checkpoint(weights_path)
        kind = kind or checkpoint.kind
        if kind is None or checkpoint.vocab is None:
            raise MusicParserError(f"{weights_path}: weight file carries no corpus kind or duration vocabulary")
        pieces = load_corpus(input_path, kind)
        logger.info(f"📊 Parsing {len(pieces)} pieces with the {mode} decoder")

        parsed, results = [], []
        for piece in pieces:
            result = parse_piece(checkpoint.model, checkpoint.vocab, piece, mode, strict)
            results.append(result)
            tree = DependencyTree(result.heads) if result.valid else None
            parsed.append((replace(piece, tree=tree), result))

        payload = []
        for piece, result in parsed:
            data = piece_to_dict(piece, 'dependency')
            if not result.valid:
                data['heads'] = [None if h == NONE else h for h in result.heads]
            payload.append(data)
        out_path = write_corpus_payload(payload, self._path(output_name))

        files = {'trees': out_path}
        if dot:
            dot_path = self._path(os.path.splitext(output_name)[0] + '.dot')
            with open(dot_path, 'w', encoding='utf-8') as f:
                for piece, result in parsed:
                    if piece.tree is None:
                        continue
                    labels = event_labels(piece.events)
                    f.write(f"// {piece.title}\n")
                    f.write(render_dot(piece.tree, labels))
            files['dot'] = dot_path

        logger.info(f"✅ Parsed trees saved to: {out_path}")
        return {
            'success': True,
            'files': files,
            'results': results,
            'summary': {
                'pieces': len(pieces),
                'valid_trees': sum(r.valid for r in results),
                'decoder': mode,
            },
        }

    def evaluate(self, pred_path: str, gold_path: str, kind: str, report_name: Optional[str] = None,
                 excel: bool = False) -> Dict[str, Any]:
        """
        Compare a predicted corpus file with a gold one

        Predicted head lists that are not trees (greedy output) are scored
        arc by arc and counted in 'valid_trees'.
        """
        predicted = load_predicted_heads(pred_path, kind)
        gold = load_corpus(gold_path, kind)
        if len(predicted) != len(gold):
            raise LengthMismatchError(f"{len(predicted)} predicted pieces for {len(gold)} gold pieces")
        results = [DecodeResult(heads=heads, valid=valid, score=float('nan'))
                   for _, heads, valid in predicted]
        report = evaluate_predictions(results, gold)
        files = export_report(report, self.output_dir, report_name, excel=excel)
        return {'success': True, 'report': report, 'files': files, 'summary': self._summary(report)}

    def cross_validate(self, corpus: Sequence[Piece], train_cfg: TrainConfig,
                       model_cfg: Optional[ModelConfig] = None, mode: str = 'eisner',
                       runs: Optional[int] = None, test_fraction: float = 0.1, workers: int = 1,
                       report_name: Optional[str] = None, excel: bool = False) -> Dict[str, Any]:
        """
        Leave-one-out (runs=None) or repeated random splits; folds run in a
        process pool when workers > 1 and come back ordered by fold index.
        A failed fold is recorded and skipped; the report then covers only the
        folds that ran, summary['partial'] is set and 'success' is False.
        """
        if runs is None:
            splits = leave_one_out_splits(corpus)
            scheme = 'leave-one-out'
        else:
            splits = random_splits(corpus, runs, test_fraction, train_cfg.seed)
            scheme = f'{runs} random splits'
        logger.info(f"🔄 Cross-validating with {scheme} ({len(splits)} folds, {workers} workers)")

        jobs = [(i, split, train_cfg, model_cfg, mode) for i, split in enumerate(splits)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                folds = list(executor.map(_run_fold, jobs))
        else:
            folds = [_run_fold(job) for job in jobs]

        records = [r for fold in folds if fold['success'] for r in fold['records']]
        failed = [{'fold': f['fold'], 'error': f['error']} for f in folds if not f['success']]
        report = corpus_report(records)
        if report_name is None:
            report_name = f"cross_validation_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        summary = self._summary(report)
        summary.update({'scheme': scheme, 'folds': len(folds), 'failed_folds': len(failed),
                        'partial': bool(failed)})
        files = export_report(report, self.output_dir, report_name, summary=summary, excel=excel)

        logger.info(f"🎉 Cross-validation completed: {len(folds) - len(failed)} successful, {len(failed)} failed")
        if failed:
            logger.warning(f"⚠️ Partial report: {len(failed)} of {len(folds)} folds missing")
        return {'success': not failed, 'report': report, 'failed': failed,
                'files': files, 'summary': summary}

    @staticmethod
    def _summary(report: pd.DataFrame) -> Dict[str, Any]:
        if report.empty or 'title' not in report.columns:
            return {}
        mean = report[report['title'] == 'mean']
        if mean.empty:
            return {}
        summary = {m: float(mean[m].iloc[0]) for m in METRIC_NAMES + ['valid_trees'] if m in mean.columns}
        summary['pieces'] = int((report['title'] != 'mean').sum())
        return summary
