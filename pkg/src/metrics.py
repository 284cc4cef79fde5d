"""
Metrics Module for the Music Dependency Parser
Head, arc, span and node accuracy between predicted and gold trees; rest
positions never count
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import pandas as pd

from .config import METRIC_NAMES, NONE, ROOT
from .exceptions import InvalidTreeError, LengthMismatchError
from .trees import (
    ConstituentTree,
    DependencyTree,
    constituent_spans,
    iter_leaves,
    try_dep_to_constituent,
)

logger = logging.getLogger(__name__)

DUMMY = 'DUMMY'


def _heads(t: Union[DependencyTree, Sequence[int]]) -> Tuple[int, ...]:
    return t.heads if isinstance(t, DependencyTree) else tuple(int(h) for h in t)


def _check_lengths(pred: Sequence[int], gold: Sequence[int]) -> None:
    if len(pred) != len(gold):
        raise LengthMismatchError(f"predicted length {len(pred)} != gold length {len(gold)}")


def head_accuracy(pred, gold) -> float:
    """Fraction of non-rest positions whose head entries agree (ROOT is a class)"""
    pred, gold = _heads(pred), _heads(gold)
    _check_lengths(pred, gold)
    positions = [i for i, h in enumerate(gold) if h != NONE]
    if not positions:
        return 1.0
    return sum(pred[i] == gold[i] for i in positions) / len(positions)


def _arcs(heads: Sequence[int]) -> set:
    return {(d, h) for d, h in enumerate(heads) if h >= 0}


def arc_accuracy(pred, gold) -> float:
    """|pred arcs ∩ gold arcs| / |gold arcs|, directed"""
    pred, gold = _heads(pred), _heads(gold)
    _check_lengths(pred, gold)
    gold_arcs = _arcs(gold)
    pred_arcs = _arcs(pred)
    if not gold_arcs:
        return 1.0 if not pred_arcs else 0.0
    return len(pred_arcs & gold_arcs) / len(gold_arcs)


def span_accuracy(pred: ConstituentTree, gold: ConstituentTree) -> float:
    pred_leaves, gold_leaves = len(iter_leaves(pred)), len(iter_leaves(gold))
    if pred_leaves != gold_leaves:
        raise LengthMismatchError(f"predicted tree has {pred_leaves} leaves, gold has {gold_leaves}")
    gold_spans = constituent_spans(gold)
    if not gold_spans:
        return 1.0
    return len(constituent_spans(pred) & gold_spans) / len(gold_spans)


def _signatures(heads: Sequence[int]) -> Dict[int, tuple]:
    children: Dict[int, List[int]] = {i: [] for i, h in enumerate(heads) if h != NONE}
    for d, h in enumerate(heads):
        if h >= 0 and h in children:
            children[h].append(d)
    return {
        i: (DUMMY if heads[i] == ROOT else heads[i],
            tuple(sorted(children[i])) if children[i] else DUMMY)
        for i in children
    }


def node_accuracy(pred, gold) -> float:
    """Fraction of non-rest elements whose (parent, children) signature agrees"""
    pred, gold = _heads(pred), _heads(gold)
    _check_lengths(pred, gold)
    gold_sig = _signatures(gold)
    if not gold_sig:
        return 1.0
    pred_sig = _signatures(pred)
    return sum(pred_sig.get(i) == sig for i, sig in gold_sig.items()) / len(gold_sig)


@dataclass(frozen=True)
class MetricReport:
    head_accuracy: float
    arc_accuracy: float
    span_accuracy: float
    node_accuracy: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def evaluate_piece(pred, gold: DependencyTree) -> MetricReport:
    """
    All four metrics for one piece. Span accuracy needs both trees as
    constituent trees; it is NaN when the prediction cannot be converted
    (double-sided, non-projective or not a tree).
    """
    pred_heads = _heads(pred)
    span = float('nan')
    gold_c = try_dep_to_constituent(gold)
    pred_c = None
    if gold_c is not None:
        try:
            pred_tree = pred if isinstance(pred, DependencyTree) else DependencyTree(pred_heads)
            pred_c = try_dep_to_constituent(pred_tree)
        except InvalidTreeError as e:
            logger.debug(f"Prediction is not a tree: {e}")
    if gold_c is not None and pred_c is not None:
        span = span_accuracy(pred_c, gold_c)
    elif gold_c is not None:
        logger.warning("Predicted tree has no constituent form; span accuracy left empty")

    return MetricReport(
        head_accuracy=head_accuracy(pred_heads, gold),
        arc_accuracy=arc_accuracy(pred_heads, gold),
        span_accuracy=span,
        node_accuracy=node_accuracy(pred_heads, gold),
    )


def corpus_report(records: Iterable[Dict]) -> pd.DataFrame:
    """
    Per-piece metric table with a final 'mean' row (unweighted mean over pieces)

    Args:
        records: dicts holding at least 'title' and the metric names
    """
    frame = pd.DataFrame(list(records))
    if frame.empty:
        return pd.DataFrame(columns=['title'] + METRIC_NAMES)
    numeric = [c for c in METRIC_NAMES + ['valid_trees'] if c in frame.columns]
    mean_row = frame[numeric].mean(numeric_only=True).to_dict()
    mean_row['title'] = 'mean'
    return pd.concat([frame, pd.DataFrame([mean_row])], ignore_index=True)
