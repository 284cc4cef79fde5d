"""
Training Module for the Music Dependency Parser
Losses over the arc score matrix, transposition augmentation, train/test
splits and the AdamW optimization loop with warmup and cosine annealing
"""

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field

from .config import (
    CHORD_TRANSPOSITIONS,
    DEFAULT_EPOCHS,
    LOSS_MODES,
    MELODY_TRANSPOSITIONS,
    NONE,
    ROOT,
    TRAIN_DEFAULTS,
)
from .exceptions import DivergenceError
from .features import (
    DurationVocab,
    EventSequence,
    Piece,
    build_duration_vocab,
    extract_features,
    feature_vocab_sizes,
    transpose_events,
    transposition_fits,
)
from .scorer import ArcScorer, ModelConfig, init_params, potential_arc_mask
from .trees import DependencyTree

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(TRAIN_DEFAULTS['learning_rate'], gt=0)
    weight_decay: float = Field(TRAIN_DEFAULTS['weight_decay'], ge=0)
    warmup_steps: int = Field(TRAIN_DEFAULTS['warmup_steps'], ge=0)
    schedule: Literal['cosine'] = 'cosine'
    # None picks the dataset default (60 for chords, 20 for melodies)
    epochs: Optional[int] = Field(None, gt=0)
    seed: int = TRAIN_DEFAULTS['seed']
    loss_mode: Literal['both', 'bce_only', 'ce_only'] = TRAIN_DEFAULTS['loss_mode']
    batch_size: int = Field(TRAIN_DEFAULTS['batch_size'], gt=0)
    augment: bool = True
    strict_durations: bool = False


@dataclass(frozen=True)
class GoldArcs:
    """Gold arc indicators (λ, λ+1) and gold head column per row (rests point to the dummy)"""

    indicator: torch.Tensor
    head_columns: torch.Tensor


def gold_arcs(tree: DependencyTree) -> GoldArcs:
    columns = [0 if h in (ROOT, NONE) else h + 1 for h in tree.heads]
    head_columns = torch.tensor(columns, dtype=torch.long)
    indicator = torch.zeros(tree.seq_len, tree.seq_len + 1, dtype=torch.bool)
    indicator[torch.arange(tree.seq_len), head_columns] = True
    return GoldArcs(indicator=indicator, head_columns=head_columns)


def bce_loss(s: torch.Tensor, g: GoldArcs) -> torch.Tensor:
    """Mean binary cross-entropy over the potential (finite) arcs"""
    potential = torch.isfinite(s)
    targets = g.indicator.to(s.device)[potential].to(s.dtype)
    return F.binary_cross_entropy_with_logits(s[potential], targets)


def ce_loss(s: torch.Tensor, g: GoldArcs) -> torch.Tensor:
    """Mean over rows of -log softmax(row)[gold column]"""
    return F.cross_entropy(s, g.head_columns.to(s.device))


def total_loss(s: torch.Tensor, g: GoldArcs, mode: str = 'both') -> torch.Tensor:
    if mode == 'bce_only':
        return bce_loss(s, g)
    if mode == 'ce_only':
        return ce_loss(s, g)
    if mode != 'both':
        raise ValueError(f"unknown loss mode {mode!r}; expected one of {LOSS_MODES}")
    return bce_loss(s, g) + ce_loss(s, g)


def augment_transpositions(seq: EventSequence, tree: DependencyTree,
                           kind: str) -> List[Tuple[Tuple, DependencyTree]]:
    """
    All transposed copies of a sequence with the tree unchanged: 25 shifts in
    [-12, 12] for melodies (shifts leaving the MIDI range are dropped), 12 root
    shifts for chords. The k=0 copy comes first.
    """
    shifts = MELODY_TRANSPOSITIONS if kind == 'melody' else CHORD_TRANSPOSITIONS
    ordered = sorted(shifts, key=lambda k: (k != 0, abs(k), k))
    copies = []
    for k in ordered:
        if not transposition_fits(seq, k):
            logger.debug(f"Dropping transposition {k:+d}: pitches leave the MIDI range")
            continue
        copies.append((transpose_events(seq, k), tree))
    return copies


def augment_piece(piece: Piece) -> List[Piece]:
    pieces = []
    for events, tree in augment_transpositions(piece.events, piece.tree, piece.kind):
        pieces.append(Piece(title=piece.title, events=events, tree=tree,
                            time_signature=piece.time_signature))
    return pieces


def lr_factor(step: int, warmup_steps: int, total_steps: int) -> float:
    """Linear warmup to 1, then cosine decay to 0 at total_steps"""
    if warmup_steps and step < warmup_steps:
        return step / warmup_steps
    remaining = max(1, total_steps - warmup_steps)
    progress = min(1.0, max(0.0, (step - warmup_steps) / remaining))
    return 0.5 * (1.0 + math.cos(math.pi * progress))


@dataclass
class Example:
    features: torch.Tensor
    mask: torch.Tensor
    gold: GoldArcs


def prepare_example(piece: Piece, vocab: DurationVocab, strict: bool = False,
                    templates: Optional[Mapping[int, Sequence[int]]] = None) -> Example:
    x = torch.as_tensor(extract_features(piece.events, vocab, strict, templates), dtype=torch.long)
    return Example(features=x, mask=potential_arc_mask(piece.rest_mask), gold=gold_arcs(piece.tree))


@dataclass
class TrainingResult:
    model: ArcScorer
    vocab: DurationVocab
    kind: str
    step_log: List[Dict[str, float]] = field(default_factory=list)

    @property
    def epoch_log(self) -> pd.DataFrame:
        """Mean losses and final learning rate per epoch"""
        frame = pd.DataFrame(self.step_log)
        if frame.empty:
            return frame
        return frame.groupby('epoch').agg(
            bce=('bce', 'mean'), ce=('ce', 'mean'), total=('total', 'mean'), lr=('lr', 'last'),
        ).reset_index()


def _corpus_kind(corpus: Sequence[Piece]) -> str:
    kinds = {piece.kind for piece in corpus}
    if len(kinds) != 1:
        raise ValueError(f"corpus mixes piece kinds: {sorted(kinds)}")
    return kinds.pop()


def fit(corpus: Sequence[Piece], cfg: TrainConfig,
        model_cfg: Optional[ModelConfig] = None) -> TrainingResult:
    """
    Train an arc scorer on annotated pieces

    The duration vocabulary comes from the given (training) pieces only;
    augmentation is applied here when cfg.augment is set.

    Raises:
        DivergenceError: the loss stops being finite
    """
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    missing = [p.title for p in corpus if p.tree is None]
    if missing:
        raise ValueError(f"pieces without a tree cannot be used for training: {missing[:5]}")

    kind = _corpus_kind(corpus)
    vocab = build_duration_vocab(p.events for p in corpus)
    sizes = feature_vocab_sizes(kind, vocab)
    model_cfg = ModelConfig(**{**(model_cfg or ModelConfig()).model_dump(), 'vocab_sizes': sizes})

    pieces = [copy for p in corpus for copy in augment_piece(p)] if cfg.augment else list(corpus)
    examples = [prepare_example(p, vocab, cfg.strict_durations, model_cfg.metrical_templates) for p in pieces]
    epochs = cfg.epochs or DEFAULT_EPOCHS[kind]
    steps_per_epoch = math.ceil(len(examples) / cfg.batch_size)
    total_steps = epochs * steps_per_epoch
    logger.info(f"📊 Training on {len(corpus)} pieces ({len(examples)} after augmentation), "
                f"{epochs} epochs, {total_steps} optimizer steps")

    model = init_params(model_cfg, cfg.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate,
                                  weight_decay=cfg.weight_decay)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda i: lr_factor(i + 1, cfg.warmup_steps, total_steps)
    )
    order_rng = random.Random(cfg.seed)
    result = TrainingResult(model=model, vocab=vocab, kind=kind)

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        model.train()
        step = 0
        for epoch in range(1, epochs + 1):
            order = list(range(len(examples)))
            order_rng.shuffle(order)
            for start in range(0, len(order), cfg.batch_size):
                batch = [examples[i] for i in order[start:start + cfg.batch_size]]
                optimizer.zero_grad()
                terms = {'bce': 0.0, 'ce': 0.0, 'total': 0.0}
                for example in batch:
                    scores = model(example.features, example.mask)
                    loss = total_loss(scores, example.gold, cfg.loss_mode)
                    if not torch.isfinite(loss):
                        raise DivergenceError(f"non-finite loss at epoch {epoch}, step {step + 1}")
                    (loss / len(batch)).backward()
                    # both terms are logged whichever one is optimized
                    with torch.no_grad():
                        terms['bce'] += bce_loss(scores, example.gold).item() / len(batch)
                        terms['ce'] += ce_loss(scores, example.gold).item() / len(batch)
                    terms['total'] += loss.item() / len(batch)
                lr = optimizer.param_groups[0]['lr']
                optimizer.step()
                scheduler.step()
                step += 1
                result.step_log.append({'epoch': epoch, 'step': step, 'lr': lr, **terms})
                logger.debug(f"epoch {epoch} step {step}: lr={lr:.2e} total={terms['total']:.4f}")

            epoch_losses = [r['total'] for r in result.step_log if r['epoch'] == epoch]
            logger.info(f"Epoch {epoch}/{epochs}: loss={np.mean(epoch_losses):.4f} "
                        f"lr={optimizer.param_groups[0]['lr']:.2e}")

    model.eval()
    logger.info("✅ Training finished")
    return result


@dataclass
class Split:
    train: List[Piece]
    test: List[Piece]
    test_indices: List[int]

    def augmented_train(self) -> List[Piece]:
        return [copy for p in self.train for copy in augment_piece(p)]


def leave_one_out_splits(corpus: Sequence[Piece]) -> List[Split]:
    """N splits, each holding out one piece; augmentation belongs to the train side only"""
    if len(corpus) < 2:
        raise ValueError("leave-one-out needs at least two pieces")
    return [
        Split(train=[p for j, p in enumerate(corpus) if j != i], test=[corpus[i]], test_indices=[i])
        for i in range(len(corpus))
    ]


def random_splits(corpus: Sequence[Piece], runs: int = 10, test_fraction: float = 0.1,
                  seed: int = 0) -> List[Split]:
    """Repeated random train/test splits (90/10 by default)"""
    if len(corpus) < 2:
        raise ValueError("random splits need at least two pieces")
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = random.Random(seed)
    n_test = min(len(corpus) - 1, max(1, round(len(corpus) * test_fraction)))
    splits = []
    for _ in range(runs):
        held_out = sorted(rng.sample(range(len(corpus)), n_test))
        held = set(held_out)
        splits.append(Split(train=[p for j, p in enumerate(corpus) if j not in held],
                            test=[corpus[j] for j in held_out], test_indices=held_out))
    return splits
