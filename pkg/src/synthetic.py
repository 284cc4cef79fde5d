"""
Synthetic Corpus Module for the Music Dependency Parser
Random 4/4 chord sequences whose trees follow a fixed metrical attachment rule
"""

import logging
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .config import CHORD_EXTENSIONS, CHORD_FORMS, ROOT, SYNTHETIC_DURATIONS
from .features import ChordEvent, Piece, inverse_metrical_strength
from .trees import DependencyTree

logger = logging.getLogger(__name__)

SYNTHETIC_NUMERATOR = 4


def metrical_attachment(strengths: Sequence[int]) -> DependencyTree:
    """
    Each element attaches to the next element that is metrically stronger
    (lower inverse strength); elements with none attach to the last element,
    which is the root. The result is projective and single-sided.
    """
    n = len(strengths)
    heads = []
    for i in range(n - 1):
        head = next((j for j in range(i + 1, n) if strengths[j] < strengths[i]), n - 1)
        heads.append(head)
    heads.append(ROOT)
    return DependencyTree(tuple(heads))


def make_synthetic_piece(rng: np.random.Generator, length: int, title: str) -> Piece:
    events = []
    onset = Fraction(0)
    for _ in range(length):
        duration = SYNTHETIC_DURATIONS[int(rng.integers(len(SYNTHETIC_DURATIONS)))]
        position = onset - int(onset)
        events.append(ChordEvent(
            root_pc=int(rng.integers(12)),
            form=int(rng.integers(len(CHORD_FORMS))),
            extension=int(rng.integers(len(CHORD_EXTENSIONS))),
            duration_measures=duration,
            bar_position=position,
            ts_numerator=SYNTHETIC_NUMERATOR,
        ))
        onset += duration
    strengths = [inverse_metrical_strength(e.bar_position, SYNTHETIC_NUMERATOR) for e in events]
    return Piece(title=title, events=tuple(events), tree=metrical_attachment(strengths),
                 time_signature=(SYNTHETIC_NUMERATOR, 4))


def make_synthetic_corpus(n: int = 20, min_len: int = 8, max_len: int = 16, seed: int = 0) -> List[Piece]:
    if n <= 0 or min_len <= 0 or max_len < min_len:
        raise ValueError(f"bad synthetic corpus size: n={n}, lengths [{min_len}, {max_len}]")
    rng = np.random.default_rng(seed)
    pieces = [
        make_synthetic_piece(rng, int(rng.integers(min_len, max_len + 1)), f"synthetic-{i:03d}")
        for i in range(n)
    ]
    logger.info(f"🎲 Generated {n} synthetic pieces (lengths {min_len}-{max_len}, seed {seed})")
    return pieces
