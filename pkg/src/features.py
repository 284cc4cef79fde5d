"""
Feature Extraction Module for the Music Dependency Parser
Turns note and chord event sequences into integer feature matrices
(static description, duration index, inverse metrical strength)
"""

import bisect
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import (
    ACCIDENTALS,
    CHORD_EXTENSIONS,
    CHORD_FORMS,
    EXTENSION_SYMBOLS,
    EXTENSION_TOKENS,
    FORM_SYMBOLS,
    FORM_TOKENS,
    METRICAL_TEMPLATES,
    MIDI_PITCH_RANGE,
    OFF_GRID_STRENGTH,
    PITCH_CLASSES,
    REST_PITCH_CODE,
    ROOT_SYMBOLS,
)
from .exceptions import ChordParseError, UnknownDurationError, UnknownNumeratorError
from .trees import DependencyTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoteEvent:
    """A melody element; pitch None marks a rest"""

    pitch: Optional[int]
    duration_measures: Fraction
    bar_position: Fraction
    ts_numerator: int

    @property
    def is_rest(self) -> bool:
        return self.pitch is None


@dataclass(frozen=True)
class ChordEvent:
    root_pc: int
    form: int
    extension: int
    duration_measures: Fraction
    bar_position: Fraction
    ts_numerator: int

    @property
    def is_rest(self) -> bool:
        return False

    @property
    def symbol(self) -> str:
        return format_chord_symbol(self.root_pc, self.form, self.extension)


Event = Union[NoteEvent, ChordEvent]
EventSequence = Sequence[Event]


@dataclass(frozen=True)
class Piece:
    """One corpus entry: an event sequence and (when annotated) its dependency tree"""

    title: str
    events: Tuple[Event, ...]
    tree: Optional[DependencyTree]
    time_signature: Tuple[int, int]

    @property
    def kind(self) -> str:
        return sequence_kind(self.events)

    @property
    def rest_mask(self) -> Tuple[bool, ...]:
        return tuple(e.is_rest for e in self.events)


def sequence_kind(seq: EventSequence) -> str:
    if not seq:
        raise ValueError("empty event sequence")
    if all(isinstance(e, ChordEvent) for e in seq):
        return 'chords'
    if all(isinstance(e, NoteEvent) for e in seq):
        return 'melody'
    raise ValueError("event sequence mixes notes and chords")


def encode_note_static(e: NoteEvent) -> int:
    """MIDI pitch, or 128 for a rest"""
    return REST_PITCH_CODE if e.is_rest else int(e.pitch)


def parse_chord_symbol(s: str) -> Tuple[int, int, int]:
    """
    Decode a chord symbol of the form <root><form><extension>

    Examples: "C6" -> (0, 0, 0), "Dm7" -> (2, 1, 1), "G^7" -> (7, 0, 2)

    Raises:
        ChordParseError: naming the substring that could not be read
    """
    if not s or s[0] not in PITCH_CLASSES:
        raise ChordParseError(f"chord {s!r}: bad root {s[:1]!r}")
    root = PITCH_CLASSES[s[0]]
    pos = 1
    if pos < len(s) and s[pos] in ACCIDENTALS:
        root = (root + ACCIDENTALS[s[pos]]) % 12
        pos += 1

    form = 0
    for token, value in FORM_TOKENS:
        if s.startswith(token, pos):
            form = value
            pos += len(token)
            break

    tail = s[pos:]
    if tail not in EXTENSION_TOKENS:
        raise ChordParseError(f"chord {s!r}: unknown extension {tail!r}")
    return root, form, EXTENSION_TOKENS[tail]


def format_chord_symbol(root_pc: int, form: int, extension: int) -> str:
    return f"{ROOT_SYMBOLS[root_pc % 12]}{FORM_SYMBOLS[form]}{EXTENSION_SYMBOLS[extension]}"


def metrical_template(numerator: int,
                      templates: Optional[Mapping[int, Sequence[int]]] = None) -> Tuple[int, ...]:
    """Division vector m for a time-signature numerator"""
    table = METRICAL_TEMPLATES if templates is None else templates
    if numerator not in table:
        raise UnknownNumeratorError(
            f"no metrical template for numerator {numerator} (known: {sorted(table)})"
        )
    return tuple(table[numerator])


def grid_steps(numerator: int,
               templates: Optional[Mapping[int, Sequence[int]]] = None) -> List[Fraction]:
    """Grid step per level: 1 / (m_0 * ... * m_l)"""
    steps = []
    product = 1
    for division in metrical_template(numerator, templates):
        product *= division
        steps.append(Fraction(1, product))
    return steps


def inverse_metrical_strength(t: Fraction, numerator: int,
                              templates: Optional[Mapping[int, Sequence[int]]] = None) -> int:
    """Lowest grid level containing onset t; OFF_GRID_STRENGTH when no grid does"""
    t = Fraction(t)
    for level, step in enumerate(grid_steps(numerator, templates)):
        if (t / step).denominator == 1:
            return level
    return OFF_GRID_STRENGTH


class DurationVocab:
    """Ascending list of the distinct durations seen in a training corpus"""

    def __init__(self, durations: Iterable[Fraction]):
        self.entries: Tuple[Fraction, ...] = tuple(sorted({Fraction(d) for d in durations}))
        self._lookup: Dict[Fraction, int] = {d: i for i, d in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, DurationVocab) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"DurationVocab({[str(d) for d in self.entries]})"

    def index(self, duration: Fraction, strict: bool = False) -> int:
        """
        Index of a duration; unseen durations map to the nearest entry
        (ties toward the shorter) unless strict
        """
        duration = Fraction(duration)
        if duration in self._lookup:
            return self._lookup[duration]
        if strict or not self.entries:
            raise UnknownDurationError(f"duration {duration} not in vocabulary {self}")

        pos = bisect.bisect_left(self.entries, duration)
        if pos == 0:
            nearest = 0
        elif pos == len(self.entries):
            nearest = len(self.entries) - 1
        else:
            below, above = self.entries[pos - 1], self.entries[pos]
            nearest = pos if above - duration < duration - below else pos - 1
        logger.warning(f"Unseen duration {duration} mapped to {self.entries[nearest]}")
        return nearest

    def to_pairs(self) -> List[List[int]]:
        return [[d.numerator, d.denominator] for d in self.entries]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> 'DurationVocab':
        return cls(Fraction(p, q) for p, q in pairs)


def build_duration_vocab(corpus: Iterable[EventSequence]) -> DurationVocab:
    sequences = list(corpus)
    if not sequences:
        raise ValueError("cannot build a duration vocabulary from an empty corpus")
    return DurationVocab(e.duration_measures for seq in sequences for e in seq)


def feature_vocab_sizes(kind: str, vocab: DurationVocab) -> List[int]:
    """Number of distinct values per feature column"""
    strength_size = OFF_GRID_STRENGTH + 1
    if kind == 'melody':
        return [REST_PITCH_CODE + 1, len(vocab), strength_size]
    return [12, len(CHORD_FORMS), len(CHORD_EXTENSIONS), len(vocab), strength_size]


def extract_features(seq: EventSequence, vocab: DurationVocab, strict: bool = False,
                     templates: Optional[Mapping[int, Sequence[int]]] = None) -> np.ndarray:
    """
    Build the integer feature matrix of a sequence

    Returns:
        np.ndarray of shape (len(seq), 3) for melodies or (len(seq), 5) for chords
    """
    kind = sequence_kind(seq)
    rows = []
    for e in seq:
        timing = [
            vocab.index(e.duration_measures, strict=strict),
            inverse_metrical_strength(e.bar_position, e.ts_numerator, templates),
        ]
        if kind == 'melody':
            rows.append([encode_note_static(e)] + timing)
        else:
            rows.append([e.root_pc, e.form, e.extension] + timing)
    return np.asarray(rows, dtype=np.int64)


def transposition_fits(seq: EventSequence, k: int) -> bool:
    low, high = MIDI_PITCH_RANGE
    return all(e.is_rest or low <= e.pitch + k <= high
               for e in seq if isinstance(e, NoteEvent))


def transpose_events(seq: EventSequence, k: int) -> Tuple[Event, ...]:
    """Shift pitches by k semitones (chord roots modulo 12); timing is untouched"""
    if not transposition_fits(seq, k):
        raise ValueError(f"transposition by {k} leaves the MIDI pitch range")
    shifted = []
    for e in seq:
        if isinstance(e, ChordEvent):
            shifted.append(replace(e, root_pc=(e.root_pc + k) % 12))
        elif e.is_rest:
            shifted.append(e)
        else:
            shifted.append(replace(e, pitch=e.pitch + k))
    return tuple(shifted)
