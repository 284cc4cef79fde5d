"""
Shared fixtures for the Music Dependency Parser tests
"""

import json
from fractions import Fraction

import pytest

from src.config import NONE, ROOT
from src.features import ChordEvent, NoteEvent, Piece, parse_chord_symbol
from src.trees import DependencyTree

A_TRAIN_HEADS = (4, 2, 3, 4, ROOT)
A_TRAIN_CHORDS = [
    ('C6', [1, 1], [0, 1]),
    ('D7', [1, 1], [0, 1]),
    ('Dm7', [1, 2], [0, 1]),
    ('G7', [1, 2], [1, 2]),
    ('C6', [1, 1], [0, 1]),
]


def chord_events(rows, numerator=4):
    events = []
    for symbol, duration, position in rows:
        root, form, extension = parse_chord_symbol(symbol)
        events.append(ChordEvent(root, form, extension, Fraction(*duration), Fraction(*position), numerator))
    return tuple(events)


def note(pitch, duration=Fraction(1, 4), position=Fraction(0), numerator=4):
    return NoteEvent(pitch, Fraction(duration), Fraction(position), numerator)


@pytest.fixture
def a_train_piece():
    return Piece(title='Take the A Train', events=chord_events(A_TRAIN_CHORDS),
                 tree=DependencyTree(A_TRAIN_HEADS), time_signature=(4, 4))


@pytest.fixture
def a_train_json():
    """CFG-style labelled tree; every primary flag comes from the labels"""
    leaves = [{'label': symbol} for symbol, _, _ in A_TRAIN_CHORDS]
    dm7 = {'label': 'Dm7', 'children': [leaves[1], leaves[2]]}
    g7 = {'label': 'G7', 'children': [dm7, leaves[3]]}
    c6 = {'label': 'C6', 'children': [g7, leaves[4]]}
    top = {'label': 'C6', 'children': [leaves[0], c6]}
    return [{
        'title': 'Take the A Train',
        'time_signature': [4, 4],
        'chords': [
            {'symbol': s, 'duration_measures': d, 'bar_position': p} for s, d, p in A_TRAIN_CHORDS
        ],
        'tree': top,
    }]


@pytest.fixture
def a_train_file(tmp_path, a_train_json):
    path = tmp_path / 'a_train.json'
    path.write_text(json.dumps(a_train_json))
    return path


@pytest.fixture
def melody_piece():
    events = (
        note(60, Fraction(1, 4), Fraction(0)),
        note(62, Fraction(1, 4), Fraction(1, 4)),
        note(None, Fraction(1, 4), Fraction(1, 2)),
        note(64, Fraction(1, 4), Fraction(3, 4)),
        note(65, Fraction(1, 2), Fraction(0)),
    )
    # rest at position 2 carries NONE
    tree = DependencyTree((1, 4, NONE, 4, ROOT))
    return Piece(title='melody', events=events, tree=tree, time_signature=(4, 4))


def heads_piece_json(heads, title='cadence'):
    chords = [('Dm7', [1, 1], [0, 1]), ('G7', [1, 1], [0, 1]), ('C6', [1, 1], [0, 1])]
    return {
        'title': title,
        'time_signature': [4, 4],
        'chords': [{'symbol': s, 'duration_measures': d, 'bar_position': p} for s, d, p in chords],
        'heads': list(heads),
    }


@pytest.fixture
def cyclic_prediction(tmp_path):
    """Greedy-style output where the first two chords head each other, and its gold file"""
    pred = tmp_path / 'pred.json'
    gold = tmp_path / 'gold.json'
    pred.write_text(json.dumps([heads_piece_json([1, 0, ROOT])]))
    gold.write_text(json.dumps([heads_piece_json([1, 2, ROOT])]))
    return str(pred), str(gold)


@pytest.fixture
def strict_duration_corpus():
    """Three two-chord pieces; only the last one uses half-measure durations"""
    whole = [('C6', [1, 1], [0, 1]), ('G7', [1, 1], [0, 1])]
    half = [('C6', [1, 2], [0, 1]), ('G7', [1, 2], [1, 2])]
    return [
        Piece(title=title, events=chord_events(rows), tree=DependencyTree((1, ROOT)), time_signature=(4, 4))
        for title, rows in [('first', whole), ('second', whole), ('halves', half)]
    ]
