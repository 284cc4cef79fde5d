"""
Tests for feature extraction: chord symbols, metrical strength, durations
"""

from fractions import Fraction

import numpy as np
import pytest

from conftest import A_TRAIN_CHORDS, chord_events, note
from src.config import METRICAL_TEMPLATES, OFF_GRID_STRENGTH
from src.exceptions import ChordParseError, UnknownDurationError, UnknownNumeratorError
from src.features import (
    DurationVocab,
    build_duration_vocab,
    encode_note_static,
    extract_features,
    feature_vocab_sizes,
    format_chord_symbol,
    grid_steps,
    inverse_metrical_strength,
    parse_chord_symbol,
    transpose_events,
    transposition_fits,
)


class TestChordSymbols:
    @pytest.mark.parametrize('symbol, expected', [
        ('C6', (0, 0, 0)),
        ('C', (0, 0, 0)),
        ('Dm7', (2, 1, 1)),
        ('G^7', (7, 0, 2)),
        ('Bb7', (10, 0, 1)),
        ('F#%7', (6, 3, 1)),
        ('Eo7', (4, 4, 1)),
        ('Ab+', (8, 2, 0)),
        ('Gsus7', (7, 5, 1)),
    ])
    def test_parse(self, symbol, expected):
        assert parse_chord_symbol(symbol) == expected

    def test_format_is_canonical(self):
        assert format_chord_symbol(*parse_chord_symbol('C')) == 'C6'
        assert format_chord_symbol(*parse_chord_symbol('Dm7')) == 'Dm7'

    @pytest.mark.parametrize('symbol', ['', 'H7', 'C9', 'Dm11'])
    def test_bad_symbols(self, symbol):
        with pytest.raises(ChordParseError):
            parse_chord_symbol(symbol)


class TestMetricalStrength:
    def test_six_eight_grid(self):
        assert grid_steps(6) == [Fraction(1), Fraction(1, 2), Fraction(1, 6), Fraction(1, 12), Fraction(1, 24)]

    def test_six_eight_strengths(self):
        positions = [Fraction(0), Fraction(2, 6), Fraction(1, 2)]
        assert [inverse_metrical_strength(t, 6) for t in positions] == [0, 2, 1]

    def test_four_four(self):
        positions = [Fraction(0), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
        assert [inverse_metrical_strength(t, 4) for t in positions] == [0, 1, 2, 3, 4]

    def test_off_grid(self):
        assert inverse_metrical_strength(Fraction(1, 5), 4) == 5

    def test_unknown_numerator(self):
        with pytest.raises(UnknownNumeratorError):
            inverse_metrical_strength(Fraction(0), 5)

    @pytest.mark.parametrize('numerator', sorted(METRICAL_TEMPLATES))
    def test_grids_nest_for_every_onset(self, numerator):
        steps = grid_steps(numerator)

        def on_grid(t, level):
            return (t / steps[level]).denominator == 1

        for q in range(1, 49):
            for p in range(q):
                t = Fraction(p, q)
                level = inverse_metrical_strength(t, numerator)
                if level == OFF_GRID_STRENGTH:
                    assert not any(on_grid(t, g) for g in range(len(steps)))
                    continue
                assert all(on_grid(t, g) for g in range(level, len(steps)))
                assert not any(on_grid(t, g) for g in range(level))

    def test_two_and_four_share_strengths(self):
        onsets = {Fraction(p, q) for q in range(1, 49) for p in range(q)}
        assert all(inverse_metrical_strength(t, 2) == inverse_metrical_strength(t, 4) for t in onsets)

    def test_custom_template(self):
        five = {5: (1, 5, 2, 2, 2)}
        assert grid_steps(5, five)[1] == Fraction(1, 5)
        assert inverse_metrical_strength(Fraction(2, 5), 5, five) == 1
        assert inverse_metrical_strength(Fraction(1, 10), 5, five) == 2
        with pytest.raises(UnknownNumeratorError):
            inverse_metrical_strength(Fraction(0), 4, five)


class TestDurationVocab:
    def test_sorted_unique(self):
        vocab = DurationVocab([Fraction(1, 2), Fraction(1, 4), Fraction(1, 2)])
        assert vocab.entries == (Fraction(1, 4), Fraction(1, 2))
        assert vocab.index(Fraction(1, 2)) == 1

    def test_nearest_fallback_prefers_shorter_on_ties(self):
        vocab = DurationVocab([Fraction(1, 4), Fraction(3, 4)])
        assert vocab.index(Fraction(1, 2)) == 0
        assert vocab.index(Fraction(5, 8)) == 1
        assert vocab.index(Fraction(2)) == 1

    def test_strict(self):
        with pytest.raises(UnknownDurationError):
            DurationVocab([Fraction(1, 4)]).index(Fraction(1, 2), strict=True)

    def test_pairs(self):
        vocab = DurationVocab([Fraction(1, 4), Fraction(1)])
        assert vocab.to_pairs() == [[1, 4], [1, 1]]
        assert DurationVocab.from_pairs(vocab.to_pairs()) == vocab

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            build_duration_vocab([])


class TestExtraction:
    def test_chord_matrix(self):
        events = chord_events(A_TRAIN_CHORDS)
        vocab = build_duration_vocab([events])
        x = extract_features(events, vocab)
        assert x.dtype == np.int64
        assert x.shape == (5, 5)
        # Dm7 on the downbeat lasting half a measure
        assert x[2].tolist() == [2, 1, 1, 0, 0]
        # G7 on beat three
        assert x[3].tolist() == [7, 0, 1, 0, 1]
        assert all(x[:, c].max() < size for c, size in enumerate(feature_vocab_sizes('chords', vocab)))

    def test_melody_matrix_with_rest(self):
        events = (note(60), note(None, position=Fraction(1, 4)))
        vocab = build_duration_vocab([events])
        x = extract_features(events, vocab)
        assert x.tolist() == [[60, 0, 0], [128, 0, 2]]
        assert feature_vocab_sizes('melody', vocab) == [129, 1, 6]


class TestTransposition:
    def test_melody_shift(self):
        events = (note(60), note(None))
        shifted = transpose_events(events, 3)
        assert shifted[0].pitch == 63
        assert shifted[1].is_rest

    def test_out_of_range(self):
        events = (note(120),)
        assert not transposition_fits(events, 12)
        with pytest.raises(ValueError):
            transpose_events(events, 12)

    def test_chord_roots_wrap(self):
        events = chord_events([('Bb7', [1, 1], [0, 1])])
        assert transpose_events(events, 4)[0].root_pc == 2

    @pytest.mark.parametrize('k', [1, 5, 11])
    def test_only_static_column_moves(self, k):
        events = chord_events(A_TRAIN_CHORDS)
        vocab = build_duration_vocab([events])
        before = extract_features(events, vocab)
        after = extract_features(transpose_events(events, k), vocab)
        assert np.array_equal(after[:, 1:], before[:, 1:])
        assert after[:, 0].tolist() == [(r + k) % 12 for r in before[:, 0]]

    def test_melody_static_column_only(self):
        events = (note(60), note(None, position=Fraction(1, 4)), note(67, Fraction(1, 2), Fraction(1, 2)))
        vocab = build_duration_vocab([events])
        before = extract_features(events, vocab)
        after = extract_features(transpose_events(events, -7), vocab)
        assert np.array_equal(after[:, 1:], before[:, 1:])
        assert after[:, 0].tolist() == [53, 128, 60]


def test_note_static_code():
    assert encode_note_static(note(60)) == 60
    assert encode_note_static(note(None)) == 128
