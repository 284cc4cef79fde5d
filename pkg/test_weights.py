"""
Tests for the binary weight container
"""

from fractions import Fraction

import numpy as np
import pytest
import torch

from src.exceptions import FormatVersionError, PayloadLengthError, ShapeMismatchError
from src.features import DurationVocab
from src.scorer import ModelConfig, init_params, predict_scores
from src.weights import load_checkpoint, load_weights, save_weights

SMALL = dict(vocab_sizes=[12, 6, 3, 4, 6], embed_dim=8, hidden_dim=8, attention_heads=2, encoder_layers=1,
             mlp_layers=2, dropout=0.0, max_relative_distance=4)


@pytest.fixture
def saved(tmp_path):
    model = init_params(ModelConfig(**SMALL), seed=0)
    path = save_weights(model, tmp_path / 'model.mdpw')
    return model, path


@pytest.mark.parametrize('seed', range(10))
def test_round_trip_is_bitwise(tmp_path, seed):
    variant = {**SMALL, 'arc_predictor': 'bilinear'} if seed % 2 else SMALL
    model = init_params(ModelConfig(**variant), seed=seed)
    loaded = load_weights(save_weights(model, tmp_path / f'm{seed}.mdpw'))
    before, after = model.state_dict(), loaded.state_dict()
    assert list(before) == list(after)
    for name in before:
        assert torch.equal(before[name], after[name]), name

    x = np.zeros((3, 5), dtype=np.int64)
    assert np.array_equal(predict_scores(model, x), predict_scores(loaded, x))


def test_checkpoint_carries_vocab_and_kind(tmp_path):
    model = init_params(ModelConfig(**SMALL), seed=0)
    vocab = DurationVocab([Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)])
    checkpoint = load_checkpoint(save_weights(model, tmp_path / 'm.mdpw', vocab=vocab, kind='chords'))
    assert checkpoint.vocab == vocab
    assert checkpoint.kind == 'chords'
    assert checkpoint.model.cfg == model.cfg
    assert not checkpoint.model.training


def test_checkpoint_carries_metrical_templates(tmp_path):
    cfg = ModelConfig(**SMALL, metrical_templates={5: [1, 5, 2, 2, 2], 4: [1, 2, 2, 2, 2]})
    checkpoint = load_checkpoint(save_weights(init_params(cfg, seed=0), tmp_path / 'm.mdpw'))
    assert checkpoint.model.cfg.metrical_templates == {5: [1, 5, 2, 2, 2], 4: [1, 2, 2, 2, 2]}


def test_truncated_file(saved, tmp_path):
    _, path = saved
    blob = open(path, 'rb').read()
    cut = tmp_path / 'cut.mdpw'
    cut.write_bytes(blob[:-7])
    with pytest.raises(PayloadLengthError):
        load_weights(cut)

    stub = tmp_path / 'stub.mdpw'
    stub.write_bytes(blob[:6])
    with pytest.raises(FormatVersionError):
        load_weights(stub)


def test_bad_magic(saved, tmp_path):
    _, path = saved
    blob = open(path, 'rb').read()
    bad = tmp_path / 'bad.mdpw'
    bad.write_bytes(b'XXXX' + blob[4:])
    with pytest.raises(FormatVersionError, match='magic'):
        load_weights(bad)


def test_version_mismatch(saved, tmp_path):
    _, path = saved
    blob = bytearray(open(path, 'rb').read())
    blob[4] = 99
    future = tmp_path / 'future.mdpw'
    future.write_bytes(bytes(blob))
    with pytest.raises(FormatVersionError, match='version'):
        load_weights(future)


def test_shape_mismatch_names_tensor(saved):
    _, path = saved
    wider = ModelConfig(**{**SMALL, 'vocab_sizes': [12, 6, 3, 9, 6]})
    with pytest.raises(ShapeMismatchError, match=r'embeddings\.3'):
        load_weights(path, wider)


def test_missing_tensor(saved):
    _, path = saved
    deeper = ModelConfig(**{**SMALL, 'encoder_layers': 2})
    with pytest.raises(ShapeMismatchError, match='missing'):
        load_weights(path, deeper)
