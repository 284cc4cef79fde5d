"""
Weights Module for the Music Dependency Parser
Binary container for a trained arc scorer: magic, version, JSON header with
the model config and tensor directory, then little-endian float32 tensors
"""

import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch
from pydantic import ValidationError

from .config import WEIGHT_FILE_MAGIC, WEIGHT_FORMAT_VERSION
from .exceptions import FormatVersionError, PayloadLengthError, ShapeMismatchError
from .features import DurationVocab
from .scorer import ArcScorer, ModelConfig

logger = logging.getLogger(__name__)

_PREAMBLE = struct.Struct('<4sII')
_FLOAT = np.dtype('<f4')


@dataclass
class Checkpoint:
    """A loaded model plus the corpus metadata it was trained with"""

    model: ArcScorer
    vocab: Optional[DurationVocab]
    kind: Optional[str]


def save_weights(p: ArcScorer, path: Union[str, Path], vocab: Optional[DurationVocab] = None,
                 kind: Optional[str] = None) -> str:
    """Write every parameter tensor once, in state-dict order; returns the path written"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    directory = []
    chunks = []
    offset = 0
    for name, tensor in p.state_dict().items():
        data = tensor.detach().cpu().to(torch.float32).numpy().astype(_FLOAT, copy=False)
        raw = data.tobytes(order='C')
        directory.append({'name': name, 'shape': list(data.shape), 'offset': offset})
        chunks.append(raw)
        offset += len(raw)

    header: Dict[str, Any] = {
        'format_version': WEIGHT_FORMAT_VERSION,
        'model_config': p.cfg.model_dump(),
        'kind': kind,
        'duration_vocab': vocab.to_pairs() if vocab is not None else None,
        'tensors': directory,
        'payload_bytes': offset,
    }
    header_bytes = json.dumps(header).encode('utf-8')

    tmp = path.with_suffix(path.suffix + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(_PREAMBLE.pack(WEIGHT_FILE_MAGIC, WEIGHT_FORMAT_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for raw in chunks:
            f.write(raw)
    os.replace(tmp, path)
    logger.info(f"💾 Saved {len(directory)} tensors ({offset} bytes) to {path}")
    return str(path)


def _read_header(blob: bytes, path: Path) -> tuple:
    if len(blob) < _PREAMBLE.size:
        raise FormatVersionError(f"{path}: file too short for a weight container")
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != WEIGHT_FILE_MAGIC:
        raise FormatVersionError(f"{path}: not a weight file (magic {magic!r})")
    if version != WEIGHT_FORMAT_VERSION:
        raise FormatVersionError(f"{path}: format version {version}, expected {WEIGHT_FORMAT_VERSION}")
    start = _PREAMBLE.size
    try:
        header = json.loads(blob[start:start + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatVersionError(f"{path}: unreadable header ({e})") from e
    return header, blob[start + header_len:]


def load_checkpoint(path: Union[str, Path], cfg: Optional[ModelConfig] = None) -> Checkpoint:
    """
    Read a weight file back into a model

    Args:
        cfg: expected configuration; when given, every stored tensor must match
            the shape this configuration produces

    Raises:
        FormatVersionError: wrong magic, version or header
        PayloadLengthError: payload size disagrees with the tensor directory
        ShapeMismatchError: a tensor is missing, unexpected or has the wrong shape
    """
    path = Path(path)
    header, payload = _read_header(path.read_bytes(), path)

    try:
        stored_cfg = ModelConfig(**header['model_config'])
    except (KeyError, TypeError, ValidationError) as e:
        raise FormatVersionError(f"{path}: bad model config in header ({e})") from e
    directory = header.get('tensors', [])
    expected_bytes = sum(int(np.prod(t['shape'], dtype=np.int64)) * _FLOAT.itemsize for t in directory)
    if len(payload) != expected_bytes:
        raise PayloadLengthError(f"{path}: payload has {len(payload)} bytes, directory needs {expected_bytes}")

    model = ArcScorer(cfg or stored_cfg)
    target = model.state_dict()
    stored_names = {t['name'] for t in directory}
    for name in target:
        if name not in stored_names:
            raise ShapeMismatchError(f"{path}: tensor '{name}' missing from the file")

    state = {}
    for entry in directory:
        name, shape = entry['name'], tuple(entry['shape'])
        if name not in target:
            raise ShapeMismatchError(f"{path}: unexpected tensor '{name}'")
        if tuple(target[name].shape) != shape:
            raise ShapeMismatchError(
                f"{path}: tensor '{name}' has shape {shape}, model expects {tuple(target[name].shape)}"
            )
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(payload, dtype=_FLOAT, count=count, offset=entry['offset'])
        state[name] = torch.from_numpy(values.reshape(shape).copy())
    model.load_state_dict(state)
    model.eval()

    pairs = header.get('duration_vocab')
    vocab = DurationVocab.from_pairs(pairs) if pairs else None
    logger.info(f"✅ Loaded {len(state)} tensors from {path}")
    return Checkpoint(model=model, vocab=vocab, kind=header.get('kind'))


def load_weights(path: Union[str, Path], cfg: Optional[ModelConfig] = None) -> ArcScorer:
    return load_checkpoint(path, cfg).model
