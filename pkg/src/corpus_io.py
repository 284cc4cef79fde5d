"""
Corpus I/O Module for the Music Dependency Parser
Schema-validated loading and saving of chord and melody corpora, with
constituent trees converted to dependency trees on load
"""

import json
import logging
import os
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator

from .config import CORPUS_KINDS, NONE
from .exceptions import ChordParseError, ConversionError, InvalidTreeError, SchemaError
from .features import ChordEvent, NoteEvent, Piece, parse_chord_symbol
from .trees import (
    ConstituentTree,
    DependencyTree,
    Internal,
    Leaf,
    Side,
    constituent_to_dep,
    dep_to_constituent,
    head_element,
    insert_rests,
    strip_rests,
    validate_heads,
)

logger = logging.getLogger(__name__)

TREE_FORMATS = ('constituent', 'dependency', 'none')


class ConstituentNodeModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    label: Optional[str] = None
    leaf_index: Optional[int] = Field(None, ge=0)
    children: List['ConstituentNodeModel'] = Field(default_factory=list)
    primary: Optional[Literal['left', 'right']] = None


class _TimedEventModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    duration_measures: List[int]
    bar_position: List[int]

    @field_validator('duration_measures', 'bar_position')
    @classmethod
    def _rational_pair(cls, value: List[int]) -> List[int]:
        if len(value) != 2 or value[1] <= 0:
            raise ValueError("expected a rational [p, q] with q > 0")
        return value

    @field_validator('duration_measures')
    @classmethod
    def _positive_duration(cls, value: List[int]) -> List[int]:
        if value[0] <= 0:
            raise ValueError("duration must be positive")
        return value

    @field_validator('bar_position')
    @classmethod
    def _position_in_measure(cls, value: List[int]) -> List[int]:
        if not 0 <= Fraction(value[0], value[1]) < 1:
            raise ValueError("bar position must lie in [0, 1)")
        return value


class ChordEventModel(_TimedEventModel):
    symbol: str


class NoteEventModel(_TimedEventModel):
    midi_pitch: Optional[int] = Field(..., ge=0, le=127)


class PieceModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    title: str
    time_signature: List[int]
    chords: Optional[List[ChordEventModel]] = None
    events: Optional[List[NoteEventModel]] = None
    tree: Optional[ConstituentNodeModel] = None
    heads: Optional[List[Optional[int]]] = None

    @field_validator('time_signature')
    @classmethod
    def _time_signature(cls, value: List[int]) -> List[int]:
        if len(value) != 2 or value[0] <= 0 or value[1] <= 0:
            raise ValueError("expected [numerator, denominator] with positive entries")
        return value


CorpusFileModel = TypeAdapter(List[PieceModel])


def _json_path(loc: Sequence[Union[int, str]]) -> str:
    path = ''
    for part in loc:
        path += f'[{part}]' if isinstance(part, int) else f'.{part}'
    return path.lstrip('.') or '<root>'


def _schema_error(error: ValidationError) -> SchemaError:
    first = error.errors()[0]
    return SchemaError(f"{_json_path(first['loc'])}: {first['msg']}")


def _rational(pair: Sequence[int]) -> Fraction:
    return Fraction(pair[0], pair[1])


def _rational_pair(value: Fraction) -> List[int]:
    return [value.numerator, value.denominator]


def node_to_constituent(node: ConstituentNodeModel, path: str = 'tree') -> ConstituentTree:
    """
    Build a constituent tree from its JSON form

    Leaves without leaf_index are numbered left to right. An internal node
    without an explicit primary takes the child carrying its own label; when
    both children carry it, the right child is primary.

    Raises:
        ConversionError: non-binary node or undecidable primary child
    """
    counter = [0]

    def build(n: ConstituentNodeModel, where: str) -> ConstituentTree:
        if not n.children:
            index = n.leaf_index if n.leaf_index is not None else counter[0]
            counter[0] += 1
            return Leaf(index)
        if len(n.children) != 2:
            raise ConversionError(f"{where}: node has {len(n.children)} children, expected 0 or 2")
        left_model, right_model = n.children
        left = build(left_model, f"{where}.children[0]")
        right = build(right_model, f"{where}.children[1]")
        if n.primary is not None:
            primary = Side(n.primary)
        elif n.label is not None and right_model.label == n.label:
            primary = Side.RIGHT
        elif n.label is not None and left_model.label == n.label:
            primary = Side.LEFT
        else:
            raise ConversionError(f"{where}: cannot tell the primary child (no 'primary' and no matching label)")
        return Internal(left=left, right=right, primary=primary)

    return build(node, path)


def constituent_to_node(c: ConstituentTree, labels: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """JSON form of a constituent tree; internal labels are the propagated head labels"""
    if isinstance(c, Leaf):
        node: Dict[str, Any] = {'leaf_index': c.element_index}
        if labels is not None:
            node['label'] = labels[c.element_index]
        return node
    node = {}
    if labels is not None:
        node['label'] = labels[head_element(c)]
    node['children'] = [constituent_to_node(c.left, labels), constituent_to_node(c.right, labels)]
    node['primary'] = c.primary.value
    return node


def _events_from_model(piece: PieceModel, kind: str, where: str) -> tuple:
    numerator = piece.time_signature[0]
    if kind == 'chords':
        if piece.chords is None:
            raise SchemaError(f"{where}.chords: field required for a chord corpus")
        events = []
        for i, chord in enumerate(piece.chords):
            try:
                root, form, extension = parse_chord_symbol(chord.symbol)
            except ChordParseError as e:
                raise SchemaError(f"{where}.chords[{i}].symbol: {e}") from e
            events.append(ChordEvent(root, form, extension, _rational(chord.duration_measures),
                                     _rational(chord.bar_position), numerator))
        return tuple(events)

    if piece.events is None:
        raise SchemaError(f"{where}.events: field required for a melody corpus")
    return tuple(NoteEvent(e.midi_pitch, _rational(e.duration_measures), _rational(e.bar_position), numerator)
                 for e in piece.events)


def _heads_from_model(piece: PieceModel, rest_mask: Sequence[bool], where: str) -> Tuple[int, ...]:
    heads = tuple(NONE if h is None else h for h in piece.heads)
    if len(heads) != len(rest_mask):
        raise SchemaError(f"{where}.heads: {len(heads)} entries for {len(rest_mask)} events")
    if any((h == NONE) != r for h, r in zip(heads, rest_mask)):
        raise SchemaError(f"{where}.heads: null entries must match rest events exactly")
    return heads


def piece_from_model(piece: PieceModel, kind: str, where: str = 'piece') -> Piece:
    events = _events_from_model(piece, kind, where)
    if not events:
        raise SchemaError(f"{where}: piece has no events")
    rest_mask = [e.is_rest for e in events]

    tree = None
    if piece.tree is not None:
        constituent = node_to_constituent(piece.tree, f"{where}.tree")
        n_leaves = sum(1 for r in rest_mask if not r)
        try:
            stripped = constituent_to_dep(constituent)
        except (InvalidTreeError, ConversionError) as e:
            raise ConversionError(f"{where}.tree: {e}") from e
        if stripped.seq_len != n_leaves:
            raise ConversionError(
                f"{where}.tree: {stripped.seq_len} leaves but {n_leaves} non-rest events"
            )
        tree = insert_rests(stripped, rest_mask)
    elif piece.heads is not None:
        heads = _heads_from_model(piece, rest_mask, where)
        try:
            tree = DependencyTree(heads)
        except InvalidTreeError as e:
            raise ConversionError(f"{where}.heads: {e}") from e

    return Piece(title=piece.title, events=events, tree=tree,
                 time_signature=(piece.time_signature[0], piece.time_signature[1]))


def read_corpus_models(path: Union[str, Path]) -> List[PieceModel]:
    try:
        raw = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise SchemaError(f"{path}: cannot read file ({e})") from e
    try:
        return CorpusFileModel.validate_json(raw)
    except ValidationError as e:
        raise _schema_error(e) from e


def load_corpus(path: Union[str, Path], kind: str) -> List[Piece]:
    """
    Load a corpus file into pieces with dependency trees

    Raises:
        SchemaError: the file does not match the corpus schema (message names the JSON path)
        ConversionError: a constituent tree is malformed
    """
    if kind not in CORPUS_KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}; expected one of {CORPUS_KINDS}")
    models = read_corpus_models(path)
    pieces = [piece_from_model(m, kind, f"[{i}]") for i, m in enumerate(models)]
    logger.info(f"✅ Loaded {len(pieces)} {kind} pieces from {path}")
    return pieces


def load_predicted_heads(path: Union[str, Path], kind: str) -> List[Tuple[Piece, Tuple[int, ...], bool]]:
    """
    Load parser output without requiring the head lists to form trees

    Greedy decoding writes cycles and multiple roots as raw heads; those come
    back with valid=False and tree=None so they can still be scored.

    Returns:
        (piece, heads, valid) per piece
    """
    if kind not in CORPUS_KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}; expected one of {CORPUS_KINDS}")
    loaded = []
    for i, model in enumerate(read_corpus_models(path)):
        where = f"[{i}]"
        if model.tree is not None or model.heads is None:
            piece = piece_from_model(model, kind, where)
            if piece.tree is None:
                raise SchemaError(f"{where}: predicted piece carries neither 'tree' nor 'heads'")
            loaded.append((piece, piece.tree.heads, True))
            continue
        piece = piece_from_model(model.model_copy(update={'heads': None}), kind, where)
        heads = _heads_from_model(model, piece.rest_mask, where)
        problems = validate_heads(heads)
        if problems:
            logger.debug(f"{where}.heads: not a tree ({problems[0]})")
            loaded.append((piece, heads, False))
        else:
            loaded.append((replace(piece, tree=DependencyTree(heads)), heads, True))
    invalid = sum(not valid for _, _, valid in loaded)
    logger.info(f"✅ Loaded {len(loaded)} predicted {kind} pieces from {path} ({invalid} not trees)")
    return loaded


def _event_dict(event) -> Dict[str, Any]:
    timing = {
        'duration_measures': _rational_pair(event.duration_measures),
        'bar_position': _rational_pair(event.bar_position),
    }
    if isinstance(event, ChordEvent):
        return {'symbol': event.symbol, **timing}
    return {'midi_pitch': event.pitch, **timing}


def piece_to_dict(piece: Piece, tree_format: str = 'constituent') -> Dict[str, Any]:
    """
    JSON form of a piece; a tree without a constituent form (double-sided or
    non-projective) is written as heads instead
    """
    if tree_format not in TREE_FORMATS:
        raise ValueError(f"unknown tree format {tree_format!r}; expected one of {TREE_FORMATS}")
    data: Dict[str, Any] = {
        'title': piece.title,
        'time_signature': list(piece.time_signature),
    }
    events = [_event_dict(e) for e in piece.events]
    data['chords' if piece.kind == 'chords' else 'events'] = events

    if piece.tree is None or tree_format == 'none':
        return data
    if tree_format == 'constituent':
        stripped, kept = strip_rests(piece.tree)
        try:
            constituent = dep_to_constituent(stripped)
        except InvalidTreeError as e:
            logger.warning(f"'{piece.title}': writing heads instead of a constituent tree ({e})")
        else:
            labels = [piece.events[i].symbol for i in kept] if piece.kind == 'chords' else None
            data['tree'] = constituent_to_node(constituent, labels)
            return data
    data['heads'] = [None if h == NONE else h for h in piece.tree.heads]
    return data


def write_corpus_payload(payload: List[Dict[str, Any]], path: Union[str, Path]) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + '.tmp')
    tmp.write_text(json.dumps(payload, indent=2) + '\n', encoding='utf-8')
    os.replace(tmp, path)
    return str(path)


def save_corpus(pieces: Sequence[Piece], path: Union[str, Path], tree_format: str = 'constituent') -> str:
    """Write pieces to a corpus file; returns the path written"""
    written = write_corpus_payload([piece_to_dict(p, tree_format) for p in pieces], path)
    logger.info(f"💾 Saved {len(pieces)} pieces to {path}")
    return written


def convert_corpus(in_path: Union[str, Path], out_path: Union[str, Path], kind: str,
                   to: Optional[str] = None) -> str:
    """
    Rewrite a corpus file with its trees in the other representation

    Args:
        to: 'dependency' or 'constituent'; None flips whatever the first piece uses
    """
    models = read_corpus_models(in_path)
    if to is None:
        to = 'dependency' if models and models[0].tree is not None else 'constituent'
    pieces = [piece_from_model(m, kind, f"[{i}]") for i, m in enumerate(models)]
    logger.info(f"🔄 Converting {len(pieces)} pieces to {to} trees")
    return save_corpus(pieces, out_path, tree_format=to)
