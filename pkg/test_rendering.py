"""
Tests for DOT rendering
"""

import pytest

from conftest import A_TRAIN_HEADS
from src.config import NONE, ROOT
from src.rendering import event_labels, render_constituent, render_dependency, render_dot
from src.trees import DependencyTree, dep_to_constituent


def edges(dot: str):
    return [line.strip() for line in dot.splitlines() if '->' in line]


def test_two_element_tree():
    dot = render_dependency(DependencyTree((1, ROOT)), ['a', 'b'])
    assert dot.startswith('digraph dependency {')
    assert edges(dot) == ['n0 -> n1;']
    assert 'n0 [label="a"];' in dot
    assert 'n1 [label="b", peripheries=2];' in dot


def test_a_train_dependency(a_train_piece):
    dot = render_dot(a_train_piece.tree, event_labels(a_train_piece.events))
    assert len(edges(dot)) == 4
    assert dot.count('peripheries=2') == 1
    assert 'n4 [label="C6", peripheries=2];' in dot


def test_rests_are_dashed_and_unconnected(melody_piece):
    dot = render_dependency(melody_piece.tree, event_labels(melody_piece.events))
    assert 'n2 [label="rest", style=dashed];' in dot
    assert all('n2' not in e for e in edges(dot))
    assert len(edges(dot)) == 3


def test_output_is_stable():
    tree = DependencyTree(A_TRAIN_HEADS)
    assert render_dependency(tree) == render_dependency(tree)


def test_constituent_edge_styles():
    c = dep_to_constituent(DependencyTree((1, ROOT)))
    dot = render_constituent(c, ['a', 'b'])
    assert dot.startswith('digraph constituent {')
    assert 'c0 [label="b", shape=ellipse];' in dot
    assert edges(dot) == ['c0 -> l0 [style=dashed];', 'c0 -> l1 [style=solid];']


def test_constituent_a_train(a_train_piece):
    dot = render_dot(dep_to_constituent(a_train_piece.tree), event_labels(a_train_piece.events))
    assert len(edges(dot)) == 8
    assert sum('style=solid' in e for e in edges(dot)) == 4


def test_labels_are_escaped():
    dot = render_dependency(DependencyTree((ROOT,)), ['say "hi"'])
    assert r'label="say \"hi\""' in dot


def test_label_count_must_match():
    with pytest.raises(ValueError):
        render_dependency(DependencyTree((1, ROOT)), ['a'])


def test_unknown_type():
    with pytest.raises(TypeError):
        render_dot((1, ROOT))


def test_event_labels(melody_piece):
    assert event_labels(melody_piece.events) == ['60', '62', 'rest', '64', '65']
    assert NONE in melody_piece.tree.heads
