"""
Tree Module for the Music Dependency Parser
Dependency and binary constituent trees, validity checks, and the exact
conversions between the two representations
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .config import NONE, ROOT
from .exceptions import (
    ConversionError,
    DoubleSidedError,
    InvalidTreeError,
    NonProjectiveError,
)

logger = logging.getLogger(__name__)

HeadSequence = Tuple[int, ...]


def head_graph(heads: Sequence[int]) -> nx.DiGraph:
    """Directed graph with an edge head -> dependent for every arc; rests are left out"""
    graph = nx.DiGraph()
    graph.add_nodes_from(i for i, h in enumerate(heads) if h != NONE)
    graph.add_edges_from((int(h), d) for d, h in enumerate(heads) if h >= 0)
    return graph


def validate_heads(heads: Sequence[int]) -> List[str]:
    """
    Check a head sequence against the dependency-tree invariants

    Args:
        heads: head index per element, ROOT for the root and NONE for rests

    Returns:
        List of problems found (empty when the sequence is a valid tree)
    """
    problems = []
    heads = [int(h) for h in heads]
    n = len(heads)
    if n == 0:
        return ["empty head sequence"]

    for i, h in enumerate(heads):
        if h in (ROOT, NONE):
            continue
        if not 0 <= h < n:
            problems.append(f"element {i}: head {h!r} out of range")
        elif h == i:
            problems.append(f"element {i}: self-loop")
        elif heads[h] == NONE:
            problems.append(f"element {i}: head {h} is a rest")
    if problems:
        return problems

    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        problems.append(f"expected exactly one root, found {len(roots)}")

    try:
        cycle = nx.find_cycle(head_graph(heads))
    except nx.NetworkXNoCycle:
        return problems
    problems.append(f"element {cycle[0][1]}: head chain contains a cycle")
    return problems


@dataclass(frozen=True)
class DependencyTree:
    """Head assignment over a sequence: one root, acyclic, rests marked NONE"""

    heads: HeadSequence

    def __post_init__(self):
        object.__setattr__(self, 'heads', tuple(int(h) for h in self.heads))
        problems = validate_heads(self.heads)
        if problems:
            raise InvalidTreeError(f"invalid dependency tree {list(self.heads)}: {problems[0]}")

    @property
    def seq_len(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(ROOT)

    @property
    def rest_mask(self) -> Tuple[bool, ...]:
        return tuple(h == NONE for h in self.heads)

    def arcs(self) -> Set[Tuple[int, int]]:
        """Directed (dep, head) pairs"""
        return {(d, h) for d, h in enumerate(self.heads) if h >= 0}

    def dependents(self, head: int) -> List[int]:
        return [d for d, h in enumerate(self.heads) if h == head]

    def children_map(self) -> Dict[int, List[int]]:
        children: Dict[int, List[int]] = {i: [] for i, h in enumerate(self.heads) if h != NONE}
        for d, h in enumerate(self.heads):
            if h >= 0:
                children[h].append(d)
        return children


def is_projective(t: DependencyTree) -> bool:
    """
    True iff every element strictly between a dependent and its head is
    reachable from the head. Rest positions are not tree elements and are skipped.
    """
    heads = t.heads
    graph = head_graph(heads)
    for dep, head in t.arcs():
        reachable = nx.descendants(graph, head)
        lo, hi = min(dep, head), max(dep, head)
        if any(heads[k] != NONE and k not in reachable for k in range(lo + 1, hi)):
            return False
    return True


def has_double_sided(t: DependencyTree) -> bool:
    """True iff some element has dependents on both of its sides"""
    for head, deps in t.children_map().items():
        if deps and min(deps) < head < max(deps):
            return True
    return False


def strip_rests(t: DependencyTree) -> Tuple[DependencyTree, Tuple[int, ...]]:
    """
    Remove rest positions and re-index the remaining heads

    Returns:
        The rest-free tree and the original positions of its elements
    """
    kept = tuple(i for i, h in enumerate(t.heads) if h != NONE)
    new_index = {old: new for new, old in enumerate(kept)}
    heads = [ROOT if t.heads[old] == ROOT else new_index[t.heads[old]] for old in kept]
    return DependencyTree(tuple(heads)), kept


def insert_rests(t: DependencyTree, rest_mask: Sequence[bool]) -> DependencyTree:
    """Inverse of strip_rests: spread a rest-free tree back over the full sequence"""
    kept = [i for i, is_rest in enumerate(rest_mask) if not is_rest]
    if len(kept) != t.seq_len:
        raise InvalidTreeError(
            f"tree has {t.seq_len} elements but the sequence has {len(kept)} non-rest positions"
        )
    heads = [NONE] * len(rest_mask)
    for new, old in enumerate(kept):
        h = t.heads[new]
        heads[old] = ROOT if h == ROOT else kept[h]
    return DependencyTree(tuple(heads))


class Side(str, Enum):
    LEFT = 'left'
    RIGHT = 'right'


@dataclass(frozen=True)
class Leaf:
    element_index: int


@dataclass(frozen=True)
class Internal:
    left: 'ConstituentTree'
    right: 'ConstituentTree'
    primary: Side


ConstituentTree = Union[Leaf, Internal]


def iter_leaves(c: ConstituentTree) -> List[int]:
    """Leaf element indices in left-to-right order"""
    leaves: List[int] = []
    stack = [c]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            leaves.append(node.element_index)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return leaves


def count_internal(c: ConstituentTree) -> int:
    if isinstance(c, Leaf):
        return 0
    return 1 + count_internal(c.left) + count_internal(c.right)


def validate_constituent(c: ConstituentTree) -> None:
    """Raise ConversionError unless leaves read 0, 1, ..., n-1 from left to right"""
    leaves = iter_leaves(c)
    if leaves != list(range(len(leaves))):
        raise ConversionError(f"constituent leaves are not consecutive from 0: {leaves}")


def dep_to_constituent(t: DependencyTree) -> ConstituentTree:
    """
    Convert a projective single-sided dependency tree into its unique binary
    constituent tree

    At each step the node labelled with a head gets two children: the primary
    one carries the head, the secondary one carries the head's farthest remaining
    dependent. Children are placed left/right by sequence position.

    Raises:
        InvalidTreeError: the tree still contains rests
        DoubleSidedError: some head has dependents on both sides
        NonProjectiveError: the tree has crossing arcs
    """
    if NONE in t.heads:
        raise InvalidTreeError("strip rests before converting to a constituent tree")
    if has_double_sided(t):
        raise DoubleSidedError(f"double-sided dependencies in {list(t.heads)}")
    if not is_projective(t):
        raise NonProjectiveError(f"crossing arcs in {list(t.heads)}")

    children = t.children_map()

    def build(head: int, deps: List[int]) -> ConstituentTree:
        if not deps:
            return Leaf(head)
        farthest = max(deps, key=lambda d: abs(d - head))
        rest = [d for d in deps if d != farthest]
        secondary = build(farthest, children[farthest])
        primary = build(head, rest)
        if farthest < head:
            return Internal(left=secondary, right=primary, primary=Side.RIGHT)
        return Internal(left=primary, right=secondary, primary=Side.LEFT)

    return build(t.root, children[t.root])


def constituent_to_dep(c: ConstituentTree) -> DependencyTree:
    """
    Convert a binary constituent tree into a dependency tree: each internal node
    is grouped with its primary child, and the element propagated by the
    secondary child becomes a dependent of the group's element
    """
    validate_constituent(c)
    n = len(iter_leaves(c))
    heads = [ROOT] * n

    def visit(node: ConstituentTree) -> int:
        if isinstance(node, Leaf):
            return node.element_index
        left = visit(node.left)
        right = visit(node.right)
        if node.primary == Side.LEFT:
            heads[right] = left
            return left
        heads[left] = right
        return right

    visit(c)
    return DependencyTree(tuple(heads))


def constituent_spans(c: ConstituentTree) -> Set[Tuple[int, int]]:
    """(leftmost leaf, rightmost leaf) of every internal node"""
    spans: Set[Tuple[int, int]] = set()

    def visit(node: ConstituentTree) -> Tuple[int, int]:
        if isinstance(node, Leaf):
            return node.element_index, node.element_index
        lo, _ = visit(node.left)
        _, hi = visit(node.right)
        spans.add((lo, hi))
        return lo, hi

    visit(c)
    return spans


def head_element(c: ConstituentTree) -> int:
    """Element propagated to the top of the tree through primary children"""
    while isinstance(c, Internal):
        c = c.left if c.primary == Side.LEFT else c.right
    return c.element_index


def try_dep_to_constituent(t: DependencyTree) -> Optional[ConstituentTree]:
    """Rest-free constituent tree, or None when the tree is not convertible"""
    stripped, _ = strip_rests(t)
    try:
        return dep_to_constituent(stripped)
    except InvalidTreeError as e:
        logger.debug(f"No constituent tree for {list(t.heads)}: {e}")
        return None
