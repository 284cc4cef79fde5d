"""
Decoder Module for the Music Dependency Parser
Turns arc score matrices into dependency trees: greedy row-wise argmax,
Eisner projective maximum spanning tree, Chu-Liu/Edmonds arborescence
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .config import DECODER_MODES, NONE, ROOT
from .exceptions import AllMaskedRowError, InfeasibleError, InvalidTreeError
from .trees import DependencyTree, HeadSequence, validate_heads

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeResult:
    """Decoded heads plus whether they form a valid tree (greedy output may not)"""

    heads: HeadSequence
    valid: bool
    score: float

    @property
    def tree(self) -> DependencyTree:
        if not self.valid:
            raise InvalidTreeError(f"decoded heads {list(self.heads)} do not form a tree")
        return DependencyTree(self.heads)


def _check_scores(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != s.shape[0] + 1:
        raise ValueError(f"arc scores must have shape (λ, λ+1), got {s.shape}")
    if np.isnan(s).any() or np.isposinf(s).any():
        raise ValueError("arc scores contain NaN or +inf")
    return s


def _head_from_column(col: int) -> int:
    return ROOT if col == 0 else col - 1


def _column_from_head(head: int) -> int:
    return 0 if head in (ROOT, NONE) else head + 1


def tree_score(s: np.ndarray, heads: Sequence[int]) -> float:
    """Sum of the selected arc logits; rest positions contribute nothing"""
    total = 0.0
    for dep, head in enumerate(heads):
        if head == NONE:
            continue
        total += float(s[dep, _column_from_head(head)])
    return total


def greedy_heads(s: np.ndarray, rest_mask: Optional[Sequence[bool]] = None) -> HeadSequence:
    """Row-wise argmax; no guarantee that the result is a tree"""
    s = _check_scores(s)
    finite = np.isfinite(s)
    empty_rows = np.where(~finite.any(axis=1))[0]
    if len(empty_rows):
        raise AllMaskedRowError(f"rows {empty_rows.tolist()} have no potential arc")
    columns = np.argmax(s, axis=1)
    heads = []
    for dep, col in enumerate(columns):
        if rest_mask is not None and rest_mask[dep]:
            heads.append(NONE)
        else:
            heads.append(_head_from_column(int(col)))
    return tuple(heads)


def eisner(s: np.ndarray) -> DependencyTree:
    """
    Highest-scoring projective tree with exactly one root, by bottom-up dynamic
    programming over complete and incomplete spans in O(λ³)

    Ties go to the first (leftmost) split point and root candidate.
    """
    s = _check_scores(s)
    n = s.shape[0]
    neg_inf = -np.inf

    # [start, end, direction]; direction 0: head at end, 1: head at start
    complete = np.full((n, n, 2), neg_inf)
    incomplete = np.full((n, n, 2), neg_inf)
    complete_split = np.zeros((n, n, 2), dtype=np.int64)
    incomplete_split = np.zeros((n, n, 2), dtype=np.int64)
    for i in range(n):
        complete[i, i, :] = 0.0

    for length in range(1, n):
        for start in range(n - length):
            end = start + length

            joined = complete[start, start:end, 1] + complete[start + 1:end + 1, end, 0]
            best = int(np.argmax(joined))
            incomplete_split[start, end, :] = start + best
            incomplete[start, end, 0] = joined[best] + s[start, end + 1]
            incomplete[start, end, 1] = joined[best] + s[end, start + 1]

            left = complete[start, start:end, 0] + incomplete[start:end, end, 0]
            best = int(np.argmax(left))
            complete[start, end, 0] = left[best]
            complete_split[start, end, 0] = start + best

            right = incomplete[start, start + 1:end + 1, 1] + complete[start + 1:end + 1, end, 1]
            best = int(np.argmax(right))
            complete[start, end, 1] = right[best]
            complete_split[start, end, 1] = start + 1 + best

    root_totals = np.array([complete[0, r, 0] + complete[r, n - 1, 1] + s[r, 0] for r in range(n)])
    root = int(np.argmax(root_totals))
    if not np.isfinite(root_totals[root]):
        raise InfeasibleError("no projective tree with a finite score exists")

    heads = [ROOT] * n
    stack: List[Tuple[str, int, int, int]] = [('c', 0, root, 0), ('c', root, n - 1, 1)]
    while stack:
        kind, start, end, direction = stack.pop()
        if start == end:
            continue
        if kind == 'c':
            split = complete_split[start, end, direction]
            if direction == 0:
                stack.append(('c', start, split, 0))
                stack.append(('i', split, end, 0))
            else:
                stack.append(('i', start, split, 1))
                stack.append(('c', split, end, 1))
        else:
            split = incomplete_split[start, end, direction]
            if direction == 0:
                heads[start] = end
            else:
                heads[end] = start
            stack.append(('c', start, split, 1))
            stack.append(('c', split + 1, end, 0))
    return DependencyTree(tuple(heads))


def _find_cycle(tree: np.ndarray) -> Optional[np.ndarray]:
    """Boolean mask of one cycle in a head array (node 0 is the root), or None"""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(tree)))
    graph.add_edges_from((int(head), dep) for dep, head in enumerate(tree) if dep != 0)
    try:
        edges = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return None
    cycle = np.zeros(len(tree), dtype=bool)
    cycle[[dep for _, dep in edges]] = True
    return cycle


def _chu_liu_edmonds(scores: np.ndarray) -> np.ndarray:
    """
    Maximum spanning arborescence on a (N, N) matrix scores[dep, head], node 0
    being the root. Returns the head of every node (tree[0] == 0).
    """
    scores = scores.copy()
    np.fill_diagonal(scores, -np.inf)
    scores[0] = -np.inf
    scores[0, 0] = 0.0
    tree = np.argmax(scores, axis=1)
    cycle = _find_cycle(tree)
    if cycle is None:
        return tree

    # Contract the cycle into a single node and solve the smaller problem
    cycle_locs = np.where(cycle)[0]
    noncycle = ~cycle
    noncycle_locs = np.where(noncycle)[0]
    cycle_scores = scores[cycle, tree[cycle]]
    cycle_score = cycle_scores.sum()

    entering = scores[cycle][:, noncycle] - cycle_scores[:, None] + cycle_score
    leaving = scores[noncycle][:, cycle]
    best_entry = np.argmax(entering, axis=0)
    best_exit = np.argmax(leaving, axis=1)

    sub = np.pad(scores[noncycle][:, noncycle], ((0, 1), (0, 1)), mode='constant')
    sub[-1, :-1] = entering[best_entry, np.arange(len(noncycle_locs))]
    sub[:-1, -1] = leaving[np.arange(len(noncycle_locs)), best_exit]
    contracted = _chu_liu_edmonds(sub)

    cycle_head = contracted[-1]
    contracted = contracted[:-1]
    new_tree = -np.ones_like(tree)
    outside = contracted < len(contracted)
    new_tree[noncycle_locs[outside]] = noncycle_locs[contracted[outside]]
    new_tree[noncycle_locs[~outside]] = cycle_locs[best_exit[~outside]]
    new_tree[cycle_locs] = tree[cycle_locs]
    new_tree[cycle_locs[best_entry[cycle_head]]] = noncycle_locs[cycle_head]
    return new_tree


def _arborescence_score(scores: np.ndarray, tree: np.ndarray) -> float:
    return float(sum(scores[d, tree[d]] for d in range(1, len(tree))))


def chu_liu_edmonds(s: np.ndarray) -> DependencyTree:
    """
    Maximum spanning arborescence rooted at the dummy node with exactly one
    dummy child. When the unconstrained optimum has several root children,
    every root candidate is tried in turn and the best tree kept.
    """
    s = _check_scores(s)
    n = s.shape[0]
    scores = np.vstack([np.full((1, n + 1), -np.inf), s])

    tree = _chu_liu_edmonds(scores)
    if np.count_nonzero(tree[1:] == 0) == 1:
        best_tree, best_score = tree, _arborescence_score(scores, tree)
    else:
        best_tree, best_score = None, -np.inf
        for r in np.where(np.isfinite(s[:, 0]))[0]:
            single = scores.copy()
            single[1:, 0] = -np.inf
            single[r + 1, 0] = s[r, 0]
            candidate = _chu_liu_edmonds(single)
            score = _arborescence_score(scores, candidate)
            if score > best_score:
                best_tree, best_score = candidate, score

    if best_tree is None or not np.isfinite(best_score):
        raise InfeasibleError("no single-root arborescence with a finite score exists")
    heads = tuple(_head_from_column(int(col)) for col in best_tree[1:])
    return DependencyTree(heads)


def _rest_mask(seq) -> List[bool]:
    if seq is None:
        return []
    return [bool(getattr(item, 'is_rest', item)) for item in seq]


def decode(seq, s: np.ndarray, mode: str = 'eisner') -> DecodeResult:
    """
    Decode a full sequence: the chosen algorithm runs on the rest-free
    submatrix and NONE is reinserted at rest positions

    Args:
        seq: the event sequence (or a boolean rest mask); None means no rests
        s: (λ, λ+1) arc scores
        mode: 'greedy', 'eisner' or 'cle'
    """
    if mode not in DECODER_MODES:
        raise ValueError(f"unknown decoder mode {mode!r}; expected one of {DECODER_MODES}")
    s = _check_scores(s)
    n = s.shape[0]
    rests = _rest_mask(seq) or [False] * n
    if len(rests) != n:
        raise ValueError(f"sequence has {len(rests)} elements but scores have {n} rows")

    kept = [i for i in range(n) if not rests[i]]
    if not kept:
        raise InfeasibleError("sequence contains only rests")
    sub = s[np.ix_(kept, [0] + [k + 1 for k in kept])]

    if mode == 'greedy':
        sub_heads = greedy_heads(sub)
    elif mode == 'eisner':
        sub_heads = eisner(sub).heads
    else:
        sub_heads = chu_liu_edmonds(sub).heads

    heads = [NONE] * n
    for new, old in enumerate(kept):
        h = sub_heads[new]
        heads[old] = ROOT if h == ROOT else kept[h]
    valid = not validate_heads(heads)
    if not valid:
        logger.warning(f"Greedy decoding produced an invalid tree: {heads}")
    return DecodeResult(heads=tuple(heads), valid=valid, score=tree_score(s, heads))
