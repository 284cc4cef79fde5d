"""
Tests for the tree decoders against exhaustive search
"""

import itertools
from functools import lru_cache

import numpy as np
import pytest

from src.config import NONE, ROOT
from src.decoder import _find_cycle, chu_liu_edmonds, decode, eisner, greedy_heads, tree_score
from src.exceptions import AllMaskedRowError, InfeasibleError
from src.scorer import potential_arc_mask
from src.trees import DependencyTree, is_projective, validate_heads

PARENT = -99


@lru_cache(maxsize=None)
def _forests(lo: int, hi: int) -> np.ndarray:
    """All projective forests over [lo, hi) whose roots attach to PARENT"""
    if lo == hi:
        return np.zeros((1, 0), dtype=np.int64)
    parts = []
    for end in range(lo + 1, hi + 1):
        tails = _forests(end, hi)
        for r in range(lo, end):
            block = _subtrees(lo, end, r)
            parts.append(np.concatenate([np.repeat(block, len(tails), axis=0),
                                         np.tile(tails, (len(block), 1))], axis=1))
    return np.concatenate(parts)


@lru_cache(maxsize=None)
def _subtrees(lo: int, hi: int, r: int) -> np.ndarray:
    """All projective subtrees over [lo, hi) rooted at r, with r attached to PARENT"""
    left = _forests(lo, r).copy()
    left[left == PARENT] = r
    right = _forests(r + 1, hi).copy()
    right[right == PARENT] = r
    rows = []
    for lrow in left:
        for rrow in right:
            rows.append(np.concatenate([lrow, [PARENT], rrow]))
    return np.asarray(rows, dtype=np.int64).reshape(-1, hi - lo)


@lru_cache(maxsize=None)
def projective_trees(n: int) -> np.ndarray:
    trees = np.concatenate([_subtrees(0, n, r) for r in range(n)])
    trees[trees == PARENT] = ROOT
    return trees


@lru_cache(maxsize=None)
def all_trees(n: int) -> np.ndarray:
    candidates = itertools.product(*[[ROOT] + [h for h in range(n) if h != d] for d in range(n)])
    return np.asarray([c for c in candidates if not validate_heads(c)], dtype=np.int64)


def best_score(s: np.ndarray, trees: np.ndarray) -> float:
    # ROOT (-1) maps to column 0, head h to column h + 1
    n = s.shape[0]
    return float(s[np.arange(n), trees + 1].sum(axis=1).max())


def integer_scores(rng: np.random.Generator, n: int) -> np.ndarray:
    s = rng.integers(-20, 21, size=(n, n + 1)).astype(np.float64)
    s[np.arange(n), np.arange(n) + 1] = -np.inf
    return s


class TestBruteForceEnumeration:
    @pytest.mark.parametrize('n', [1, 2, 3, 4, 5])
    def test_projective_enumeration_matches_filter(self, n):
        expected = {tuple(t) for t in all_trees(n) if is_projective(DependencyTree(tuple(t)))}
        found = {tuple(t) for t in projective_trees(n)}
        assert found == expected
        assert len(projective_trees(n)) == len(found)


class TestEisner:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for trial in range(500):
            n = 1 + trial % 8
            s = integer_scores(rng, n)
            t = eisner(s)
            assert is_projective(t)
            assert tree_score(s, t.heads) == best_score(s, projective_trees(n))

    def test_single_root_even_when_root_column_dominates(self):
        s = np.zeros((3, 4))
        s[:, 0] = 10.0
        s[np.arange(3), np.arange(3) + 1] = -np.inf
        t = eisner(s)
        assert t.heads.count(ROOT) == 1

    def test_infeasible(self):
        s = np.full((2, 3), -np.inf)
        with pytest.raises(InfeasibleError):
            eisner(s)


class TestChuLiuEdmonds:
    def test_matches_brute_force_and_dominates_eisner(self):
        rng = np.random.default_rng(1)
        for trial in range(300):
            n = 1 + trial % 6
            s = integer_scores(rng, n)
            t = chu_liu_edmonds(s)
            assert tree_score(s, t.heads) == best_score(s, all_trees(n))
            assert tree_score(s, t.heads) >= tree_score(s, eisner(s).heads)

    def test_non_projective_optimum(self):
        s = np.full((4, 5), -10.0)
        # 0 -> 2, 1 -> 3, 3 -> 2, 2 root: crossing arcs
        for dep, col in [(0, 3), (1, 4), (3, 3), (2, 0)]:
            s[dep, col] = 10.0
        s[np.arange(4), np.arange(4) + 1] = -np.inf
        assert chu_liu_edmonds(s).heads == (2, 3, ROOT, 2)
        assert tree_score(s, eisner(s).heads) < tree_score(s, (2, 3, ROOT, 2))

    def test_find_cycle_marks_members(self):
        # node 0 is the root; 1 -> 2 -> 3 -> 1 is a cycle, 4 hangs off it
        mask = _find_cycle(np.array([0, 3, 1, 2, 1]))
        assert mask.tolist() == [False, True, True, True, False]
        assert _find_cycle(np.array([0, 0, 1, 1])) is None

    def test_cycle_breaking_with_three_way_cycle(self):
        s = np.full((3, 4), -5.0)
        # greedy picks 0 <- 1 <- 2 <- 0, the root arc only slightly worse
        for dep, col in [(0, 2), (1, 3), (2, 1)]:
            s[dep, col] = 10.0
        s[1, 0] = 9.0
        s[np.arange(3), np.arange(3) + 1] = -np.inf
        assert chu_liu_edmonds(s).heads == (1, ROOT, 0)


class TestGreedy:
    def test_rowwise_argmax(self):
        s = np.array([[0.0, -np.inf, 5.0], [3.0, 1.0, -np.inf]])
        assert greedy_heads(s) == (1, ROOT)

    def test_may_return_cycle(self):
        s = np.array([[0.0, -np.inf, 5.0], [0.0, 5.0, -np.inf]])
        result = decode(None, s, 'greedy')
        assert result.heads == (1, 0)
        assert not result.valid

    def test_all_masked_row(self):
        s = np.array([[-np.inf, -np.inf, -np.inf], [0.0, 1.0, -np.inf]])
        with pytest.raises(AllMaskedRowError):
            greedy_heads(s)


class TestDecode:
    def test_rejects_nan(self):
        s = np.zeros((2, 3))
        s[0, 0] = np.nan
        with pytest.raises(ValueError):
            decode(None, s, 'eisner')

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            decode(None, np.zeros((1, 2)), 'viterbi')

    @pytest.mark.parametrize('mode', ['greedy', 'eisner', 'cle'])
    def test_mask_safety(self, mode):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            rests = rng.random(n) < 0.3
            if rests.all():
                rests[int(rng.integers(n))] = False
            mask = potential_arc_mask(rests.tolist()).numpy()
            s = np.where(mask, rng.normal(size=(n, n + 1)), -np.inf)
            result = decode(rests.tolist(), s, mode)
            for dep, head in enumerate(result.heads):
                if rests[dep]:
                    assert head == NONE
                else:
                    col = 0 if head == ROOT else head + 1
                    assert mask[dep, col]
            if mode != 'greedy':
                assert result.valid
                assert result.tree.rest_mask == tuple(bool(r) for r in rests)

    def test_rest_only_sequence(self):
        s = np.full((1, 2), -np.inf)
        s[0, 0] = 0.0
        with pytest.raises(InfeasibleError):
            decode([True], s, 'eisner')


def test_eisner_long_sequences_stay_valid():
    rng = np.random.default_rng(4)
    for n in range(9, 31):
        s = rng.normal(size=(n, n + 1))
        s[np.arange(n), np.arange(n) + 1] = -np.inf
        t = eisner(s)
        assert is_projective(t)
        assert t.heads.count(ROOT) == 1
        assert tree_score(s, chu_liu_edmonds(s).heads) >= tree_score(s, t.heads) - 1e-9
