import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pathrev.analysis import harmonic
from pathrev.combinat import (CombinatError, OrderedTree, TournamentTree, check_tournament,
                              dumps_tournament, exhaustive_roundtrip, left_branch,
                              loads_tournament, mean_left_branch_length,
                              ordered_tree_from_sequence, right_branch,
                              sequence_from_ordered_tree, sequence_from_tournament,
                              tournament_from_permutation, tournament_from_sequence)
from pathrev.tree_core import RootedTree


def test_gamma_small():
    t = tournament_from_sequence([2, 1, 3])
    assert dumps_tournament(t) == "(1 (2 . .) (3 . .))"
    assert sequence_from_tournament(t) == (2, 1, 3)


def test_gamma_normalizes_to_ranks():
    assert sequence_from_tournament(tournament_from_sequence([30, 10, 20])) == (3, 1, 2)


def test_empty_sequence():
    assert tournament_from_sequence([]) is None
    assert sequence_from_tournament(None) == ()
    assert ordered_tree_from_sequence([]) is None
    assert sequence_from_ordered_tree(None) == ()


def test_duplicates_rejected():
    with pytest.raises(CombinatError):
        tournament_from_sequence([1, 1, 2])


def test_tournament_order_violation_rejected():
    bad = TournamentTree(2, TournamentTree(1, None, None), None)
    with pytest.raises(CombinatError):
        check_tournament(bad)
    with pytest.raises(CombinatError):
        sequence_from_tournament(bad)


def test_loads_roundtrip():
    t = tournament_from_sequence([4, 2, 5, 1, 3])
    assert loads_tournament(dumps_tournament(t)) == t


def test_branches():
    t = tournament_from_sequence([3, 1, 2])
    assert right_branch(t) == (1, 2)
    assert left_branch(t) == (1, 3)


def test_permutation_image():
    # sigma maps i -> sigma[i]; the tree is built from the image sequence
    t = tournament_from_permutation((2, 3, 1))
    assert sequence_from_tournament(t) == (2, 3, 1)


def test_beta_rejects_plain_tree():
    with pytest.raises(CombinatError):
        sequence_from_ordered_tree(RootedTree([None, 0]))


def test_beta_rejects_wrong_shape():
    # a chain has the wrong shape for n = 3
    t = OrderedTree.from_children(3, 0, {0: [1], 1: [2]})
    with pytest.raises(CombinatError):
        sequence_from_ordered_tree(t)


@pytest.mark.parametrize("n", range(1, 7))
def test_exhaustive(n):
    r = exhaustive_roundtrip(n)
    assert r.cases == math.factorial(n)
    assert r.ok


def test_alpha_distinguishes_isomorphic_siblings():
    # same parent array can arise from two sequences; child order tells them apart
    seen = {}
    for s in itertools.permutations(range(1, 5)):
        o = ordered_tree_from_sequence(s)
        key = (o.dumps(), tuple(sorted(o.order.items())))
        assert key not in seen
        seen[key] = s


@pytest.mark.parametrize("m", range(1, 7))
def test_mean_left_branch(m):
    # brute force over the same set, independent of the helper
    total = sum(len(left_branch(tournament_from_sequence(p)))
                for p in itertools.permutations(range(1, m + 1)))
    assert mean_left_branch_length(m) == Fraction(total, math.factorial(m)) == harmonic(m).h


@given(st.permutations(range(1, 12)))
def test_gamma_roundtrip_property(p):
    t = tournament_from_sequence(p)
    check_tournament(t)
    assert sequence_from_tournament(t) == tuple(p)


@given(st.lists(st.integers(-1000, 1000), unique=True, max_size=15))
def test_alpha_beta_roundtrip_property(seq):
    o = ordered_tree_from_sequence(seq)
    if not seq:
        assert o is None
        return
    o.validate()
    ranks = tuple(sorted(seq).index(x) + 1 for x in seq)
    assert sequence_from_ordered_tree(o) == ranks
