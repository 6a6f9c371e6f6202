"""Bijections between permutations, priority sequences, binary tournament
trees and ordered n-node trees.

Priorities only matter through their relative order, so every map first
normalizes its input to ranks ``1..n``.

Ordered-tree convention (used by :func:`ordered_tree_from_sequence` and its
inverse).  The sequence is written into the essentially complete binary tree
of size n in breadth-first, left-to-right order: position i holds p_i, its
children sit at 2i and 2i+1.  That binary tree is turned into an ordered
tree whose root is position 1.  The children of the root are the sibling
chain of position 2 followed by the sibling chain of position 3; below the
root the usual natural correspondence applies (left link = first child,
right link = next sibling).  Node ids of the result are ranks minus one.
Since the shape depends on n only, a tree is in the image exactly when its
ordered shape equals that canonical shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .tree_core import RootedTree, TreeError


class CombinatError(ValueError):
    pass


def ranks(seq: Sequence[int]) -> Tuple[int, ...]:
    """Replace each priority by its rank (1 = smallest)."""
    if len(set(seq)) != len(seq):
        raise CombinatError(f"priorities must be distinct: {tuple(seq)}")
    order = {v: r for r, v in enumerate(sorted(seq), start=1)}
    return tuple(order[v] for v in seq)


def check_permutation(sigma: Sequence[int]) -> Tuple[int, ...]:
    sigma = tuple(sigma)
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise CombinatError(f"not a permutation of 1..{len(sigma)}: {sigma}")
    return sigma


# ---------------------------------------------------------------------------
# binary tournament trees

@dataclass(frozen=True)
class TournamentTree:
    label: int
    left: Optional["TournamentTree"] = None
    right: Optional["TournamentTree"] = None

    def __len__(self):
        return 1 + len(self.left or ()) + len(self.right or ())

    def labels(self) -> Iterable[int]:
        yield self.label
        if self.left is not None:
            yield from self.left.labels()
        if self.right is not None:
            yield from self.right.labels()

    def dumps(self) -> str:
        return dumps_tournament(self)


def dumps_tournament(t: Optional[TournamentTree]) -> str:
    """``(<label> <left> <right>)`` with ``.`` for the empty tree."""
    if t is None:
        return "."
    return f"({t.label} {dumps_tournament(t.left)} {dumps_tournament(t.right)})"


def loads_tournament(text: str) -> Optional[TournamentTree]:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise CombinatError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ".":
            return None
        if tok != "(":
            raise CombinatError(f"unexpected token {tok!r}")
        label = int(tokens[pos])
        pos += 1
        left = parse()
        right = parse()
        if tokens[pos] != ")":
            raise CombinatError(f"expected ')' got {tokens[pos]!r}")
        pos += 1
        return TournamentTree(label, left, right)

    tree = parse()
    if pos != len(tokens):
        raise CombinatError("trailing tokens after tree")
    return tree


def check_tournament(t: Optional[TournamentTree]) -> None:
    """Raise unless labels are exactly 1..n and increase from root to leaves."""
    if t is None:
        return
    labels = sorted(t.labels())
    if labels != list(range(1, len(labels) + 1)):
        raise CombinatError(f"labels are not 1..{len(labels)}")
    stack = [t]
    while stack:
        node = stack.pop()
        for child in (node.left, node.right):
            if child is not None:
                if child.label <= node.label:
                    raise CombinatError(
                        f"label {child.label} below {node.label} breaks min-at-root order")
                stack.append(child)


def _gamma(s: Sequence[int]) -> Optional[TournamentTree]:
    if not s:
        return None
    i = min(range(len(s)), key=s.__getitem__)
    return TournamentTree(s[i], _gamma(s[:i]), _gamma(s[i + 1:]))


def tournament_from_sequence(s: Sequence[int]) -> Optional[TournamentTree]:
    """Min-at-root decomposition s = l m r -> (m, gamma(l), gamma(r))."""
    return _gamma(ranks(s))


def sequence_from_tournament(t: Optional[TournamentTree]) -> Tuple[int, ...]:
    """In-order traversal; inverse of :func:`tournament_from_sequence`."""
    check_tournament(t)
    out: List[int] = []
    stack = []
    node = t
    while stack or node is not None:
        while node is not None:
            stack.append(node)
            node = node.left
        node = stack.pop()
        out.append(node.label)
        node = node.right
    return tuple(out)


def tournament_from_permutation(sigma: Sequence[int]) -> Optional[TournamentTree]:
    return _gamma(check_permutation(sigma))


def _branch(t: Optional[TournamentTree], side: str) -> Tuple[int, ...]:
    out = []
    while t is not None:
        out.append(t.label)
        t = getattr(t, side)
    return tuple(out)


def right_branch(t: Optional[TournamentTree]) -> Tuple[int, ...]:
    return _branch(t, "right")


def left_branch(t: Optional[TournamentTree]) -> Tuple[int, ...]:
    return _branch(t, "left")


def mean_left_branch_length(m: int) -> Fraction:
    """Average |LB(T)| over all m! tournament trees of size m."""
    if m < 1:
        raise CombinatError("need m >= 1")
    total = 0
    count = 0
    for sigma in itertools.permutations(range(1, m + 1)):
        total += len(left_branch(_gamma(sigma)))
        count += 1
    return Fraction(total, count)


# ---------------------------------------------------------------------------
# ordered trees

class OrderedTree(RootedTree):
    """A RootedTree that also remembers the order of each node's children."""

    __slots__ = ("order",)

    def __init__(self, parent, order: Dict[int, Sequence[int]]):
        super().__init__(parent)
        self.order = {k: tuple(v) for k, v in order.items() if v}
        for x, kids in self.order.items():
            if sorted(kids) != sorted(self.children(x)):
                raise TreeError(f"child order of {x} disagrees with parent links")
        if sum(map(len, self.order.values())) != self.n - 1:
            raise TreeError("child order does not cover every non-root node")

    @classmethod
    def from_children(cls, n: int, root: int, order: Dict[int, Sequence[int]]):
        parent: List[Optional[int]] = [None] * n
        seen = {root}
        for x, kids in order.items():
            for c in kids:
                if c in seen:
                    raise TreeError(f"node {c} listed twice")
                seen.add(c)
                parent[c] = x
        return cls(parent, order)

    def ordered_children(self, x: int) -> Tuple[int, ...]:
        return self.order.get(x, ())

    def shape(self, x: Optional[int] = None):
        """Nested tuple of child shapes; equal shapes mean ordered-isomorphic."""
        x = self.root if x is None else x
        return tuple(self.shape(c) for c in self.ordered_children(x))


def _heap_children(i: int, n: int) -> Tuple[Optional[int], Optional[int]]:
    left = 2 * i if 2 * i <= n else None
    right = 2 * i + 1 if 2 * i + 1 <= n else None
    return left, right


def _sibling_chain(i: Optional[int], n: int) -> List[int]:
    out = []
    while i is not None:
        out.append(i)
        i = _heap_children(i, n)[1]
    return out


def canonical_positions(n: int) -> Dict[int, Tuple[int, ...]]:
    """Ordered children, by heap position, of the canonical n-node shape."""
    if n < 1:
        return {}
    order: Dict[int, Tuple[int, ...]] = {}
    left, right = _heap_children(1, n)
    order[1] = tuple(_sibling_chain(left, n) + _sibling_chain(right, n))
    for i in range(2, n + 1):
        first = _heap_children(i, n)[0]
        if first is not None:
            order[i] = tuple(_sibling_chain(first, n))
    return order


def ordered_tree_from_sequence(s: Sequence[int]) -> Optional[OrderedTree]:
    """alpha: priority sequence -> ordered tree whose node ids are ranks - 1."""
    r = ranks(s)
    n = len(r)
    if n == 0:
        return None
    node = {i: r[i - 1] - 1 for i in range(1, n + 1)}
    order = {node[i]: [node[c] for c in kids]
             for i, kids in canonical_positions(n).items()}
    return OrderedTree.from_children(n, node[1], order)


def sequence_from_ordered_tree(t: Optional[RootedTree]) -> Tuple[int, ...]:
    """beta: inverse of alpha, defined only on alpha's image."""
    if t is None:
        return ()
    if not isinstance(t, OrderedTree):
        raise CombinatError("beta needs sibling order; pass an OrderedTree")
    n = t.n
    canon = canonical_positions(n)
    pos_to_node = {1: t.root}
    stack = [1]
    while stack:
        i = stack.pop()
        want = canon.get(i, ())
        have = t.ordered_children(pos_to_node[i])
        if len(want) != len(have):
            raise CombinatError("tree shape is not an essentially complete heap image")
        for c, x in zip(want, have):
            pos_to_node[c] = x
            stack.append(c)
    return tuple(pos_to_node[i] + 1 for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# exhaustive checks

@dataclass
class RoundtripResult:
    n: int
    cases: int
    gamma_ok: int
    tau_distinct: int
    alpha_ok: int
    alpha_distinct: int

    @property
    def ok(self) -> bool:
        return (self.gamma_ok == self.cases and self.alpha_ok == self.cases
                and self.tau_distinct == self.cases and self.alpha_distinct == self.cases)


def exhaustive_roundtrip(n: int) -> RoundtripResult:
    """Run gamma/tau/alpha and their inverses over all of S_n."""
    if n < 1:
        raise CombinatError("need n >= 1")
    gamma_ok = alpha_ok = cases = 0
    trees = set()
    ordered = set()
    for sigma in itertools.permutations(range(1, n + 1)):
        cases += 1
        t = tournament_from_permutation(sigma)
        trees.add(dumps_tournament(t))
        if sequence_from_tournament(t) == sigma:
            gamma_ok += 1
        o = ordered_tree_from_sequence(sigma)
        ordered.add((o.dumps(), tuple(sorted(o.order.items()))))
        if sequence_from_ordered_tree(o) == sigma:
            alpha_ok += 1
    return RoundtripResult(n, cases, gamma_ok, len(trees), alpha_ok, len(ordered))
