"""Rooted trees stored as parent links, with in-place path reversal."""

from __future__ import annotations

from typing import Iterator, List, Optional, Sequence


class TreeError(ValueError):
    pass


class RootedTree:
    """A rooted tree over the dense ids ``0..n-1``.

    Only parent links are kept; ``parent[root]`` is ``None``.
    """

    __slots__ = ("parent", "root")

    def __init__(self, parent: Sequence[Optional[int]]):
        self.parent: List[Optional[int]] = list(parent)
        roots = [i for i, p in enumerate(self.parent) if p is None]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        self.validate()

    @property
    def n(self) -> int:
        return len(self.parent)

    def __len__(self) -> int:
        return len(self.parent)

    def __eq__(self, other):
        if not isinstance(other, RootedTree):
            return NotImplemented
        return self.parent == other.parent

    def __repr__(self):
        return f"RootedTree({self.dumps()!r})"

    def copy(self) -> "RootedTree":
        return RootedTree(self.parent)

    def validate(self) -> None:
        """Raise TreeError unless the parent links form a single tree."""
        n = len(self.parent)
        roots = 0
        for i, p in enumerate(self.parent):
            if p is None:
                roots += 1
                if i != self.root:
                    raise TreeError(f"node {i} has no parent but root is {self.root}")
            elif not (0 <= p < n):
                raise TreeError(f"parent link {i} -> {p} outside [0, {n})")
        if roots != 1:
            raise TreeError(f"expected exactly one root, found {roots}")
        # every node must reach the root in fewer than n steps
        depth = [0] * n
        depth[self.root] = 1
        for start in range(n):
            path = []
            x = start
            while depth[x] == 0:
                path.append(x)
                if len(path) > n:
                    raise TreeError(f"cycle through node {start}")
                x = self.parent[x]
            d = depth[x]
            for y in reversed(path):
                d += 1
                depth[y] = d

    def _check(self, x: int) -> None:
        if not isinstance(x, int) or not (0 <= x < len(self.parent)):
            raise TreeError(f"unknown node {x!r}")

    def path_to_root(self, x: int) -> Iterator[int]:
        """Yield x, parent(x), ..., root."""
        self._check(x)
        while x is not None:
            yield x
            x = self.parent[x]

    def children(self, x: int) -> List[int]:
        self._check(x)
        return [i for i, p in enumerate(self.parent) if p == x]

    def dumps(self) -> str:
        """Parent-array line, e.g. ``3;-,0,0`` for star(3)."""
        body = ",".join("-" if p is None else str(p) for p in self.parent)
        return f"{len(self.parent)};{body}"

    @classmethod
    def loads(cls, text: str) -> "RootedTree":
        head, _, body = text.strip().partition(";")
        n = int(head)
        fields = body.split(",") if body else []
        if len(fields) != n:
            raise TreeError(f"header says {n} nodes, found {len(fields)} links")
        return cls([None if f.strip() == "-" else int(f) for f in fields])


def star(n: int) -> RootedTree:
    """Root 0 with children 1..n-1."""
    if not isinstance(n, int) or n < 1:
        raise TreeError(f"star needs n >= 1, got {n!r}")
    return RootedTree([None] + [0] * (n - 1))


def height_of(tree: RootedTree, x: int) -> int:
    """Number of nodes on the path from x to the root; the root has height 1."""
    return sum(1 for _ in tree.path_to_root(x))


def path_reversal(tree: RootedTree, x: int) -> int:
    """Reverse the path from x to the root in place and return its edge count.

    Every node on the path other than x is re-parented to x, and x becomes
    the root.
    """
    tree._check(x)
    parent = tree.parent
    cost = 0
    y = parent[x]
    while y is not None:
        up = parent[y]
        parent[y] = x
        cost += 1
        y = up
    parent[x] = None
    tree.root = x
    return cost
