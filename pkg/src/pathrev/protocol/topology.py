"""Network topologies: complete, sparse random G(n, M) and random r-regular."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx


class TopologyError(ValueError):
    pass


@dataclass
class Graph:
    n: int
    edges: FrozenSet[Tuple[int, int]]
    kind: str = "explicit"
    _dist: Optional[List[List[int]]] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]], kind: str = "explicit"):
        norm = set()
        for u, v in edges:
            if u == v:
                raise TopologyError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise TopologyError(f"edge {(u, v)} outside [0, {n})")
            norm.add((min(u, v), max(u, v)))
        g = cls(n, frozenset(norm), kind)
        if not g.is_connected():
            raise TopologyError("graph is disconnected")
        return g

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(sorted(self.edges))
        return g

    def is_connected(self) -> bool:
        return self.n <= 1 or nx.is_connected(self.to_networkx())

    @property
    def distances(self) -> List[List[int]]:
        """All-pairs hop distances by BFS from every node."""
        if self._dist is None:
            g = self.to_networkx()
            d = [[0] * self.n for _ in range(self.n)]
            for u, row in nx.all_pairs_shortest_path_length(g):
                for v, k in row.items():
                    d[u][v] = k
            self._dist = d
        return self._dist

    def distance(self, u: int, v: int) -> int:
        return self.distances[u][v]

    @property
    def diameter(self) -> int:
        return max((max(row) for row in self.distances), default=0)

    def degrees(self) -> Dict[int, int]:
        deg = {i: 0 for i in range(self.n)}
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def complete(n: int) -> Graph:
    if n < 1:
        raise TopologyError("need n >= 1")
    return Graph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)), "complete")


def cycle(n: int) -> Graph:
    if n < 3:
        raise TopologyError("a cycle needs n >= 3")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)), "regular:2")


def path(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)), "path")


def generate_topology(kind: str, n: int, seed: int, m: Optional[int] = None,
                      r: Optional[int] = None, retries: int = 200) -> Graph:
    """Draw a connected graph; resample (bounded) until connected.

    kind is ``complete``, ``sparse`` (uniform G(n, m)) or ``regular``
    (uniform r-regular).
    """
    if kind == "complete":
        return complete(n)
    rng = random.Random(seed)
    for _ in range(retries):
        sub = rng.randrange(2**32)
        if kind == "sparse":
            if m is None or m < n - 1:
                raise TopologyError("sparse graphs need m >= n - 1 edges")
            g = nx.gnm_random_graph(n, m, seed=sub)
        elif kind == "regular":
            if r is None or r >= n or (n * r) % 2:
                raise TopologyError(f"no {r}-regular graph on {n} nodes")
            if r == 2:
                # a connected 2-regular graph is a single cycle, so the uniform
                # draw conditioned on connectivity is a cycle on a random order
                order = list(range(n))
                random.Random(sub).shuffle(order)
                return Graph.from_edges(
                    n, ((order[i], order[(i + 1) % n]) for i in range(n)), "regular:2")
            g = nx.random_regular_graph(r, n, seed=sub)
        else:
            raise TopologyError(f"unknown topology kind {kind!r}")
        if n <= 1 or nx.is_connected(g):
            label = f"sparse:{m}" if kind == "sparse" else f"regular:{r}"
            return Graph(n, frozenset((min(u, v), max(u, v)) for u, v in g.edges()), label)
    raise TopologyError(f"no connected {kind} graph after {retries} draws")


def parse_topology(spec: str, n: int, seed: int) -> Graph:
    """``complete``, ``sparse:<M>`` or ``regular:<r>``."""
    name, _, arg = spec.partition(":")
    if name == "complete":
        return complete(n)
    if name == "sparse":
        return generate_topology("sparse", n, seed, m=int(arg))
    if name == "regular":
        return generate_topology("regular", n, seed, r=int(arg))
    raise TopologyError(f"bad topology {spec!r}")
