"""Interaction graphs for SYK2 models: complete, ring, star and Watts-Strogatz.

Vertices are 0-based in memory (vertex ``i`` carries the Majorana mode
``gamma^{i+1}``).  The JSON edge-list format is 1-based, ``{"L": int,
"edges": [[a, b], ...]}`` with ``a < b``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

REWIRE_RETRIES = 100


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``L`` vertices.

    ``edges`` is a sorted tuple of ``(a, b)`` pairs with ``0 <= a < b < L``.
    """

    L: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"vertex count must be positive, got {self.L}")
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < b < self.L):
                raise ValueError(f"bad edge ({a}, {b}) for L={self.L}")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))

    @classmethod
    def from_pairs(cls, L: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        edges = sorted((min(a, b), max(a, b)) for a, b in pairs)
        return cls(L, tuple(edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.L, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.L, self.L), dtype=bool)
        for a, b in self.edges:
            A[a, b] = A[b, a] = True
        return A

    def is_connected(self) -> bool:
        return _connected(self.L, self.edges)

    def to_json(self) -> str:
        return json.dumps({"L": self.L, "edges": [[a + 1, b + 1] for a, b in self.edges]})

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        data = json.loads(text)
        return cls.from_pairs(int(data["L"]), ((a - 1, b - 1) for a, b in data["edges"]))


def _connected(L: int, edges) -> bool:
    if L == 1:
        return True
    if not edges:
        return False
    e = np.asarray(list(edges), dtype=np.int64)
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(L, L))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def _check_even(L: int) -> None:
    if L < 2 or L % 2:
        raise ValueError(f"L must be an even integer >= 2, got {L}")


def make_complete(L: int) -> Graph:
    _check_even(L)
    return Graph(L, tuple((a, b) for a in range(L) for b in range(a + 1, L)))


def make_star(L: int) -> Graph:
    """Star graph whose hub is the last vertex ``L - 1``."""
    if L < 2:
        raise ValueError(f"star graph needs L >= 2, got {L}")
    return Graph(L, tuple((i, L - 1) for i in range(L - 1)))


def make_ring(L: int) -> Graph:
    return watts_strogatz(L, 1, 0.0, np.random.default_rng(0))


def lattice_edges(L: int, k: int) -> list[tuple[int, int]]:
    """Circulant lattice edges ordered by first endpoint, then ring offset."""
    return [(i, (i + off) % L) for i in range(L) for off in range(1, k + 1)]


def watts_strogatz(L: int, k: int, p: float, rng: np.random.Generator) -> Graph:
    """Connected Watts-Strogatz small-world graph with exactly ``L * k`` edges.

    Each lattice edge, visited in canonical order, is rewired with
    probability ``p``: its smaller endpoint is kept and the other one is
    moved to a uniformly drawn vertex that is not yet a neighbour.  Proposals
    that would disconnect the graph are redrawn up to ``REWIRE_RETRIES``
    times, after which the edge stays where it is.
    """
    if k < 1:
        raise ValueError(f"half-degree k must be >= 1, got {k}")
    if L < 2 * k + 2:
        raise ValueError(f"need L >= 2k + 2, got L={L}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")

    adj = [set() for _ in range(L)]
    for u, v in lattice_edges(L, k):
        adj[u].add(v)
        adj[v].add(u)

    for u0, v0 in lattice_edges(L, k):
        if rng.random() >= p:
            continue
        keep, old = min(u0, v0), max(u0, v0)
        candidates = [w for w in range(L) if w != keep and w not in adj[keep]]
        if not candidates:
            continue
        for _ in range(REWIRE_RETRIES):
            w = candidates[rng.integers(len(candidates))]
            adj[keep].discard(old)
            adj[old].discard(keep)
            adj[keep].add(w)
            adj[w].add(keep)
            if _connected(L, _edges_of(adj)):
                break
            adj[keep].discard(w)
            adj[w].discard(keep)
            adj[keep].add(old)
            adj[old].add(keep)

    return Graph.from_pairs(L, _edges_of(adj))


def _edges_of(adj) -> list[tuple[int, int]]:
    return [(a, b) for a in range(len(adj)) for b in adj[a] if a < b]


def make_graph(family: str, L: int, *, k: int = 1, p: float = 0.0,
               rng: np.random.Generator | None = None) -> Graph:
    """Dispatch on a family name: ``complete``, ``star``, ``ring`` or ``ws``."""
    if family in ("complete", "full"):
        return make_complete(L)
    if family == "star":
        return make_star(L)
    if family == "ring":
        return make_ring(L)
    if family == "ws":
        if rng is None:
            raise ValueError("Watts-Strogatz graphs need a random stream")
        return watts_strogatz(L, k, p, rng)
    raise ValueError(f"unknown graph family {family!r}")
