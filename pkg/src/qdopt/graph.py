"""Directed communication topologies.

Edges are stored as ``(receiver, sender)`` pairs, 0-indexed. Every node carries
an implicit self-loop which is never part of ``edges`` and never counted in the
out-degree used for shortest paths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np


class NotStronglyConnected(ValueError):
    """Raised when an operation needs a strongly connected digraph."""


class GraphFormatError(ValueError):
    """Raised on a malformed edge-list file."""


@dataclass(frozen=True)
class Digraph:
    """Immutable digraph on nodes ``0..n-1``.

    Attributes:
        n: number of nodes
        edges: ordered pairs ``(receiver, sender)``; self-loops are implicit
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"digraph needs at least one node, got n={self.n}")
        edges = frozenset((int(r), int(s)) for r, s in self.edges if r != s)
        for r, s in edges:
            if not (0 <= r < self.n and 0 <= s < self.n):
                raise ValueError(f"edge ({r}, {s}) outside node range 0..{self.n - 1}")
        object.__setattr__(self, "edges", edges)

        outs: list[list[int]] = [[] for _ in range(self.n)]
        ins: list[list[int]] = [[] for _ in range(self.n)]
        for r, s in sorted(edges):
            outs[s].append(r)
            ins[r].append(s)
        object.__setattr__(self, "out_neighbors", tuple(tuple(sorted(o)) for o in outs))
        object.__setattr__(self, "in_neighbors", tuple(tuple(sorted(i)) for i in ins))

    @classmethod
    def from_senders(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Digraph":
        """Build from ``(sender, receiver)`` pairs, i.e. arrows ``sender -> receiver``."""
        return cls(n, frozenset((r, s) for s, r in pairs))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def out_degree(self, i: int) -> int:
        return len(self.out_neighbors[i])

    def reversed(self) -> "Digraph":
        return Digraph(self.n, frozenset((s, r) for r, s in self.edges))

    def adjacency(self) -> np.ndarray:
        """Boolean matrix ``A[r, s]`` true iff ``s`` transmits to ``r`` (self-loops excluded)."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for r, s in self.edges:
            a[r, s] = True
        return a

    def _bfs(self, source: int) -> list[int]:
        dist = [-1] * self.n
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.out_neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    @cached_property
    def _distances(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self._bfs(i)) for i in range(self.n))

    @cached_property
    def diameter(self) -> int:
        """Longest shortest directed path in hops (0 for a single node)."""
        if not is_strongly_connected(self):
            raise NotStronglyConnected(f"diameter undefined: digraph on {self.n} nodes is not strongly connected")
        return max(max(row) for row in self._distances)


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other node along directed edges."""
    if min(g._bfs(0)) < 0:
        return False
    return min(g.reversed()._bfs(0)) >= 0


def diameter(g: Digraph) -> int:
    return g.diameter


def directed_cycle(n: int) -> Digraph:
    """Cycle ``0 -> 1 -> ... -> n-1 -> 0``."""
    return Digraph.from_senders(n, ((i, (i + 1) % n) for i in range(n)))


def complete_digraph(n: int) -> Digraph:
    return Digraph(n, frozenset((r, s) for r in range(n) for s in range(n) if r != s))


def random_strongly_connected(n: int, p: float, seed: int | None = None) -> Digraph:
    """Random Hamiltonian cycle plus each other ordered pair kept with probability ``p``.

    The cycle visits the nodes in a random order, so the result is strongly
    connected for every draw. Same ``(n, p, seed)`` gives the same edge set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    pairs = set()
    if n > 1:
        for idx in range(n):
            s, r = int(order[idx]), int(order[(idx + 1) % n])
            pairs.add((r, s))
    # draw the full matrix so the stream does not depend on which cycle edges exist
    extra = rng.random((n, n)) < p
    for r in range(n):
        for s in range(n):
            if r != s and extra[r, s]:
                pairs.add((r, s))
    return Digraph(n, frozenset(pairs))


def format_edge_list(g: Digraph) -> str:
    lines = ["# receiver sender", f"n={g.n}"]
    lines += [f"{r} {s}" for r, s in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def write_edge_list(g: Digraph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g), encoding="utf-8")


def parse_edge_list(text: str) -> Digraph:
    n = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            if n is not None:
                raise GraphFormatError(f"line {lineno}: duplicate header")
            try:
                n = int(line[2:])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad header {raw!r}") from None
            continue
        if n is None:
            raise GraphFormatError(f"line {lineno}: edge before 'n=<count>' header")
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'receiver sender', got {raw!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer node id in {raw!r}") from None
    if n is None:
        raise GraphFormatError("missing 'n=<count>' header")
    try:
        return Digraph(n, frozenset(pairs))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def read_edge_list(path: str | Path) -> Digraph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))
