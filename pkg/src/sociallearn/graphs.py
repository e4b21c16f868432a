"""Time-varying directed communication graphs and B-connectivity checks.

An edge ``(j, i)`` means agent ``j`` can send to agent ``i``. Self-loops
are implicit and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class EdgeSet:
    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("need at least one agent")
        clean = set()
        for j, i in self.edges:
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ParameterError(f"edge {(j, i)} out of range for n={self.n}")
            if j != i:
                clean.add((int(j), int(i)))
        object.__setattr__(self, "edges", frozenset(clean))

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(sorted(self.edges))

    def __or__(self, other: "EdgeSet") -> "EdgeSet":
        if other.n != self.n:
            raise ParameterError("cannot union edge sets of different size")
        return EdgeSet(self.n, self.edges | other.edges)

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[j, i]`` true iff ``j -> i``."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for j, i in self.edges:
            adj[j, i] = True
        return adj

    def in_neighbors(self, i):
        return sorted(j for j, t in self.edges if t == i)

    def out_neighbors(self, j):
        return sorted(t for s, t in self.edges if s == j)


def path_edges(n: int) -> EdgeSet:
    """Undirected path 0-1-...-(n-1), stored in both directions."""
    es = set()
    for a in range(n - 1):
        es.add((a, a + 1))
        es.add((a + 1, a))
    return EdgeSet(n, frozenset(es))


def ring_edges(n: int, directed: bool = True) -> EdgeSet:
    es = {(a, (a + 1) % n) for a in range(n)}
    if not directed:
        es |= {((a + 1) % n, a) for a in range(n)}
    return EdgeSet(n, frozenset(es))


def complete_edges(n: int) -> EdgeSet:
    return EdgeSet(n, frozenset((j, i) for j in range(n) for i in range(n) if i != j))


def empty_edges(n: int) -> EdgeSet:
    return EdgeSet(n)


def is_strongly_connected(edges: EdgeSet) -> bool:
    """Every node reaches every other node (single strongly connected component)."""
    n = edges.n
    if n == 1:
        return True
    fwd = [[] for _ in range(n)]
    bwd = [[] for _ in range(n)]
    for j, i in edges.edges:
        fwd[j].append(i)
        bwd[i].append(j)

    def reach_all(adj):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == n

    return reach_all(fwd) and reach_all(bwd)


KINDS = ("static", "periodic", "table", "random")


@dataclass(frozen=True)
class GraphSchedule:
    """Deterministic generator of the edge set at each time step.

    kinds
    -----
    static
        ``base`` at every step.
    periodic
        ``base`` when ``k % period == 0``, no edges otherwise.
    table
        ``table[k % len(table)]``.
    random
        Each window ``[wB, (w+1)B)`` of length ``period`` gets a random
        strongly connected graph (a random directed Hamiltonian cycle plus
        extra edges with probability ``extra_p``), each edge assigned to
        one random step of the window. Drawn from ``seed`` and the window
        index, so the union over every window is strongly connected.
    """

    n: int
    kind: str = "static"
    base: Optional[EdgeSet] = None
    period: int = 1
    table: tuple = ()
    seed: int = 0
    extra_p: float = 0.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown graph kind {self.kind!r}")
        if self.period < 1:
            raise ParameterError("period must be a positive integer")
        if self.kind in ("static", "periodic"):
            if self.base is None:
                raise ParameterError(f"{self.kind} schedule needs a base edge set")
            if self.base.n != self.n:
                raise ParameterError("base edge set size does not match n")
        if self.kind == "table":
            if not self.table:
                raise ParameterError("table schedule needs at least one entry")
            if any(e.n != self.n for e in self.table):
                raise ParameterError("table entries must all have n nodes")
            object.__setattr__(self, "table", tuple(self.table))
        if not 0.0 <= self.extra_p <= 1.0:
            raise ParameterError("extra_p must lie in [0, 1]")

    @classmethod
    def static(cls, base: EdgeSet) -> "GraphSchedule":
        return cls(base.n, "static", base)

    @classmethod
    def periodic(cls, base: EdgeSet, period: int) -> "GraphSchedule":
        return cls(base.n, "periodic", base, period=period)

    @classmethod
    def from_table(cls, table: Iterable[EdgeSet]) -> "GraphSchedule":
        table = tuple(table)
        return cls(table[0].n, "table", table=table)

    @classmethod
    def seeded_random(cls, n: int, window: int, seed: int, extra_p: float = 0.0):
        return cls(n, "random", period=window, seed=seed, extra_p=extra_p)

    @property
    def natural_window(self) -> Optional[int]:
        """Window length that connects by construction, when one is known."""
        if self.kind in ("periodic", "random"):
            return self.period
        if self.kind == "static":
            return 1
        return None

    def edges_at(self, k: int) -> EdgeSet:
        if k < 0:
            raise ParameterError("time index must be nonnegative")
        if self.kind == "static":
            return self.base
        if self.kind == "periodic":
            return self.base if k % self.period == 0 else EdgeSet(self.n)
        if self.kind == "table":
            return self.table[k % len(self.table)]
        window, offset = divmod(k, self.period)
        return self._random_window(window)[offset]

    def _random_window(self, window: int):
        hit = self._cache.get(window)
        if hit is not None:
            return hit
        rng = np.random.default_rng([self.seed, window])
        n, B = self.n, self.period
        order = rng.permutation(n)
        union = {(int(order[a]), int(order[(a + 1) % n])) for a in range(n)} if n > 1 else set()
        if self.extra_p > 0:
            mask = rng.random((n, n)) < self.extra_p
            union |= {(j, i) for j in range(n) for i in range(n) if i != j and mask[j, i]}
        steps = [set() for _ in range(B)]
        for e in sorted(union):
            steps[int(rng.integers(B))].add(e)
        out = tuple(EdgeSet(n, frozenset(s)) for s in steps)
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[window] = out
        return out


def edges_at(schedule: GraphSchedule, k: int) -> EdgeSet:
    return schedule.edges_at(k)


@dataclass(frozen=True)
class ConnectivityCertificate:
    B: Optional[int]
    candidate_b: int
    windows_checked: int
    first_failing_window: Optional[int]

    @property
    def ok(self) -> bool:
        return self.first_failing_window is None


def window_union(schedule: GraphSchedule, start: int, length: int) -> EdgeSet:
    es = set()
    for k in range(start, start + length):
        es |= schedule.edges_at(k).edges
    return EdgeSet(schedule.n, frozenset(es))


def verify_b_connectivity(schedule: GraphSchedule, candidate_b: int, horizon: int) -> ConnectivityCertificate:
    """Check that the union over each of the first ``horizon`` windows of
    length ``candidate_b`` is strongly connected."""
    if candidate_b < 1:
        raise ParameterError("candidate_b must be a positive integer")
    if horizon < 1:
        raise ParameterError("horizon must be at least one window")
    for w in range(horizon):
        if not is_strongly_connected(window_union(schedule, w * candidate_b, candidate_b)):
            return ConnectivityCertificate(None, candidate_b, w + 1, w)
    return ConnectivityCertificate(candidate_b, candidate_b, horizon, None)


def find_connectivity_window(schedule: GraphSchedule, max_b: int = 64, horizon: int = 64):
    """Smallest B in ``1..max_b`` that passes over ``horizon`` windows, else None."""
    for b in range(1, max_b + 1):
        cert = verify_b_connectivity(schedule, b, horizon)
        if cert.ok:
            return cert
    return None
