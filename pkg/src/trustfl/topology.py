"""Client graph, honest/Byzantine partition and neighborhood queries."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np


class TopologyError(ValueError):
    """Invalid topology; ``field`` names the offending spec field when known."""

    def __init__(self, msg: str, field: str = ""):
        super().__init__(msg)
        self.field = field


@dataclass(frozen=True)
class TopologySpec:
    """Declarative description of a graph; the ``topology`` section of a config."""

    generator: str = "complete"
    num_clients: int = 45
    num_byzantine: int = 30
    byzantine_ids: Optional[tuple[int, ...]] = None
    edges: Optional[tuple[tuple[int, int], ...]] = None


@dataclass(frozen=True)
class GraphTopology:
    """Directed graph over clients ``0..V-1``.

    ``edges`` holds ordered pairs ``(u, v)`` meaning ``u`` sends to ``v``; the
    neighborhood of ``v`` is every ``u`` with ``(u, v)`` in the edge set.
    """

    num_clients: int
    edges: frozenset
    byzantine: frozenset
    _in_nbrs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        V = self.num_clients
        nbrs: list[set[int]] = [set() for _ in range(V)]
        for u, v in self.edges:
            if not (0 <= u < V and 0 <= v < V) or u == v:
                raise TopologyError(f"invalid edge ({u}, {v}) for {V} clients", "edges")
            nbrs[v].add(u)
        for k in self.byzantine:
            if not 0 <= k < V:
                raise TopologyError(f"Byzantine id {k} out of range", "byzantine_ids")
        object.__setattr__(self, "_in_nbrs", tuple(np.array(sorted(s), dtype=np.int64) for s in nbrs))

    @property
    def honest(self) -> frozenset:
        return frozenset(range(self.num_clients)) - self.byzantine

    @property
    def num_byzantine(self) -> int:
        return len(self.byzantine)

    def honest_ids(self) -> np.ndarray:
        """Honest clients in ascending order; position in this array is the client's honest rank."""
        return np.array(sorted(self.honest), dtype=np.int64)

    def is_byzantine(self, v: int) -> bool:
        return v in self.byzantine

    def neighbor_array(self, v: int) -> np.ndarray:
        self._check(v)
        return self._in_nbrs[v]

    def honest_edges(self) -> list[tuple[int, int]]:
        """Undirected honest-honest pairs ``(u, v)`` with ``u < v``, sorted."""
        pairs = set()
        for u, v in self.edges:
            if u not in self.byzantine and v not in self.byzantine:
                pairs.add((min(u, v), max(u, v)))
        return sorted(pairs)

    def honest_subgraph(self) -> "GraphTopology":
        """The graph induced by honest clients, relabeled ``0..H-1`` by honest rank."""
        ids = self.honest_ids()
        rank = {int(v): i for i, v in enumerate(ids)}
        edges = frozenset((rank[u], rank[v]) for u, v in self.edges if u in rank and v in rank)
        return GraphTopology(len(ids), edges, frozenset())

    def _check(self, v: int) -> None:
        if not 0 <= v < self.num_clients:
            raise TopologyError(f"unknown client id {v}")


def neighbors(g: GraphTopology, v: int) -> set[int]:
    return {int(u) for u in g.neighbor_array(v)}


def honest_subgraph_connected(g: GraphTopology) -> bool:
    honest = g.honest
    if len(honest) <= 1:
        return True
    adj: dict[int, set[int]] = {v: set() for v in honest}
    for u, v in g.edges:
        if u in honest and v in honest:
            adj[u].add(v)
            adj[v].add(u)
    start = min(honest)
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(honest)


def _symmetric(pairs: Iterable[tuple[int, int]]) -> frozenset:
    out = set()
    for u, v in pairs:
        out.add((u, v))
        out.add((v, u))
    return frozenset(out)


def build_topology(spec: TopologySpec) -> GraphTopology:
    V, b = spec.num_clients, spec.num_byzantine
    if V < 2:
        raise TopologyError(f"need at least 2 clients, got {V}", "num_clients")
    if not 0 <= b < V:
        raise TopologyError(f"num_byzantine must satisfy 0 <= b < V, got b={b}, V={V}", "num_byzantine")

    if spec.generator == "complete":
        edges = frozenset((u, v) for u in range(V) for v in range(V) if u != v)
    elif spec.generator == "ring":
        edges = _symmetric((v, (v + 1) % V) for v in range(V))
    elif spec.generator == "custom":
        if not spec.edges:
            raise TopologyError("custom generator requires an edge list", "edges")
        edges = _symmetric(tuple(e) for e in spec.edges)
    else:
        raise TopologyError(f"unknown generator {spec.generator!r}", "generator")

    if spec.byzantine_ids is None:
        byz = frozenset(range(b))
    else:
        byz = frozenset(int(k) for k in spec.byzantine_ids)
        if len(byz) != b:
            raise TopologyError(f"byzantine_ids has {len(byz)} distinct ids but num_byzantine={b}", "byzantine_ids")

    g = GraphTopology(V, edges, byz)
    if not honest_subgraph_connected(g):
        raise TopologyError("honest subgraph is disconnected", "edges")
    return g
