"""Dynamic weighted graphs and the five graph update operations.

Node ids are 1-based and always contiguous (1..n).  Deleting an arbitrary node
is carried out as "swap it with the last node, then drop the last node", and
the swap is reported back so callers can keep vectors indexed by node in step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import InvalidWeight, UpdateConflict


def check_weight(w) -> float:
    w = float(w)
    if not math.isfinite(w) or w == 0.0:
        raise InvalidWeight(f"edge weight must be finite and nonzero, got {w!r}")
    return w


@dataclass(frozen=True)
class EdgeInsert:
    i: int
    j: int
    w: float


@dataclass(frozen=True)
class EdgeDelete:
    i: int
    j: int


@dataclass(frozen=True)
class WeightChange:
    i: int
    j: int
    w: float


@dataclass(frozen=True)
class NodeInsert:
    """Insert node n+1 together with its incident edges.

    ``edges`` are (neighbor, weight) pairs.  In a directed graph they are the
    outgoing edges of the new node and ``in_edges`` lists the incoming ones;
    undirected graphs take ``edges`` only.
    """

    edges: tuple = ()
    in_edges: tuple = ()
    observation: float | None = field(default=None, compare=False)


@dataclass(frozen=True)
class NodeDelete:
    i: int


GraphUpdate = Union[EdgeInsert, EdgeDelete, WeightChange, NodeInsert, NodeDelete]

EDGE_OPS = (EdgeInsert, EdgeDelete, WeightChange)
OP_NAMES = {
    EdgeInsert: "edge_insert",
    EdgeDelete: "edge_delete",
    WeightChange: "weight_change",
    NodeInsert: "node_insert",
    NodeDelete: "node_delete",
}


def op_name(u: GraphUpdate) -> str:
    return OP_NAMES[type(u)]


class DynamicGraph:
    """Mutable weighted graph without multi-edges.

    Directed graphs keep separate out/in adjacency maps.  Undirected graphs
    keep one symmetric map; an undirected edge {i, j} is visible as both
    (i, j) and (j, i) in :attr:`weights`.
    """

    def __init__(self, n: int = 0, directed: bool = True, edges=()):
        if n < 0:
            raise ValueError("node count must be nonnegative")
        self.directed = bool(directed)
        self._out: list[dict[int, float]] = [{} for _ in range(n)]
        self._in: list[dict[int, float]] = [{} for _ in range(n)] if self.directed else self._out
        for i, j, w in edges:
            self._check_node(i)
            self._check_node(j)
            if self.has_edge(i, j):
                raise UpdateConflict(f"duplicate edge ({i}, {j})")
            self._set(i, j, check_weight(w))

    @property
    def n(self) -> int:
        return len(self._out)

    def _check_node(self, i) -> None:
        if not isinstance(i, int) or isinstance(i, bool) or not 1 <= i <= self.n:
            raise UpdateConflict(f"node id {i!r} out of range 1..{self.n}")

    # low-level edge storage; keeps the undirected map symmetric
    def _set(self, i: int, j: int, w: float) -> None:
        self._out[i - 1][j] = w
        self._in[j - 1][i] = w
        if not self.directed:
            self._out[j - 1][i] = w

    def _del(self, i: int, j: int) -> None:
        del self._out[i - 1][j]
        self._in[j - 1].pop(i, None)
        if not self.directed:
            self._out[j - 1].pop(i, None)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._out[i - 1]

    def weight(self, i: int, j: int) -> float:
        return self._out[i - 1].get(j, 0.0)

    def out_neighbors(self, i: int) -> dict[int, float]:
        return self._out[i - 1]

    def in_neighbors(self, i: int) -> dict[int, float]:
        return self._in[i - 1]

    def degree(self, i: int) -> int:
        """Number of distinct neighbors of ``i`` (in or out), self excluded."""
        nbrs = set(self._out[i - 1]) | set(self._in[i - 1])
        nbrs.discard(i)
        return len(nbrs)

    def has_self_loops(self) -> bool:
        return any(i + 1 in nb for i, nb in enumerate(self._out))

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """All stored (i, j, w); undirected edges appear in both orientations."""
        for i, nb in enumerate(self._out, start=1):
            for j in sorted(nb):
                yield i, j, nb[j]

    def undirected_edges(self) -> Iterator[tuple[int, int, float]]:
        for i, j, w in self.edges():
            if self.directed or i <= j:
                yield i, j, w

    @property
    def weights(self) -> dict[tuple[int, int], float]:
        return {(i, j): w for i, j, w in self.edges()}

    @property
    def num_edges(self) -> int:
        return sum(1 for _ in self.undirected_edges())

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph(0, self.directed)
        g._out = [dict(nb) for nb in self._out]
        g._in = [dict(nb) for nb in self._in] if self.directed else g._out
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, DynamicGraph):
            return NotImplemented
        return (self.directed == other.directed and self.n == other.n
                and self.weights == other.weights)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"DynamicGraph(n={self.n}, {kind}, edges={self.num_edges})"

    def validate(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        n = self.n
        assert len(self._in) == n
        for i in range(1, n + 1):
            for j, w in self._out[i - 1].items():
                assert 1 <= j <= n, (i, j)
                assert math.isfinite(w) and w != 0.0, (i, j, w)
                assert self._in[j - 1].get(i) == w, (i, j)
                if not self.directed:
                    assert self._out[j - 1].get(i) == w, (i, j)
            for j, w in self._in[i - 1].items():
                assert self._out[j - 1].get(i) == w, (j, i)

    # ---- updates -------------------------------------------------------

    def check_update(self, u: GraphUpdate) -> None:
        """Raise if ``u`` is not valid against the current graph."""
        if isinstance(u, EdgeInsert):
            self._check_node(u.i)
            self._check_node(u.j)
            check_weight(u.w)
            if self.has_edge(u.i, u.j):
                raise UpdateConflict(f"edge ({u.i}, {u.j}) already exists")
        elif isinstance(u, (EdgeDelete, WeightChange)):
            self._check_node(u.i)
            self._check_node(u.j)
            if isinstance(u, WeightChange):
                check_weight(u.w)
            if not self.has_edge(u.i, u.j):
                raise UpdateConflict(f"edge ({u.i}, {u.j}) does not exist")
        elif isinstance(u, NodeInsert):
            if not self.directed and u.in_edges:
                raise UpdateConflict("in_edges are only meaningful for directed graphs")
            for group in (u.edges, u.in_edges):
                seen = set()
                for j, w in group:
                    self._check_node(j)
                    check_weight(w)
                    if j in seen:
                        raise UpdateConflict(f"node insertion lists neighbor {j} twice")
                    seen.add(j)
        elif isinstance(u, NodeDelete):
            self._check_node(u.i)
        else:
            raise TypeError(f"not a graph update: {u!r}")

    def apply(self, u: GraphUpdate):
        """Apply ``u`` in place.

        Returns the transposition ``(i, n)`` performed for a node deletion,
        otherwise None.
        """
        self.check_update(u)
        if isinstance(u, EdgeInsert):
            self._set(u.i, u.j, float(u.w))
        elif isinstance(u, EdgeDelete):
            self._del(u.i, u.j)
        elif isinstance(u, WeightChange):
            self._set(u.i, u.j, float(u.w))
        elif isinstance(u, NodeInsert):
            self._out.append({})
            if self.directed:
                self._in.append({})
            p = self.n
            for j, w in u.edges:
                self._set(p, j, float(w))
            for j, w in u.in_edges:
                self._set(j, p, float(w))
        else:
            perm = self.permute_with_last(u.i)
            self._drop_last()
            return perm
        return None

    def _drop_last(self) -> None:
        p = self.n
        for j in list(self._out[p - 1]):
            self._del(p, j)
        for j in list(self._in[p - 1]):
            self._del(j, p)
        self._out.pop()
        if self.directed:
            self._in.pop()

    def permute_with_last(self, i: int) -> tuple[int, int]:
        """Exchange the ids of node ``i`` and node n in place; returns ``(i, n)``."""
        self._check_node(i)
        n = self.n
        if i == n:
            return (i, n)
        touched = {}
        for a in (i, n):
            for b, w in self._out[a - 1].items():
                touched[(a, b)] = w
            for b, w in self._in[a - 1].items():
                touched[(b, a)] = w
        for a, b in touched:
            if self.has_edge(a, b):
                self._del(a, b)
        swap = {i: n, n: i}
        for (a, b), w in touched.items():
            self._set(swap.get(a, a), swap.get(b, b), w)
        return (i, n)


def apply_update(g: DynamicGraph, u: GraphUpdate) -> DynamicGraph:
    """Return the revised graph; ``g`` is left untouched."""
    h = g.copy()
    h.apply(u)
    return h


def permute_with_last(g: DynamicGraph, i: int) -> tuple[DynamicGraph, tuple[int, int]]:
    h = g.copy()
    return h, h.permute_with_last(i)


def inverse_update(g: DynamicGraph, u: GraphUpdate) -> GraphUpdate:
    """The edge update that undoes ``u`` when applied after it."""
    if isinstance(u, EdgeInsert):
        return EdgeDelete(u.i, u.j)
    if isinstance(u, EdgeDelete):
        return EdgeInsert(u.i, u.j, g.weight(u.i, u.j))
    if isinstance(u, WeightChange):
        return WeightChange(u.i, u.j, g.weight(u.i, u.j))
    raise UnsupportedInverse(u)


class UnsupportedInverse(TypeError):
    pass
