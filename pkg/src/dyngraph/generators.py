"""Random graphs and random valid update streams."""
from __future__ import annotations

import numpy as np

from .graph import (
    DynamicGraph, EdgeDelete, EdgeInsert, GraphUpdate, NodeDelete, NodeInsert,
    WeightChange,
)

ALL_KINDS = ("edge_insert", "edge_delete", "weight_change", "node_insert", "node_delete")
EDGE_KINDS = ALL_KINDS[:3]


def _weight(rng, integer: bool) -> float:
    if integer:
        w = 0
        while w == 0:
            w = int(rng.integers(-5, 6))
        return float(w)
    w = 0.0
    while abs(w) < 0.05:
        w = float(rng.uniform(-2.0, 2.0))
    return w


def random_graph(n: int, p: float = 0.3, directed: bool = True, rng=None,
                 integer: bool = True, self_loops: bool = False,
                 positive: bool = False) -> DynamicGraph:
    """Erdos-Renyi style graph with random nonzero weights."""
    rng = np.random.default_rng(rng)
    edges = []
    for i in range(1, n + 1):
        for j in range(1 if directed else i, n + 1):
            if i == j and not self_loops:
                continue
            if rng.random() < p:
                w = _weight(rng, integer)
                edges.append((i, j, abs(w) if positive else w))
    return DynamicGraph(n, directed, edges)


def random_update(g: DynamicGraph, rng, kinds=ALL_KINDS, integer: bool = True,
                  self_loops: bool = False, max_new_degree: int | None = None,
                  max_delete_degree: int | None = None, positive: bool = False,
                  min_nodes: int = 1, max_nodes: int | None = None) -> GraphUpdate:
    """Draw one update valid for ``g`` from the requested kinds.

    Kinds that are impossible for the current graph (deleting an edge from an
    empty graph, exceeding ``max_nodes``...) are skipped.
    """
    n = g.n

    def wt():
        w = _weight(rng, integer)
        return abs(w) if positive else w

    edges = list(g.undirected_edges())
    candidates = []
    for kind in kinds:
        if kind in ("edge_delete", "weight_change") and not edges:
            continue
        if kind == "edge_insert" and n == 0:
            continue
        if kind == "node_delete":
            if n <= min_nodes:
                continue
            if max_delete_degree is not None and \
                    not any(g.degree(i) <= max_delete_degree for i in range(1, n + 1)):
                continue
        if kind == "node_insert" and max_nodes is not None and n >= max_nodes:
            continue
        candidates.append(kind)
    if not candidates:
        raise ValueError("no update kind is possible for this graph")
    kind = candidates[rng.integers(len(candidates))]

    if kind == "edge_insert":
        for _ in range(100):
            i, j = (int(v) for v in rng.integers(1, n + 1, 2))
            if (i != j or self_loops) and not g.has_edge(i, j):
                return EdgeInsert(i, j, wt())
        # dense graph: fall back to changing a weight
        kind = "weight_change" if edges else "node_insert"
    if kind in ("edge_delete", "weight_change"):
        i, j, old = edges[rng.integers(len(edges))]
        if kind == "edge_delete":
            return EdgeDelete(i, j)
        w = wt()
        while w == old:
            w = wt()
        return WeightChange(i, j, w)
    if kind == "node_delete":
        ids = [i for i in range(1, n + 1)
               if max_delete_degree is None or g.degree(i) <= max_delete_degree]
        return NodeDelete(int(ids[rng.integers(len(ids))]))
    # node_insert
    k = int(rng.integers(0, min(n, 4) + 1))
    if max_new_degree is not None:
        k = min(k, max_new_degree)
    nbrs = rng.choice(n, size=k, replace=False) + 1 if k else []
    out = tuple((int(j), wt()) for j in nbrs)
    inn = ()
    if g.directed and n:
        k2 = int(rng.integers(0, min(n, 4) + 1))
        inn = tuple((int(j) + 1, wt()) for j in rng.choice(n, size=k2, replace=False))
    return NodeInsert(out, inn, observation=float(rng.uniform(-3, 3)))
