"""Matrix embeddings of a graph and their change under graph updates.

An update to the graph is translated into an :class:`EmbeddingDelta`: an
ordered list of steps (permutation, structural appends/removals, rank-1 pairs)
whose replay on the old embedding yields the new one.  Steps are always
emitted in the order permute -> append/remove -> rank-1 pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompatibleEmbedding, ShapeMismatch, UnsupportedOperation
from .graph import (
    DynamicGraph, EdgeDelete, EdgeInsert, GraphUpdate, NodeDelete, NodeInsert,
    WeightChange, EDGE_OPS,
)

ALL_OPS = frozenset({EdgeInsert, EdgeDelete, WeightChange, NodeInsert, NodeDelete})
EDGE_OP_SET = frozenset(EDGE_OPS)


@dataclass(frozen=True)
class EmbeddingKind:
    name: str = "adjacency"
    degree_bound: int | None = None

    def __post_init__(self):
        if self.name not in ("adjacency", "laplacian"):
            raise ValueError(f"unknown embedding {self.name!r}")
        if self.degree_bound is not None:
            if self.name != "laplacian":
                raise ValueError("a degree bound only applies to the Laplacian embedding")
            if self.degree_bound < 1:
                raise ValueError("degree bound must be a positive integer")

    @property
    def is_laplacian(self) -> bool:
        return self.name == "laplacian"


ADJACENCY = EmbeddingKind("adjacency")


def laplacian(degree_bound: int | None = None) -> EmbeddingKind:
    return EmbeddingKind("laplacian", degree_bound)


@dataclass(frozen=True)
class EmbeddingCapabilities:
    l2_ops: frozenset
    svd_ops: frozenset
    l1_ops: frozenset
    # update-vector construction cost f(n, m); documentation only
    cost: str = "f(n, m) = n"

    @property
    def l2_all_ops(self) -> bool:
        return self.l2_ops == ALL_OPS


def capabilities(kind: EmbeddingKind) -> EmbeddingCapabilities:
    if not kind.is_laplacian:
        return EmbeddingCapabilities(ALL_OPS, ALL_OPS - {NodeDelete}, EDGE_OP_SET)
    if kind.degree_bound is None:
        return EmbeddingCapabilities(EDGE_OP_SET, EDGE_OP_SET, EDGE_OP_SET)
    return EmbeddingCapabilities(ALL_OPS, EDGE_OP_SET | {NodeInsert}, EDGE_OP_SET)


def require_supported(kind: EmbeddingKind, u: GraphUpdate, mode: str = "l2") -> None:
    """Raise unless ``kind`` can absorb ``u`` for the given solver mode.

    IncompatibleEmbedding means the embedding itself cannot express the update
    cheaply; UnsupportedOperation means the solver mode does not handle it.
    """
    if kind.is_laplacian and isinstance(u, (NodeInsert, NodeDelete)) and kind.degree_bound is None:
        raise IncompatibleEmbedding(
            "node operations on a Laplacian embedding need a degree bound")
    caps = capabilities(kind)
    allowed = {"l2": caps.l2_ops, "svd": caps.svd_ops, "l1": caps.l1_ops}[mode]
    if type(u) not in allowed:
        raise UnsupportedOperation(f"{type(u).__name__} is not supported in {mode} mode")


# ---- delta steps --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ApplyPair:
    c: np.ndarray
    d: np.ndarray


@dataclass(frozen=True, eq=False)
class AppendColumn:
    a: np.ndarray


@dataclass(frozen=True, eq=False)
class AppendRow:
    a: np.ndarray


@dataclass(frozen=True)
class RemoveLastColumn:
    pass


@dataclass(frozen=True)
class RemoveLastRow:
    pass


@dataclass(frozen=True)
class PermuteWithLast:
    """Swap row and column ``i`` (1-based node id) with the last ones."""
    i: int


@dataclass
class EmbeddingDelta:
    steps: list = field(default_factory=list)

    @property
    def pairs(self) -> list[ApplyPair]:
        return [s for s in self.steps if isinstance(s, ApplyPair)]

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.steps)


def _unit(n: int, i: int, scale: float = 1.0) -> np.ndarray:
    e = np.zeros(n)
    e[i] = scale
    return e


# ---- materialization ----------------------------------------------------

def _check_compatible(g: DynamicGraph, kind: EmbeddingKind) -> None:
    if kind.is_laplacian:
        if g.directed:
            raise IncompatibleEmbedding("the Laplacian embedding needs an undirected graph")
        if g.has_self_loops():
            raise IncompatibleEmbedding("the Laplacian embedding does not allow self-loops")


def materialize(g: DynamicGraph, kind: EmbeddingKind = ADJACENCY) -> np.ndarray:
    """Dense n x n adjacency matrix W, or Laplacian D - W."""
    _check_compatible(g, kind)
    W = np.zeros((g.n, g.n))
    for i, j, w in g.edges():
        W[i - 1, j - 1] = w
    if kind.is_laplacian:
        return np.diag(W.sum(axis=1)) - W
    return W


# ---- deltas -------------------------------------------------------------

def _edge_pairs(g: DynamicGraph, u, kind: EmbeddingKind, n: int,
                compact: bool = False) -> list[ApplyPair]:
    old = g.weight(u.i, u.j)
    new = 0.0 if isinstance(u, EdgeDelete) else float(u.w)
    q = new - old
    if q == 0.0:
        return []
    i, j = u.i - 1, u.j - 1
    if kind.is_laplacian:
        if i == j:
            raise IncompatibleEmbedding("the Laplacian embedding does not allow self-loops")
        # L = D - W: off-diagonal entries move by -q, both degrees by +q
        if compact:
            e = _unit(n, i) - _unit(n, j)
            return [ApplyPair(q * e, e)]
        return [
            ApplyPair(_unit(n, i, -q), _unit(n, j)),
            ApplyPair(_unit(n, j, -q), _unit(n, i)),
            ApplyPair(_unit(n, i, q), _unit(n, i)),
            ApplyPair(_unit(n, j, q), _unit(n, j)),
        ]
    pairs = [ApplyPair(_unit(n, i, q), _unit(n, j))]
    if not g.directed and i != j:
        pairs.append(ApplyPair(_unit(n, j, q), _unit(n, i)))
    return pairs


def permutation_pairs(M: np.ndarray, i: int) -> list[ApplyPair]:
    """Rank-1 pairs that swap row/column ``i`` (1-based) of M with the last ones.

    Two pairs exchange the columns, two more exchange the rows of the
    column-swapped matrix.  Pairs that would be zero are omitted.  Each vector
    is built from one row or column of M, so the work is O(n + m).
    """
    n, m = M.shape
    if n != m:
        raise ShapeMismatch("permutation pairs need a square embedding")
    a, last = i - 1, n - 1
    if not 0 <= a <= last:
        raise IndexError(i)
    if a == last:
        return []
    pairs = []
    col_diff = M[:, last] - M[:, a]
    if np.any(col_diff):
        pairs.append(ApplyPair(col_diff.copy(), _unit(n, a)))
        pairs.append(ApplyPair(-col_diff, _unit(n, last)))
    # rows of the column-swapped matrix
    row_a = M[a].copy()
    row_a[[a, last]] = row_a[[last, a]]
    row_l = M[last].copy()
    row_l[[a, last]] = row_l[[last, a]]
    row_diff = row_l - row_a
    if np.any(row_diff):
        pairs.append(ApplyPair(_unit(n, a), row_diff))
        pairs.append(ApplyPair(_unit(n, last), -row_diff))
    return pairs


def delta_for_update(g_before: DynamicGraph, u: GraphUpdate,
                     kind: EmbeddingKind = ADJACENCY, compact: bool = False) -> EmbeddingDelta:
    """Translate a graph update into steps on the embedding of ``g_before``.

    A Laplacian edge update touches entries (i,j), (j,i), (i,i), (j,j) and is
    emitted as one pair per entry.  With ``compact`` it is emitted as the
    single symmetric pair q (e_i - e_j)(e_i - e_j)^T instead, which keeps the
    intermediate matrices of a replay from changing rank.
    """
    g_before.check_update(u)
    _check_compatible(g_before, kind)
    n = g_before.n
    if isinstance(u, EDGE_OPS):
        return EmbeddingDelta(_edge_pairs(g_before, u, kind, n, compact))

    if kind.is_laplacian and kind.degree_bound is None:
        raise IncompatibleEmbedding(
            "node operations may change Theta(n) degrees of an unbounded Laplacian")

    if isinstance(u, NodeInsert):
        col = np.zeros(n)
        row = np.zeros(n + 1)
        if kind.is_laplacian:
            if len(u.edges) > kind.degree_bound:
                raise IncompatibleEmbedding(
                    f"new node has {len(u.edges)} edges, degree bound is {kind.degree_bound}")
            pairs = []
            for j, w in u.edges:
                col[j - 1] = -w
                row[j - 1] = -w
                row[n] += w
                pairs.append(ApplyPair(_unit(n + 1, j - 1, w), _unit(n + 1, j - 1)))
            return EmbeddingDelta([AppendColumn(col), AppendRow(row)] + pairs)
        for j, w in u.edges:
            row[j - 1] = w
            if not g_before.directed:
                col[j - 1] = w
        for j, w in u.in_edges:
            col[j - 1] = w
        return EmbeddingDelta([AppendColumn(col), AppendRow(row)])

    # NodeDelete: bring the node to the end, cut it off, then fix degrees
    i = u.i
    steps = [] if i == n else [PermuteWithLast(i)]
    steps += [RemoveLastColumn(), RemoveLastRow()]
    if kind.is_laplacian:
        nbrs = {j: w for j, w in g_before.out_neighbors(i).items() if j != i}
        if len(nbrs) > kind.degree_bound:
            raise IncompatibleEmbedding(
                f"node {i} has degree {len(nbrs)}, degree bound is {kind.degree_bound}")
        for j, w in sorted(nbrs.items()):
            jj = i if j == n else j
            steps.append(ApplyPair(_unit(n - 1, jj - 1, -w), _unit(n - 1, jj - 1)))
    return EmbeddingDelta(steps)


def apply_delta(M: np.ndarray, delta: EmbeddingDelta) -> np.ndarray:
    """Replay ``delta`` on a copy of M."""
    M = np.array(M, dtype=float)
    for step in delta.steps:
        M = apply_step(M, step)
    return M


def apply_step(M: np.ndarray, step) -> np.ndarray:
    n, m = M.shape
    if isinstance(step, ApplyPair):
        if step.c.shape != (n,) or step.d.shape != (m,):
            raise ShapeMismatch(
                f"pair of lengths {step.c.shape[0]}, {step.d.shape[0]} on a {n}x{m} matrix")
        M += np.outer(step.c, step.d)
        return M
    if isinstance(step, AppendColumn):
        if step.a.shape != (n,):
            raise ShapeMismatch(f"column of length {step.a.shape[0]} for {n} rows")
        return np.column_stack([M, step.a]) if m else step.a.reshape(n, 1).copy()
    if isinstance(step, AppendRow):
        if step.a.shape != (m,):
            raise ShapeMismatch(f"row of length {step.a.shape[0]} for {m} columns")
        return np.vstack([M, step.a[None, :]])
    if isinstance(step, RemoveLastColumn):
        if m == 0:
            raise ShapeMismatch("no column to remove")
        return M[:, :-1].copy()
    if isinstance(step, RemoveLastRow):
        if n == 0:
            raise ShapeMismatch("no row to remove")
        return M[:-1].copy()
    if isinstance(step, PermuteWithLast):
        a = step.i - 1
        M[[a, n - 1]] = M[[n - 1, a]]
        M[:, [a, m - 1]] = M[:, [m - 1, a]]
        return M
    raise TypeError(f"unknown delta step {step!r}")
