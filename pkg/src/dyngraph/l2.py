"""Least-squares graph regression kept optimal across graph updates.

The state holds the graph, its embedding M with maintained pseudoinverse, the
observation vector b (one entry per node) and x = M+ b, the minimum-norm
least-squares solution.  x is recomputed from M+ and b after every update,
followed by one refinement step x += M+ (b - M x).  The step costs two more
matrix-vector products; it matters for ill-conditioned M, where the small
error left in an updated M+ would otherwise show up in the residual
multiplied by the condition number.
"""
from __future__ import annotations

import numpy as np

from . import embedding as emb
from .errors import MissingObservation, ShapeMismatch
from .flops import mv
from .graph import DynamicGraph, GraphUpdate, NodeDelete, NodeInsert
from .pinv import PinvState


def revise_observations(b: np.ndarray, u: GraphUpdate, observation: float | None = None) -> np.ndarray:
    """b after ``u``: a node insertion appends its observation, a node
    deletion moves entry i to the end and drops it, edge updates keep b."""
    if isinstance(u, NodeInsert):
        if observation is None:
            observation = u.observation
        if observation is None:
            raise MissingObservation("node insertion needs an observed value for b")
        return np.append(b, float(observation))
    if isinstance(u, NodeDelete):
        b = np.array(b, dtype=float)
        last = b.shape[0] - 1
        a = u.i - 1
        b[[a, last]] = b[[last, a]]
        return b[:-1].copy()
    return np.array(b, dtype=float)


class L2State:
    def __init__(self, graph: DynamicGraph, kind: emb.EmbeddingKind, pinv: PinvState, b):
        self.graph = graph
        self.kind = kind
        self.pinv = pinv
        self.b = np.array(b, dtype=float)
        if self.b.shape != (pinv.shape[0],):
            raise ShapeMismatch(f"b has length {self.b.shape}, embedding has {pinv.shape[0]} rows")
        self.x = self._solve()

    def _solve(self) -> np.ndarray:
        P, M, b = self.pinv.Mdag, self.pinv.M, self.b
        x = mv(P, b)
        return x + mv(P, b - mv(M, x))

    @classmethod
    def init(cls, g: DynamicGraph, kind: emb.EmbeddingKind, b, tol=None) -> "L2State":
        b = np.asarray(b, dtype=float)
        if b.shape != (g.n,):
            raise ShapeMismatch(f"b has length {b.shape}, graph has {g.n} nodes")
        M = emb.materialize(g, kind)
        return cls(g.copy(), kind, PinvState.from_matrix(M, tol), b)

    @property
    def M(self) -> np.ndarray:
        return self.pinv.M

    @property
    def Mdag(self) -> np.ndarray:
        return self.pinv.Mdag

    def copy(self) -> "L2State":
        return L2State(self.graph.copy(), self.kind, self.pinv.copy(), self.b.copy())

    def update(self, u: GraphUpdate, observation: float | None = None,
               faithful: bool = False) -> int:
        """Apply ``u`` to graph, pseudoinverse, b and x; returns rank-1 pairs applied.

        A node insertion needs the new node's observed value, given either as
        ``observation`` or as ``u.observation``.
        """
        emb.require_supported(self.kind, u, "l2")
        if isinstance(u, NodeInsert):
            if observation is None:
                observation = u.observation
            if observation is None:
                raise MissingObservation("node insertion needs an observed value for b")
        delta = emb.delta_for_update(self.graph, u, self.kind, compact=True)
        pairs = self.pinv.apply_delta(delta, faithful=faithful)
        self.b = revise_observations(self.b, u, observation)
        self.graph.apply(u)
        self.x = self._solve()
        return pairs

    def residual(self) -> float:
        """||M x - b||_2."""
        return float(np.linalg.norm(self.pinv.M @ self.x - self.b))


def init_l2(g: DynamicGraph, kind: emb.EmbeddingKind, b) -> L2State:
    return L2State.init(g, kind, b)


def update_l2(s: L2State, u: GraphUpdate, observation: float | None = None,
              faithful: bool = False) -> L2State:
    s = s.copy()
    s.update(u, observation, faithful)
    return s


def residual(s: L2State) -> float:
    return s.residual()
