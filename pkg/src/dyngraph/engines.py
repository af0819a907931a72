"""Uniform wrappers around the l2, l1 and SVD states for the command line.

Each engine owns a graph, an embedding kind and (for the regression modes)
the observation vector b.  It can apply an update, describe its current
state as a result record, check itself against the from-scratch oracle and
round-trip through a text checkpoint.
"""
from __future__ import annotations

import numpy as np

from . import embedding as emb
from .errors import FormatError, ShapeMismatch
from .graph import DynamicGraph, GraphUpdate, NodeInsert
from .io import Checkpoint
from .l1 import L1State
from .l2 import L2State, revise_observations
from .oracle import oracle_l1, oracle_lstsq, oracle_pinv, oracle_svd, penrose_residuals
from .pinv import PinvState
from .svd import TRUNC_TOL, SvdState

VERIFY_TOL = 1e-8
CHECKPOINT_PENROSE_TOL = 1e-8


def _kind_name(kind: emb.EmbeddingKind) -> tuple[str, int | None]:
    return kind.name, kind.degree_bound


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(1.0, np.linalg.norm(b)))


class L2Engine:
    mode = "l2"

    def __init__(self, state: L2State):
        self.state = state

    @classmethod
    def build(cls, g: DynamicGraph, kind: emb.EmbeddingKind, b, tol: float | None = None):
        return cls(L2State.init(g, kind, b, tol))

    @property
    def graph(self) -> DynamicGraph:
        return self.state.graph

    @property
    def kind(self) -> emb.EmbeddingKind:
        return self.state.kind

    @property
    def b(self) -> np.ndarray:
        return self.state.b

    def update(self, u: GraphUpdate) -> int:
        return self.state.update(u)

    def rebuild(self, u: GraphUpdate) -> None:
        """Apply ``u`` by recomputing everything for the revised graph."""
        b = revise_observations(self.state.b, u)
        g = self.state.graph.copy()
        g.apply(u)
        self.state = L2State.init(g, self.state.kind, b, self.state.pinv._tol)

    def record(self, with_x: bool = False) -> dict:
        s = self.state
        n, m = s.M.shape
        rec = {"n": n, "m": m, "norm": "l2", "residual": s.residual(),
               "x_norm": float(np.linalg.norm(s.x))}
        if with_x:
            rec["x"] = s.x.tolist()
        return rec

    def verify(self) -> bool:
        s = self.state
        P = oracle_pinv(s.M)
        x = oracle_lstsq(s.M, s.b)
        return bool(_rel(s.Mdag, P) <= VERIFY_TOL and _rel(s.x, x) <= VERIFY_TOL)

    def checkpoint(self) -> Checkpoint:
        s = self.state
        name, bound = _kind_name(s.kind)
        return Checkpoint("l2", name, bound, {"tol": s.pinv._tol}, s.graph.copy(),
                          {"b": s.b, "M": s.M, "Mdag": s.Mdag})

    @classmethod
    def restore(cls, ck: Checkpoint) -> "L2Engine":
        kind, g = _restore_common(ck)
        M, P, b = _array(ck, "M", 2), _array(ck, "Mdag", 2), _array(ck, "b", 1)
        _check_embedding(ck, g, kind, M)
        if P.shape != M.shape[::-1]:
            raise FormatError(f"Mdag has shape {P.shape} for M of shape {M.shape}", ck.source)
        worst = max(penrose_residuals(M, P)) if M.size else 0.0
        if worst > CHECKPOINT_PENROSE_TOL:
            raise FormatError(f"stored pseudoinverse violates the Penrose conditions ({worst:.2e})",
                              ck.source)
        try:
            return cls(L2State(g, kind, PinvState(M, P, ck.params.get("tol")), b))
        except ShapeMismatch as exc:
            raise FormatError(str(exc), ck.source) from None


class L1Engine:
    mode = "l1"

    def __init__(self, state: L1State):
        self.state = state

    @classmethod
    def build(cls, g: DynamicGraph, kind: emb.EmbeddingKind, b):
        return cls(L1State.init(g, kind, b))

    @property
    def graph(self) -> DynamicGraph:
        return self.state.graph

    @property
    def kind(self) -> emb.EmbeddingKind:
        return self.state.kind

    @property
    def b(self) -> np.ndarray:
        return self.state.b

    def update(self, u: GraphUpdate) -> int:
        return self.state.update(u)

    def rebuild(self, u: GraphUpdate) -> None:
        b = revise_observations(self.state.b, u)
        g = self.state.graph.copy()
        g.apply(u)
        self.state = L1State.init(g, self.state.kind, b)

    def record(self, with_x: bool = False) -> dict:
        s = self.state
        n, m = s.M.shape
        rec = {"n": n, "m": m, "norm": "l1", "objective": s.objective,
               "residual": s.objective, "x_norm": float(np.linalg.norm(s.x))}
        if with_x:
            rec["x"] = s.x.tolist()
        return rec

    def verify(self) -> bool:
        s = self.state
        _, obj = oracle_l1(s.M, s.b)
        close = abs(s.objective - obj) <= VERIFY_TOL * max(1.0, abs(obj))
        return bool(close and s.certificate().holds(s.objective))

    def checkpoint(self) -> Checkpoint:
        s = self.state
        name, bound = _kind_name(s.kind)
        return Checkpoint("l1", name, bound, {}, s.graph.copy(),
                          {"b": s.b, "M": s.M}, basis=list(s.basis))

    @classmethod
    def restore(cls, ck: Checkpoint) -> "L1Engine":
        kind, g = _restore_common(ck)
        M, b = _array(ck, "M", 2), _array(ck, "b", 1)
        _check_embedding(ck, g, kind, M)
        if b.shape != (M.shape[0],):
            raise FormatError("b does not match the embedding", ck.source)
        s = L1State(M, b, g, kind)
        try:
            s.restart(ck.basis if ck.basis is not None else [])
        except ValueError as exc:
            raise FormatError(f"checkpoint basis: {exc}", ck.source) from None
        except np.linalg.LinAlgError:
            raise FormatError("checkpoint basis is singular", ck.source) from None
        return cls(s)


class SvdEngine:
    mode = "svd"

    def __init__(self, state: SvdState, graph: DynamicGraph, kind: emb.EmbeddingKind, b=None):
        self.state = state
        self._graph = graph
        self._kind = kind
        self._b = None if b is None else np.array(b, dtype=float)

    @classmethod
    def build(cls, g: DynamicGraph, kind: emb.EmbeddingKind, b=None,
              rank_cap: int | None = None, trunc_tol: float = TRUNC_TOL):
        return cls(SvdState.from_matrix(emb.materialize(g, kind), rank_cap, trunc_tol),
                   g.copy(), kind, b)

    @property
    def graph(self) -> DynamicGraph:
        return self._graph

    @property
    def kind(self) -> emb.EmbeddingKind:
        return self._kind

    @property
    def b(self):
        return self._b

    def _revise_b(self, u: GraphUpdate) -> None:
        if self._b is None:
            return
        if isinstance(u, NodeInsert) and u.observation is None:
            self._b = None
        else:
            self._b = revise_observations(self._b, u)

    def update(self, u: GraphUpdate) -> int:
        emb.require_supported(self._kind, u, "svd")
        delta = emb.delta_for_update(self._graph, u, self._kind, compact=True)
        pairs = self.state.apply_delta(delta)
        self._revise_b(u)
        self._graph.apply(u)
        return pairs

    def rebuild(self, u: GraphUpdate) -> None:
        self._revise_b(u)
        self._graph.apply(u)
        self.state = SvdState.from_matrix(emb.materialize(self._graph, self._kind),
                                          self.state.rank_cap, self.state.trunc_tol)

    def record(self, with_x: bool = False) -> dict:
        s = self.state
        M = emb.materialize(self._graph, self._kind)
        n, m = M.shape
        return {"n": n, "m": m, "norm": "svd", "rank": s.rank, "sigma": s.sigma.tolist(),
                "residual": float(np.linalg.norm(s.matrix() - M)), "x_norm": None}

    def verify(self) -> bool:
        s = self.state
        M = emb.materialize(self._graph, self._kind)
        _, sig, _ = oracle_svd(M, cutoff=s.trunc_tol)
        sig = sig[:s.cap()]
        if sig.shape != s.sigma.shape:
            # values near the truncation threshold may be kept by one side only
            k = max(sig.size, s.sigma.size)
            a, c = np.zeros(k), np.zeros(k)
            a[:sig.size], c[:s.sigma.size] = sig, s.sigma
            sig, sv = a, c
        else:
            sv = s.sigma
        ok_sigma = sig.size == 0 or float(np.abs(sig - sv).max()) <= VERIFY_TOL * max(1.0, sig[0])
        _, full, _ = oracle_svd(M)
        best = float(np.sqrt(np.sum(full[s.cap():] ** 2)))
        err = float(np.linalg.norm(s.matrix() - M))
        return bool(ok_sigma and err <= best + VERIFY_TOL * max(1.0, np.linalg.norm(M)))

    def checkpoint(self) -> Checkpoint:
        s = self.state
        name, bound = _kind_name(self._kind)
        arrays = {"U": s.U, "sigma": s.sigma, "V": s.V}
        if self._b is not None:
            arrays["b"] = self._b
        cap = None if s.rank_cap is None else int(s.rank_cap)
        return Checkpoint("svd", name, bound, {"rank_cap": cap, "trunc_tol": s.trunc_tol},
                          self._graph.copy(), arrays)

    @classmethod
    def restore(cls, ck: Checkpoint) -> "SvdEngine":
        kind, g = _restore_common(ck)
        U, sigma, V = _array(ck, "U", 2), _array(ck, "sigma", 1), _array(ck, "V", 2)
        cap = ck.params.get("rank_cap")
        try:
            s = SvdState(U, sigma, V, None if cap is None else int(cap),
                         ck.params.get("trunc_tol", TRUNC_TOL))
        except (ShapeMismatch, ValueError) as exc:
            raise FormatError(str(exc), ck.source) from None
        if s.shape != (g.n, g.n):
            raise FormatError(f"factors describe a {s.shape} matrix, graph has {g.n} nodes", ck.source)
        if s.orthogonality_error() > 1e-8 * max(1, s.rank):
            raise FormatError("stored singular vectors are not orthonormal", ck.source)
        b = ck.arrays.get("b")
        return cls(s, g, kind, b)


ENGINES = {"l2": L2Engine, "l1": L1Engine, "svd": SvdEngine}


def _array(ck: Checkpoint, name: str, ndim: int) -> np.ndarray:
    if name not in ck.arrays:
        raise FormatError(f"checkpoint lacks {name!r}", ck.source)
    A = np.asarray(ck.arrays[name], dtype=float)
    if A.ndim != ndim:
        raise FormatError(f"checkpoint entry {name!r} has the wrong kind", ck.source)
    return A


def _restore_common(ck: Checkpoint):
    try:
        kind = emb.EmbeddingKind(ck.embedding, ck.degree_bound)
    except ValueError as exc:
        raise FormatError(str(exc), ck.source) from None
    if ck.graph is None:
        raise FormatError("checkpoint lacks the graph", ck.source)
    return kind, ck.graph


def _check_embedding(ck: Checkpoint, g: DynamicGraph, kind: emb.EmbeddingKind, M: np.ndarray):
    try:
        expected = emb.materialize(g, kind)
    except Exception as exc:
        raise FormatError(str(exc), ck.source) from None
    if expected.shape != M.shape or not np.allclose(expected, M, rtol=0, atol=1e-12):
        raise FormatError("stored matrix does not match the embedding of the stored graph", ck.source)


def restore(ck: Checkpoint):
    return ENGINES[ck.mode].restore(ck)
