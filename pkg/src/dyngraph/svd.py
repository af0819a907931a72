"""Thin SVD of a graph embedding, kept current under rank-1 changes and appends.

A rank-1 change M + c d^T is absorbed by projecting c and d onto the current
left/right singular subspaces, extending each basis by the normalized
residual, rediagonalizing the small (k+1) x (k+1) core and rotating the
extended bases.  Appending a column pads V with a zero row and then applies
the rank-1 change a e_new^T (rows are handled symmetrically), so one
mechanism serves every supported graph update.
"""
from __future__ import annotations

import numpy as np

from . import embedding as emb
from .errors import ShapeMismatch, UnsupportedOperation
from .flops import mv, rotate, small, tally, vm
from .graph import DynamicGraph, GraphUpdate, NodeDelete
from .oracle import oracle_svd

TRUNC_TOL = 1e-12
# a projection residual below this fraction of the vector norm adds no direction
EXTEND_TOL = 1e-13
ORTHO_TOL = 1e-10


class SvdState:
    """Factors ``U`` (n x k), ``sigma`` (k), ``V`` (m x k) of a matrix.

    ``rank_cap`` of None means no cap beyond min(n, m).  Singular values below
    ``trunc_tol * sigma[0]`` are discarded after every update; after a rank-1
    change the reference scale is the largest of the old and new leading
    singular values and ||c|| ||d||, so a change that cancels M entirely
    leaves an empty factorization.
    """

    def __init__(self, U, sigma, V, rank_cap: int | None = None, trunc_tol: float = TRUNC_TOL):
        self.U = np.array(U, dtype=float)
        self.sigma = np.array(sigma, dtype=float)
        self.V = np.array(V, dtype=float)
        k = self.sigma.shape[0]
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != k or self.V.shape[1] != k:
            raise ShapeMismatch(f"factors {self.U.shape}, {self.sigma.shape}, {self.V.shape} disagree")
        if rank_cap is not None and rank_cap < 1:
            raise ValueError("rank cap must be positive")
        self.rank_cap = rank_cap
        self.trunc_tol = trunc_tol
        self.reorthogonalizations = 0

    @classmethod
    def from_matrix(cls, M, rank_cap: int | None = None,
                    trunc_tol: float = TRUNC_TOL) -> "SvdState":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ShapeMismatch("expected a 2-d matrix")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix entries must be finite")
        U, s, V = oracle_svd(M, cutoff=trunc_tol)
        if rank_cap is not None:
            U, s, V = U[:, :rank_cap], s[:rank_cap], V[:, :rank_cap]
        return cls(U, s, V, rank_cap, trunc_tol)

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    def cap(self) -> int:
        n, m = self.shape
        return min(n, m) if self.rank_cap is None else min(self.rank_cap, n, m)

    def copy(self) -> "SvdState":
        s = SvdState(self.U.copy(), self.sigma.copy(), self.V.copy(), self.rank_cap, self.trunc_tol)
        s.reorthogonalizations = self.reorthogonalizations
        return s

    def matrix(self) -> np.ndarray:
        """U diag(sigma) V^T."""
        return (self.U * self.sigma) @ self.V.T

    def orthogonality_error(self) -> float:
        k = self.rank
        if k == 0:
            return 0.0
        I = np.eye(k)
        return max(np.linalg.norm(self.U.T @ self.U - I), np.linalg.norm(self.V.T @ self.V - I))

    # ---- updates ---------------------------------------------------------

    def rank1_update(self, c, d) -> "SvdState":
        """Replace the factored matrix M by M + c d^T."""
        n, m = self.shape
        c = np.asarray(c, dtype=float)
        d = np.asarray(d, dtype=float)
        if c.shape != (n,) or d.shape != (m,):
            raise ShapeMismatch(f"update vectors of lengths {c.shape}, {d.shape} for a {n}x{m} matrix")
        if not np.any(c) or not np.any(d):
            return self
        k = self.rank
        pc, P, rc = _project(self.U, c)
        pd, Q, rd = _project(self.V, d)

        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = np.diag(self.sigma)
        K += np.outer(np.append(pc, rc), np.append(pd, rd))
        small(k + 1)
        Uk, s, Vkt = np.linalg.svd(K)

        # cancellation can leave residue far below the pre-update scale
        scale = max(s[0], self.sigma[0] if k else 0.0, np.linalg.norm(c) * np.linalg.norm(d))
        keep = self._keep(s, scale)
        Uk, s, Vk = Uk[:, :keep], s[:keep], Vkt[:keep].T
        self.U = rotate(np.column_stack([self.U, P]), Uk)
        self.V = rotate(np.column_stack([self.V, Q]), Vk)
        self.sigma = s.copy()
        self._normalize_signs()
        self._maintain_orthogonality()
        return self

    def _keep(self, s: np.ndarray, scale: float | None = None) -> int:
        if s.size == 0 or s[0] == 0.0:
            return 0
        keep = int(np.sum(s > self.trunc_tol * (s[0] if scale is None else scale)))
        return min(keep, self.cap())

    def append_column(self, a) -> "SvdState":
        """Factor [M a]."""
        n, m = self.shape
        a = np.asarray(a, dtype=float)
        if a.shape != (n,):
            raise ShapeMismatch(f"column of length {a.shape} for {n} rows")
        self.V = np.vstack([self.V, np.zeros((1, self.rank))])
        e = np.zeros(m + 1)
        e[m] = 1.0
        return self.rank1_update(a, e)

    def append_row(self, a) -> "SvdState":
        """Factor M with the row a appended."""
        n, m = self.shape
        a = np.asarray(a, dtype=float)
        if a.shape != (m,):
            raise ShapeMismatch(f"row of length {a.shape} for {m} columns")
        self.U = np.vstack([self.U, np.zeros((1, self.rank))])
        e = np.zeros(n + 1)
        e[n] = 1.0
        return self.rank1_update(e, a)

    def apply_delta(self, delta: emb.EmbeddingDelta) -> int:
        """Replay an embedding delta; returns the rank-1 pairs applied."""
        pairs = 0
        for step in delta.steps:
            if isinstance(step, emb.ApplyPair):
                self.rank1_update(step.c, step.d)
                pairs += 1
            elif isinstance(step, emb.AppendColumn):
                self.append_column(step.a)
            elif isinstance(step, emb.AppendRow):
                self.append_row(step.a)
            else:
                raise UnsupportedOperation(f"{type(step).__name__} is not supported by the SVD engine")
        return pairs

    # ---- housekeeping ----------------------------------------------------

    def _normalize_signs(self) -> None:
        for j in range(self.rank):
            col = self.U[:, j]
            big = np.abs(col) > 1e-8 * np.abs(col).max()
            if col[np.argmax(big)] < 0:
                self.U[:, j] *= -1
                self.V[:, j] *= -1

    def _maintain_orthogonality(self) -> None:
        k = self.rank
        if k == 0:
            return
        # Gram matrices cost O((n + m) k^2), the same order as the rotation
        tally.add((self.U.shape[0] + self.V.shape[0]) * k * k)
        if self.orthogonality_error() <= ORTHO_TOL * k:
            return
        self.reorthogonalizations += 1
        Qu, Ru = np.linalg.qr(self.U)
        Qv, Rv = np.linalg.qr(self.V)
        Uk, s, Vkt = np.linalg.svd((Ru * self.sigma) @ Rv.T)
        keep = self._keep(s)
        self.U = rotate(Qu, Uk[:, :keep])
        self.V = rotate(Qv, Vkt[:keep].T)
        self.sigma = s[:keep].copy()
        self._normalize_signs()


def _project(B: np.ndarray, x: np.ndarray):
    """Split x into coordinates in span(B) and a unit residual direction.

    Two passes of classical Gram-Schmidt; returns ``(coords, unit, norm)``
    where ``unit`` is zero when the residual is negligible.
    """
    coords = vm(x, B)
    r = x - mv(B, coords)
    again = vm(r, B)
    coords = coords + again
    r = r - mv(B, again)
    nr = float(np.linalg.norm(r))
    if nr <= EXTEND_TOL * np.linalg.norm(x):
        return coords, np.zeros_like(x), 0.0
    return coords, r / nr, nr


# ---- functional forms -----------------------------------------------------

def svd_from_scratch(M, rank_cap: int | None = None, trunc_tol: float = TRUNC_TOL) -> SvdState:
    return SvdState.from_matrix(M, rank_cap, trunc_tol)


def rank1_update_svd(s: SvdState, c, d) -> SvdState:
    return s.copy().rank1_update(c, d)


def append_column_svd(s: SvdState, a) -> SvdState:
    return s.copy().append_column(a)


def append_row_svd(s: SvdState, a) -> SvdState:
    return s.copy().append_row(a)


def update_svd_for_graph(s: SvdState, g_before: DynamicGraph, u: GraphUpdate,
                         kind: emb.EmbeddingKind = emb.ADJACENCY) -> SvdState:
    """Factor the embedding of ``g_before`` after ``u``; ``s`` is left untouched."""
    if isinstance(u, NodeDelete):
        raise UnsupportedOperation("node deletion is not supported by the SVD engine")
    emb.require_supported(kind, u, "svd")
    delta = emb.delta_for_update(g_before, u, kind, compact=True)
    s = s.copy()
    s.apply_delta(delta)
    return s


def low_rank_approx(s: SvdState) -> np.ndarray:
    return s.matrix()
