"""Least absolute deviation regression, re-optimized after each edge update.

The fit  min_x ||M x - b||_1  is the linear program

    min  sum(u) + sum(v)   s.t.   M x + u - v = b,   x free,  u, v >= 0

solved with a revised primal simplex that keeps a dense basis inverse.  After
an edge update M changes by c d^T, which changes the basis matrix by the
rank-1 term c d_B^T (d restricted to the basic x columns); the basis inverse
is patched with Sherman-Morrison and primal feasibility is restored by
swapping a negative basic slack for its twin, which only negates one row of
the inverse.  If the change makes the basis singular, one basic x column is
traded for a free slack in the same rank-2 patch.  The simplex then
continues from that basis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import embedding as emb
from .errors import ConvergenceFailure, ShapeMismatch, UnsupportedOperation
from .graph import DynamicGraph, EDGE_OPS, GraphUpdate

log = logging.getLogger(__name__)

PRICE_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
# warm starts between unconditional refactorizations of the basis inverse
WARM_REFACTOR_EVERY = 25
STALL_LIMIT = 50
# a Sherman-Morrison denominator below this makes the warm basis singular
SINGULAR_TOL = 1e-9


@dataclass
class Certificate:
    """Dual evidence of optimality: y with |y| <= 1, M^T y = 0, b^T y = objective."""
    y: np.ndarray
    dual_bound: float
    stationarity: float
    dual_objective: float

    def gap(self, objective: float) -> float:
        return abs(objective - self.dual_objective)

    def holds(self, objective: float, tol: float = 1e-8) -> bool:
        """True when y proves that ``objective`` is the optimal value."""
        scale = 1.0 + abs(objective)
        return (self.dual_bound <= 1.0 + tol and self.stationarity <= tol * scale
                and self.gap(objective) <= tol * scale)


class _Simplex:
    """Revised primal simplex over variables [x (m, free), u (n), v (n)]."""

    def __init__(self, M: np.ndarray, b: np.ndarray, basis: np.ndarray, Binv: np.ndarray):
        self.M = M
        self.b = b
        self.basis = basis
        self.Binv = Binv
        self.pivots = 0
        self._since_refactor = 0

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.M.shape[1]

    def column(self, j: int) -> np.ndarray:
        n, m = self.M.shape
        if j < m:
            return self.M[:, j]
        e = np.zeros(n)
        e[(j - m) % n] = 1.0 if j < m + n else -1.0
        return e

    def cost(self, j: int) -> float:
        return 0.0 if j < self.m else 1.0

    def basis_matrix(self) -> np.ndarray:
        return np.column_stack([self.column(j) for j in self.basis]) if self.n else np.zeros((0, 0))

    def refactor(self) -> None:
        self.Binv = np.linalg.inv(self.basis_matrix())
        self._since_refactor = 0

    def accurate(self, tol: float = 1e-10) -> bool:
        """Cheap check that the basis inverse still solves B x_B = b."""
        if self.n == 0:
            return True
        xB = self.values()
        r = self.basis_matrix() @ xB - self.b
        return bool(np.linalg.norm(r) <= tol * (1.0 + np.linalg.norm(self.b) + np.linalg.norm(xB)))

    def values(self) -> np.ndarray:
        return self.Binv @ self.b

    def duals(self) -> np.ndarray:
        cB = np.array([self.cost(j) for j in self.basis])
        return cB @ self.Binv

    def fix_twins(self) -> int:
        """Swap every negative basic slack for its twin; returns swaps made."""
        xB = self.values()
        n, m = self.n, self.m
        swaps = 0
        for r, j in enumerate(self.basis):
            if j >= m and xB[r] < 0:
                self.basis[r] = j + n if j < m + n else j - n
                self.Binv[r] *= -1.0
                swaps += 1
        return swaps

    def price(self, y: np.ndarray, bland: bool):
        """Entering variable and direction (+1 increase, -1 decrease), or None."""
        n, m = self.n, self.m
        in_basis = np.zeros(m + 2 * n, dtype=bool)
        in_basis[self.basis] = True
        rx = -(y @ self.M)
        ru = 1.0 - y
        rv = 1.0 + y
        # score = improvement rate of moving the variable in its good direction
        score = np.concatenate([np.abs(rx), -ru, -rv])
        score[in_basis] = 0.0
        eligible = np.flatnonzero(score > PRICE_TOL)
        if eligible.size == 0:
            return None
        q = int(eligible[0]) if bland else int(eligible[np.argmax(score[eligible])])
        direction = 1.0
        if q < m and rx[q] > 0:
            direction = -1.0
        return q, direction

    def ratio(self, w: np.ndarray, xB: np.ndarray, bland: bool):
        """Leaving row for moving along -w; None means unbounded."""
        m = self.m
        best, best_t, best_w = None, np.inf, 0.0
        for r, j in enumerate(self.basis):
            if j < m or w[r] <= PIVOT_TOL:
                continue
            t = max(xB[r], 0.0) / w[r]
            if t < best_t - 1e-12:
                best, best_t, best_w = r, t, w[r]
            elif t <= best_t + 1e-12:
                if bland:
                    if j < self.basis[best]:
                        best, best_w = r, w[r]
                elif w[r] > best_w:
                    best, best_w = r, w[r]
        return best, best_t

    def pivot(self, r: int, q: int, w: np.ndarray) -> None:
        piv = w[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(w, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.pivots += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def run(self, max_pivots: int | None = None) -> None:
        if max_pivots is None:
            max_pivots = 50 * (self.n + self.m) + 1000
        stalled = 0
        bland = False
        start = self.pivots
        while self.pivots - start < max_pivots:
            y = self.duals()
            entering = self.price(y, bland)
            if entering is None:
                return
            q, direction = entering
            w = direction * (self.Binv @ self.column(q))
            xB = self.values()
            r, t = self.ratio(w, xB, bland)
            if r is None:
                raise ConvergenceFailure("l1 simplex found an unbounded direction")
            # pivot with the signed column so the entering value is t >= 0
            if direction < 0:
                # a decreasing free variable: pivot on the true column
                w = -w
            self.pivot(r, q, w)
            if t <= 1e-12:
                stalled += 1
                if stalled >= STALL_LIMIT and not bland:
                    log.debug("l1 simplex stalled; switching to Bland's rule")
                    bland = True
            else:
                stalled = 0
        raise ConvergenceFailure(f"l1 simplex did not finish in {max_pivots} pivots")

    def solution(self) -> np.ndarray:
        x = np.zeros(self.m)
        xB = self.values()
        if self.n:
            # two steps of iterative refinement against the true basis matrix
            B = self.basis_matrix()
            for _ in range(2):
                xB = xB + self.Binv @ (self.b - B @ xB)
        for r, j in enumerate(self.basis):
            if j < self.m:
                x[j] = xB[r]
        return x


def _swap_out_singular(basis, Binv, m, c, dB, z, dBinv, denom) -> bool:
    """Repair a basis made singular by the change c d_B^T, in place.

    z = B^-1 c spans the null space of the changed basis, so some basic x
    column with z_r != 0 is traded for a slack e_i that neither twin of row
    i already occupies.  Both changes together form a rank-2 modification
    handled by the Woodbury identity; i is chosen to keep its 2 x 2
    capacitance matrix as well conditioned as possible.  Returns False when
    no usable swap exists.
    """
    n = Binv.shape[0]
    xrows = np.flatnonzero(basis < m)
    if xrows.size == 0:
        return False
    r = int(xrows[np.argmax(np.abs(z[xrows]))])
    if abs(z[r]) <= PIVOT_TOL:
        return False
    occupied = np.zeros(n, dtype=bool)
    for j in basis:
        if j >= m:
            occupied[(j - m) % n] = True
    # capacitance entries for every candidate slack e_i at once
    c11 = denom
    c12 = dBinv - dB[r] * denom
    c21 = z[r]
    c22 = Binv[r] - z[r] * dB[r]
    det = c11 * c22 - c12 * c21
    det[occupied] = 0.0
    i = int(np.argmax(np.abs(det)))
    if abs(det[i]) <= SINGULAR_TOL:
        return False
    # B'' = B + U W^T with U = [c, e_i - B_r - c dB_r], W = [d_B, e_r]
    BU = np.column_stack([z, Binv[:, i] - np.eye(n)[r] - z * dB[r]])
    WB = np.vstack([dBinv, Binv[r]])
    C = np.array([[c11, c12[i]], [c21, c22[i]]])
    Binv -= BU @ np.linalg.solve(C, WB)
    basis[r] = m + i
    return True


def _scratch_basis(b: np.ndarray, m: int):
    n = b.shape[0]
    rows = np.arange(n)
    basis = np.where(b >= 0, m + rows, m + n + rows)
    Binv = np.diag(np.where(b >= 0, 1.0, -1.0))
    return basis, Binv


class L1State:
    """Optimal basic solution of min ||M x - b||_1 for a graph embedding M."""

    def __init__(self, M, b, graph: DynamicGraph | None = None,
                 kind: emb.EmbeddingKind = emb.ADJACENCY):
        self.M = np.array(M, dtype=float)
        self.b = np.array(b, dtype=float)
        if self.M.ndim != 2 or self.b.shape != (self.M.shape[0],):
            raise ShapeMismatch(f"b of shape {self.b.shape} for a matrix of shape {self.M.shape}")
        self.graph = graph
        self.kind = kind
        self.basis = np.zeros(0, dtype=int)
        self.Binv = np.zeros((0, 0))
        self.x = np.zeros(self.M.shape[1])
        self.objective = 0.0
        self.pivots = 0
        self.scratch_fallbacks = 0
        self._warm = 0

    @classmethod
    def init(cls, g: DynamicGraph, kind: emb.EmbeddingKind, b) -> "L1State":
        s = cls(emb.materialize(g, kind), b, g.copy(), kind)
        if s.b.shape != (g.n,):
            raise ShapeMismatch(f"b has length {s.b.shape}, graph has {g.n} nodes")
        return s.solve()

    def copy(self) -> "L1State":
        s = L1State(self.M.copy(), self.b.copy(),
                    None if self.graph is None else self.graph.copy(), self.kind)
        s.basis = self.basis.copy()
        s.Binv = self.Binv.copy()
        s.x = self.x.copy()
        s.objective = self.objective
        s.pivots = self.pivots
        s.scratch_fallbacks = self.scratch_fallbacks
        s._warm = self._warm
        return s

    def _finish(self, sx: _Simplex) -> "L1State":
        sx.run()
        if not sx.accurate():
            sx.refactor()
            sx.run()
        self.basis, self.Binv = sx.basis, sx.Binv
        self.x = sx.solution()
        self.objective = float(np.abs(self.M @ self.x - self.b).sum())
        self.pivots = sx.pivots
        return self

    def solve(self) -> "L1State":
        """Solve from the all-slack basis."""
        basis, Binv = _scratch_basis(self.b, self.M.shape[1])
        return self._finish(_Simplex(self.M, self.b, basis, Binv))

    def restart(self, basis) -> "L1State":
        """Re-optimize starting from a given set of basic variables.

        Raises ValueError for an index set that is not a basis and
        numpy.linalg.LinAlgError when the basis matrix is singular.
        """
        n, m = self.M.shape
        basis = np.array(basis, dtype=int)
        if basis.shape != (n,) or len(set(basis.tolist())) != n or \
                np.any(basis < 0) or np.any(basis >= m + 2 * n):
            raise ValueError("not a valid set of basic variables")
        sx = _Simplex(self.M, self.b, basis, np.zeros((n, n)))
        sx.refactor()
        sx.fix_twins()
        return self._finish(sx)

    def rank1_update(self, c, d) -> "L1State":
        """Replace M by M + c d^T and re-optimize from the current basis."""
        return self.apply_pairs([emb.ApplyPair(np.asarray(c, float), np.asarray(d, float))])

    def apply_pairs(self, pairs) -> "L1State":
        n, m = self.M.shape
        Binv = self.Binv.copy()
        basis = self.basis.copy()
        ok = True
        for p in pairs:
            if p.c.shape != (n,) or p.d.shape != (m,):
                raise ShapeMismatch(f"update vectors of lengths {p.c.shape}, {p.d.shape} "
                                    f"for a {n}x{m} matrix")
            self.M += np.outer(p.c, p.d)
            if not ok:
                continue
            dB = np.array([p.d[j] if j < m else 0.0 for j in basis])
            if not np.any(dB):
                continue
            Bc = Binv @ p.c
            dBinv = dB @ Binv
            denom = 1.0 + dB @ Bc
            if abs(denom) > SINGULAR_TOL * (1.0 + np.linalg.norm(dB) * np.linalg.norm(Bc)):
                Binv -= np.outer(Bc, dBinv) / denom
            else:
                ok = _swap_out_singular(basis, Binv, m, p.c, dB, Bc, dBinv, denom)
        if not pairs:
            return self
        if not ok:
            self.scratch_fallbacks += 1
            log.debug("warm basis could not be repaired; solving from scratch")
            return self.solve()
        sx = _Simplex(self.M, self.b, basis, Binv)
        self._warm += 1
        if self._warm % WARM_REFACTOR_EVERY == 0:
            sx.refactor()
        sx.fix_twins()
        return self._finish(sx)

    def update(self, u: GraphUpdate) -> int:
        """Apply an edge update; returns the rank-1 pairs applied."""
        if not isinstance(u, EDGE_OPS):
            raise UnsupportedOperation(f"{type(u).__name__} is not supported in l1 mode")
        if self.graph is None:
            raise UnsupportedOperation("this state was built from a bare matrix, not a graph")
        emb.require_supported(self.kind, u, "l1")
        delta = emb.delta_for_update(self.graph, u, self.kind, compact=True)
        self.apply_pairs(delta.pairs)
        self.graph.apply(u)
        return delta.num_pairs

    # ---- certification ---------------------------------------------------

    @property
    def active_rows(self) -> np.ndarray:
        """Rows whose residual is pinned to zero (neither slack is basic)."""
        n, m = self.M.shape
        basic = np.zeros(n, dtype=bool)
        for j in self.basis:
            if j >= m:
                basic[(j - m) % n] = True
        return np.flatnonzero(~basic)

    def certificate(self) -> Certificate:
        n, m = self.M.shape
        cB = np.array([0.0 if j < m else 1.0 for j in self.basis])
        y = cB @ self.Binv if n else np.zeros(0)
        return Certificate(
            y=y,
            dual_bound=float(np.abs(y).max()) if n else 0.0,
            stationarity=float(np.abs(self.M.T @ y).max()) if m and n else 0.0,
            dual_objective=float(self.b @ y),
        )

    def residual(self) -> float:
        return float(np.abs(self.M @ self.x - self.b).sum())


def solve_l1(M, b) -> L1State:
    return L1State(M, b).solve()


def init_l1(g: DynamicGraph, kind: emb.EmbeddingKind, b) -> L1State:
    return L1State.init(g, kind, b)


def update_l1(s: L1State, u: GraphUpdate) -> L1State:
    s = s.copy()
    s.update(u)
    return s
