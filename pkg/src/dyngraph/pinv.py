"""Incremental maintenance of a matrix together with its Moore-Penrose pseudoinverse.

Every operation on :class:`PinvState` costs O(n m): rank-1 modifications use
Meyer's case analysis, column/row appends use Greville's recursion, and
removal of the last column/row inverts the Greville step.
"""
from __future__ import annotations

import logging

import numpy as np

from . import embedding as emb
from .errors import EmptyMatrix, ShapeMismatch
from .flops import add_outer, mv, vm
from .oracle import oracle_pinv

log = logging.getLogger(__name__)

# probe residual above which the pseudoinverse is recomputed from scratch
DRIFT_LIMIT = 1e-11
# the same, for the probe residual times the condition estimate ||M|| ||M+||,
# which bounds the relative error of M+ itself
FORWARD_LIMIT = 1e-9
# zero tests widen to this multiple of the current drift estimate
DRIFT_MARGIN = 100.0


def default_tol(n: int, m: int) -> float:
    return 1e-12 * max(n, m, 1)


def _negligible(norm: float, scale: float, tol: float) -> bool:
    return norm <= tol * (1.0 + scale)


def _conditioning(A: np.ndarray, G: np.ndarray) -> float:
    """||A||_F ||A+||_F, floored at 1; bounds the error amplification of A A+ x."""
    return max(1.0, float(np.linalg.norm(A) * np.linalg.norm(G)))


class PinvState:
    """A matrix ``M`` (n x m) and its maintained pseudoinverse ``Mdag`` (m x n).

    Methods update the state in place and return it; use :meth:`copy` to keep
    a snapshot.  ``tol`` of None means the size-scaled default
    ``1e-12 * max(n, m)``.

    Zero tests compare against ``tol * ||M||_F ||M+||_F`` (raised to a multiple
    of the current drift estimate when that is larger).  With ``guard`` on,
    every operation ends with an O(n m) randomized Penrose probe; the probe
    value becomes the drift estimate.  A probe above :data:`DRIFT_LIMIT`, or
    a probe whose product with the condition estimate exceeds
    :data:`FORWARD_LIMIT`, triggers a from-scratch recompute (counted in
    ``recomputes``).
    """

    def __init__(self, M, Mdag, tol: float | None = None, guard: bool = True):
        self.M = np.array(M, dtype=float)
        self.Mdag = np.array(Mdag, dtype=float)
        if self.M.ndim != 2 or self.Mdag.shape != self.M.shape[::-1]:
            raise ShapeMismatch(f"pinv of shape {self.Mdag.shape} for matrix {self.M.shape}")
        self._tol = tol
        self.guard = guard
        self.drift = 0.0
        self.last_case = None
        self.recomputes = 0
        self._probes = 0

    @classmethod
    def from_matrix(cls, M, tol: float | None = None, guard: bool = True) -> "PinvState":
        M = np.array(M, dtype=float)
        if M.ndim != 2:
            raise ShapeMismatch("expected a 2-d matrix")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix entries must be finite")
        return cls(M, oracle_pinv(M), tol, guard)

    @property
    def shape(self) -> tuple[int, int]:
        return self.M.shape

    @property
    def tol(self) -> float:
        return default_tol(*self.M.shape) if self._tol is None else self._tol

    def copy(self) -> "PinvState":
        s = PinvState(self.M.copy(), self.Mdag.copy(), self._tol, self.guard)
        s.drift = self.drift
        s.recomputes = self.recomputes
        s._probes = self._probes
        return s

    def recompute(self) -> "PinvState":
        self.Mdag = oracle_pinv(self.M)
        self.drift = 0.0
        self.recomputes += 1
        return self

    def _zero_tol(self) -> float:
        return max(self.tol, DRIFT_MARGIN * self.drift) * _conditioning(self.M, self.Mdag)

    def _check_drift(self) -> None:
        if not self.guard:
            return
        self._probes += 1
        self.drift = self.probe_residual(self._probes)
        if self.drift > DRIFT_LIMIT or \
                self.drift * _conditioning(self.M, self.Mdag) > FORWARD_LIMIT:
            log.debug("Penrose probe %.2e on %s; recomputing pinv", self.drift, self.M.shape)
            self.recompute()

    # ---- rank-1 modification --------------------------------------------

    def rank1_update(self, c, d) -> "PinvState":
        """Replace M by M + c d^T and update the pseudoinverse in O(n m).

        With k = M+ c, h = d^T M+, u = (I - M M+) c, v = d^T (I - M+ M) and
        beta = 1 + d^T M+ c, one of six cases applies depending on whether
        u, v and beta vanish.  The beta != 0 cases 3 and 5 are written in a
        form without 1/beta, which also reduces to cases 2 and 4 at beta = 0.
        """
        A, G = self.M, self.Mdag
        n, m = A.shape
        c = np.asarray(c, dtype=float)
        d = np.asarray(d, dtype=float)
        if c.shape != (n,) or d.shape != (m,):
            raise ShapeMismatch(f"update vectors of lengths {c.shape}, {d.shape} for a {n}x{m} matrix")
        nc, nd = np.linalg.norm(c), np.linalg.norm(d)
        if nc == 0.0 or nd == 0.0:
            self.last_case = 0
            return self
        tol = self._zero_tol()
        k = mv(G, c)
        h = vm(d, G)
        u = c - mv(A, k)
        v = d - vm(h, A)
        dk = d @ k
        beta = 1.0 + dk
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        u_zero = _negligible(nu, nc, tol)
        v_zero = _negligible(nv, nd, tol)
        beta_zero = _negligible(abs(beta), nd * np.linalg.norm(k), tol)

        if not u_zero and not v_zero:
            case = 1
            uu = u / nu**2
            vv = v / nv**2
            add_outer(G, k, uu, -1.0)
            add_outer(G, vv, beta * uu - h)
        elif u_zero and not v_zero:
            case = 2 if beta_zero else 3
            g = vm(k, G)
            kk, vv2 = k @ k, nv**2
            sigma = kk * vv2 + beta**2
            add_outer(G, v, (beta * g - kk * h) / sigma)
            add_outer(G, k, (-vv2 * g - beta * h) / sigma)
        elif v_zero and not u_zero:
            case = 4 if beta_zero else 5
            e = mv(G, h)
            hh, uu2 = h @ h, nu**2
            sigma = hh * uu2 + beta**2
            add_outer(G, e, (beta * u - uu2 * h) / sigma)
            add_outer(G, k, (-hh * u - beta * h) / sigma)
        elif not beta_zero:
            case = 3
            add_outer(G, k, h, -1.0 / beta)
        else:
            case = 6
            g = vm(k, G)
            e = mv(G, h)
            kk, hh = k @ k, h @ h
            gh = g @ h
            add_outer(G, k, g / kk - (gh / (kk * hh)) * h, -1.0)
            add_outer(G, e, h, -1.0 / hh)
        add_outer(A, c, d)
        self.last_case = case
        self._check_drift()
        return self

    # ---- appends (Greville) ---------------------------------------------

    def append_column(self, a) -> "PinvState":
        """M <- [M a]."""
        A, G = self.M, self.Mdag
        n, m = A.shape
        a = np.asarray(a, dtype=float)
        if a.shape != (n,):
            raise ShapeMismatch(f"column of length {a.shape} for {n} rows")
        d = mv(G, a)
        c = a - mv(A, d)
        if np.linalg.norm(c) > self._zero_tol() * np.linalg.norm(a):
            f = c / (c @ c)
        else:
            f = vm(d, G) / (1.0 + d @ d)
        top = G.copy()
        add_outer(top, d, f, -1.0)
        self.Mdag = np.vstack([top, f[None, :]])
        self.M = np.column_stack([A, a])
        self._check_drift()
        return self

    def append_row(self, a) -> "PinvState":
        """M <- [M; a], using the row form of the Greville step."""
        A, G = self.M, self.Mdag
        n, m = A.shape
        a = np.asarray(a, dtype=float)
        if a.shape != (m,):
            raise ShapeMismatch(f"row of length {a.shape} for {m} columns")
        d = vm(a, G)
        c = a - vm(d, A)
        if np.linalg.norm(c) > self._zero_tol() * np.linalg.norm(a):
            f = c / (c @ c)
        else:
            f = mv(G, d) / (1.0 + d @ d)
        left = G.copy()
        add_outer(left, f, d, -1.0)
        self.Mdag = np.column_stack([left, f])
        self.M = np.vstack([A, a[None, :]])
        self._check_drift()
        return self

    # ---- removals (reverse Greville) ------------------------------------

    def remove_last_column(self) -> "PinvState":
        """M <- M[:, :-1].

        Writing M+ = [G; f] and a for the removed column: if a lies outside
        the span of the remaining columns then f a = 1 and the new
        pseudoinverse is G (I - f^T f / f f^T); otherwise it is
        G + G a f / (1 - f a).
        """
        A, P = self.M, self.Mdag
        n, m = A.shape
        if m == 0:
            raise EmptyMatrix("no column to remove")
        a = A[:, -1]
        f = P[-1]
        G = P[:-1].copy()
        fa = f @ a
        ff = f @ f
        if ff == 0.0:
            pass
        elif 1.0 - fa > self._zero_tol() * (1.0 + abs(fa)):
            add_outer(G, mv(G, a), f, 1.0 / (1.0 - fa))
        else:
            add_outer(G, mv(G, f), f, -1.0 / ff)
        self.M = A[:, :-1].copy()
        self.Mdag = G
        self._check_drift()
        return self

    def remove_last_row(self) -> "PinvState":
        """M <- M[:-1]; the transpose of :meth:`remove_last_column`."""
        A, P = self.M, self.Mdag
        n, m = A.shape
        if n == 0:
            raise EmptyMatrix("no row to remove")
        a = A[-1]
        f = P[:, -1]
        G = P[:, :-1].copy()
        fa = a @ f
        ff = f @ f
        if ff == 0.0:
            pass
        elif 1.0 - fa > self._zero_tol() * (1.0 + abs(fa)):
            add_outer(G, f, vm(a, G), 1.0 / (1.0 - fa))
        else:
            add_outer(G, f, vm(f, G), -1.0 / ff)
        self.M = A[:-1].copy()
        self.Mdag = G
        self._check_drift()
        return self

    def probe_residual(self, seed: int = 0) -> float:
        """Randomized Penrose check using only matrix-vector products.

        Returns the largest relative violation over probes of
        M P M = M, P M P = P and the symmetry of M P and P M, where P is the
        stored pseudoinverse.
        """
        A, P = self.M, self.Mdag
        n, m = A.shape
        if n == 0 or m == 0:
            return 0.0
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(m)
        w = rng.standard_normal(n)
        y = rng.standard_normal(n)
        x = rng.standard_normal(m)
        Az = mv(A, z)
        Pw = mv(P, w)
        nA = 1.0 + np.linalg.norm(A)
        nP = 1.0 + np.linalg.norm(P)
        r1 = np.linalg.norm(mv(A, mv(P, Az)) - Az) / (nA * np.linalg.norm(z))
        r2 = np.linalg.norm(mv(P, mv(A, Pw)) - Pw) / (nP * np.linalg.norm(w))
        APw = mv(A, Pw)
        r3 = abs(y @ APw - w @ mv(A, mv(P, y))) / (nA * nP * np.linalg.norm(y) * np.linalg.norm(w))
        PAz = mv(P, Az)
        r4 = abs(x @ PAz - z @ mv(P, mv(A, x))) / (nA * nP * np.linalg.norm(x) * np.linalg.norm(z))
        return max(r1, r2, r3, r4)

    # ---- permutation ----------------------------------------------------

    def permute_with_last(self, i: int) -> "PinvState":
        """Swap row and column ``i`` (1-based) of a square M with the last ones.

        (P M P)+ = P M+ P for a transposition P, so the same swap is applied
        to the rows and columns of the pseudoinverse.
        """
        n, m = self.M.shape
        if n != m:
            raise ShapeMismatch("permutation needs a square matrix")
        a = i - 1
        for X in (self.M, self.Mdag):
            X[[a, n - 1]] = X[[n - 1, a]]
            X[:, [a, n - 1]] = X[:, [n - 1, a]]
        return self

    def apply_delta(self, delta: emb.EmbeddingDelta, faithful: bool = False) -> int:
        """Replay an embedding delta step by step; returns the rank-1 pairs used.

        With ``faithful`` set, a permutation step is carried out as four rank-1
        updates instead of a direct index swap.
        """
        pairs = 0
        for step in delta.steps:
            if isinstance(step, emb.ApplyPair):
                self.rank1_update(step.c, step.d)
                pairs += 1
            elif isinstance(step, emb.AppendColumn):
                self.append_column(step.a)
            elif isinstance(step, emb.AppendRow):
                self.append_row(step.a)
            elif isinstance(step, emb.RemoveLastColumn):
                self.remove_last_column()
            elif isinstance(step, emb.RemoveLastRow):
                self.remove_last_row()
            elif isinstance(step, emb.PermuteWithLast):
                if faithful:
                    for p in emb.permutation_pairs(self.M, step.i):
                        self.rank1_update(p.c, p.d)
                        pairs += 1
                else:
                    self.permute_with_last(step.i)
            else:
                raise TypeError(f"unknown delta step {step!r}")
        return pairs


# functional forms: each returns a new state and leaves the argument alone

def pinv_from_scratch(M, tol: float | None = None) -> PinvState:
    return PinvState.from_matrix(M, tol)


def rank1_update_pinv(s: PinvState, c, d) -> PinvState:
    return s.copy().rank1_update(c, d)


def append_column_pinv(s: PinvState, a) -> PinvState:
    return s.copy().append_column(a)


def append_row_pinv(s: PinvState, a) -> PinvState:
    return s.copy().append_row(a)


def remove_last_column_pinv(s: PinvState) -> PinvState:
    return s.copy().remove_last_column()


def remove_last_row_pinv(s: PinvState) -> PinvState:
    return s.copy().remove_last_row()
