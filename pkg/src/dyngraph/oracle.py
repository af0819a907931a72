"""From-scratch reference computations.

Nothing here shares code with the incremental engines: the dense SVD comes
from LAPACK (or the one-sided Jacobi routine below), and the l1 reference
solves an inequality-form LP with HiGHS.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import ConvergenceFailure

RANK_CUTOFF = 1e-12


def _sign_normalize(U: np.ndarray, V: np.ndarray) -> None:
    """Make the first significant entry of every column of U nonnegative."""
    for k in range(U.shape[1]):
        col = U[:, k]
        big = np.abs(col) > 1e-8 * np.abs(col).max()
        first = np.argmax(big)
        if col[first] < 0:
            U[:, k] *= -1
            V[:, k] *= -1


def jacobi_svd(M: np.ndarray, tol: float = 1e-15, max_sweeps: int | None = None):
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Returns ``U, sigma, V`` with all min(n, m) singular values, sorted in
    decreasing order.
    """
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    if n < m:
        V, s, U = jacobi_svd(M.T, tol, max_sweeps)
        return U, s, V
    A = M.copy()
    V = np.eye(m)
    if max_sweeps is None:
        max_sweeps = 100 * max(1, min(n, m))
    for _ in range(max_sweeps):
        rotated = False
        for p in range(m - 1):
            for q in range(p + 1, m):
                alpha = A[:, p] @ A[:, p]
                beta = A[:, q] @ A[:, q]
                gamma = A[:, p] @ A[:, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                Ap = A[:, p].copy()
                A[:, p] = cs * Ap - sn * A[:, q]
                A[:, q] = sn * Ap + cs * A[:, q]
                Vp = V[:, p].copy()
                V[:, p] = cs * Vp - sn * V[:, q]
                V[:, q] = sn * Vp + cs * V[:, q]
        if not rotated:
            break
    else:
        raise ConvergenceFailure(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    s = np.linalg.norm(A, axis=0)
    order = np.argsort(-s, kind="stable")
    s, A, V = s[order], A[:, order], V[:, order]
    U = np.zeros_like(A)
    nz = s > 0
    U[:, nz] = A[:, nz] / s[nz]
    # complete U for zero singular values so its columns stay orthonormal
    if not nz.all():
        Q, _ = np.linalg.qr(np.column_stack([U[:, nz], np.eye(n)]))
        U[:, ~nz] = Q[:, nz.sum():nz.sum() + (~nz).sum()]
    return U, s, V


def oracle_svd(M, cutoff: float = RANK_CUTOFF, method: str = "lapack"):
    """Thin SVD restricted to the numerically nonzero singular values.

    Singular values at or below ``cutoff * sigma_max`` are dropped, so the zero
    matrix yields empty factors.  Signs are normalized so that the first
    significant entry of each left singular vector is nonnegative.
    """
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    if min(n, m) == 0:
        return np.zeros((n, 0)), np.zeros(0), np.zeros((m, 0))
    if method == "lapack":
        try:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
        except np.linalg.LinAlgError:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        V = Vt.T
    elif method == "jacobi":
        U, s, V = jacobi_svd(M)
    else:
        raise ValueError(f"unknown SVD method {method!r}")
    k = 0 if s[0] == 0 else int(np.sum(s > cutoff * s[0]))
    U, s, V = U[:, :k].copy(), s[:k].copy(), V[:, :k].copy()
    _sign_normalize(U, V)
    return U, s, V


def oracle_pinv(M, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Moore-Penrose pseudoinverse V diag(1/sigma) U^T."""
    U, s, V = oracle_svd(M, cutoff)
    return (V / s) @ U.T


def oracle_lstsq(M, b) -> np.ndarray:
    """Minimum-norm least-squares solution."""
    return oracle_pinv(M) @ np.asarray(b, dtype=float)


def oracle_l1(M, b):
    """Least absolute deviation fit; returns ``(x, objective)``.

    Solves  min sum(t)  s.t.  M x - t <= b,  -M x - t <= -b  with the HiGHS
    dual simplex.  The objective is recomputed from x.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = M.shape
    if n == 0:
        return np.zeros(m), 0.0
    I = np.eye(n)
    A_ub = np.block([[M, -I], [-M, -I]])
    b_ub = np.concatenate([b, -b])
    cost = np.concatenate([np.zeros(m), np.ones(n)])
    bounds = [(None, None)] * m + [(0, None)] * n
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise ConvergenceFailure(f"l1 oracle LP failed: {res.message}")
    x = res.x[:m]
    return x, float(np.abs(M @ x - b).sum())


def penrose_residuals(M: np.ndarray, P: np.ndarray) -> tuple[float, float, float, float]:
    """Relative violations of the four Penrose conditions for P ~ pinv(M)."""
    nM = max(np.linalg.norm(M), 1e-300)
    nP = max(np.linalg.norm(P), 1e-300)
    MP = M @ P
    PM = P @ M
    return (np.linalg.norm(MP @ M - M) / nM,
            np.linalg.norm(PM @ P - P) / nP,
            np.linalg.norm(MP - MP.T) / max(np.linalg.norm(MP), 1.0),
            np.linalg.norm(PM - PM.T) / max(np.linalg.norm(PM), 1.0))
