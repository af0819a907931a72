"""Opt-in arithmetic tally for the incremental engines.

The engines route every matrix-vector product and rank-1 outer update through
the helpers below.  When counting is active, each call adds its multiply-add
count to :data:`tally`; only :func:`rotate` multiplies two matrices, and only by a small factor
with at most k+1 rows.
"""
from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class _Tally:
    def __init__(self):
        self.enabled = False
        self.flops = 0
        self.calls = 0

    def add(self, k: int) -> None:
        if self.enabled:
            self.flops += int(k)
            self.calls += 1


tally = _Tally()


@contextmanager
def counting():
    """Count multiply-adds performed inside the block; yields the tally."""
    prev = tally.enabled
    tally.enabled = True
    tally.flops = 0
    tally.calls = 0
    try:
        yield tally
    finally:
        tally.enabled = prev


def mv(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    tally.add(A.size)
    return A @ x


def vm(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    tally.add(A.size)
    return x @ A


def add_outer(A: np.ndarray, x: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> None:
    """A += alpha * x y^T, in place."""
    tally.add(A.size)
    if alpha != 1.0:
        x = alpha * x
    A += np.outer(x, y)


def small(k: int) -> None:
    """Record O(k^3) work on a k x k core."""
    tally.add(k ** 3)


def rotate(A: np.ndarray, R: np.ndarray) -> np.ndarray:
    """A @ R for a tall A (n x k) and a small R (k x j)."""
    tally.add(A.shape[0] * R.size)
    return A @ R
