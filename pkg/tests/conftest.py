import numpy as np
import pytest


def rel_err(A, B) -> float:
    """Relative Frobenius distance of A from the reference B."""
    A, B = np.asarray(A, float), np.asarray(B, float)
    return float(np.linalg.norm(A - B) / max(np.linalg.norm(B), 1e-300)) if np.any(B) \
        else float(np.linalg.norm(A))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
