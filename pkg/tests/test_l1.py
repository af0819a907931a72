import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyngraph import embedding as emb
from dyngraph.errors import ShapeMismatch, UnsupportedOperation
from dyngraph.generators import EDGE_KINDS, random_graph, random_update
from dyngraph.graph import DynamicGraph, EdgeInsert, NodeDelete, NodeInsert, WeightChange
from dyngraph.l1 import L1State, init_l1, solve_l1, update_l1
from dyngraph.oracle import oracle_l1


def _agrees(s, tol=1e-8):
    _, obj = oracle_l1(s.M, s.b)
    assert abs(s.objective - obj) <= tol * max(1.0, abs(obj))
    assert abs(s.objective - s.residual()) <= 1e-10
    assert s.certificate().holds(s.objective)


def test_median_example():
    s = solve_l1(np.ones((3, 1)), [0.0, 0.0, 10.0])
    assert abs(s.x[0]) <= 1e-12 and s.objective == pytest.approx(10.0)
    assert s.certificate().holds(s.objective)


def test_exact_fit_has_zero_objective():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((9, 3))
    s = solve_l1(M, M @ np.array([2.0, -1.0, 0.5]))
    assert s.objective <= 1e-10


def test_random_10x3_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        _agrees(solve_l1(rng.standard_normal((10, 3)), rng.standard_normal(10)))


def test_rank_deficient_and_zero_matrices():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 5))
    _agrees(solve_l1(M, rng.standard_normal(8)))
    s = solve_l1(np.zeros((3, 2)), [1.0, -2.0, 0.5])
    assert s.objective == pytest.approx(3.5)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        solve_l1(np.eye(2), [1.0])
    s = solve_l1(np.eye(2), [1.0, 2.0])
    with pytest.raises(ShapeMismatch):
        s.rank1_update(np.ones(3), np.ones(2))


def test_zero_weight_change_keeps_state():
    s = init_l1(DynamicGraph(3, True, [(1, 2, 2.0)]), emb.ADJACENCY, [1.0, 2.0, 3.0])
    t = update_l1(s, WeightChange(1, 2, 2.0))
    assert t.objective == s.objective and np.array_equal(t.x, s.x)


def test_edge_insert_that_reaches_b():
    # b = (0, 4, 0): only column 2 can produce it, and it is empty until 2->2 exists
    g = DynamicGraph(3, True, [(1, 1, 1.0)])
    s = init_l1(g, emb.ADJACENCY, [0.0, 4.0, 0.0])
    assert s.objective == pytest.approx(4.0)
    t = update_l1(s, EdgeInsert(2, 2, 2.0))
    assert t.objective <= 1e-12 and np.allclose(t.x, [0.0, 2.0, 0.0])
    assert abs(init_l1(t.graph, emb.ADJACENCY, t.b).objective - t.objective) <= 1e-12


def test_laplacian_edge_update():
    lap = emb.laplacian()
    g = DynamicGraph(4, False, [(1, 2, 1.0), (2, 3, 2.0)])
    b = np.array([1.0, -3.0, 0.5, 2.0])
    s = update_l1(init_l1(g, lap, b), EdgeInsert(3, 4, 1.5))
    scratch = solve_l1(emb.materialize(s.graph, lap), b)
    assert abs(s.objective - scratch.objective) <= 1e-8 * max(1.0, scratch.objective)
    _agrees(s)


def test_node_ops_rejected():
    s = init_l1(DynamicGraph(2, True, [(1, 2, 1.0)]), emb.ADJACENCY, [1.0, 2.0])
    with pytest.raises(UnsupportedOperation):
        s.update(NodeInsert())
    with pytest.raises(UnsupportedOperation):
        s.update(NodeDelete(1))
    with pytest.raises(UnsupportedOperation):
        solve_l1(np.eye(2), [1.0, 2.0]).update(EdgeInsert(1, 2, 1.0))


def test_certificate_fields():
    s = solve_l1(np.ones((3, 1)), [0.0, 1.0, 5.0])
    cert = s.certificate()
    assert cert.dual_bound <= 1 + 1e-12
    assert cert.stationarity <= 1e-12
    assert cert.gap(s.objective) <= 1e-12
    assert not cert.holds(s.objective + 1.0)


def test_restart_from_optimal_basis_needs_no_pivots():
    rng = np.random.default_rng(3)
    M, b = rng.standard_normal((12, 4)), rng.standard_normal(12)
    s = solve_l1(M, b)
    t = L1State(M, b).restart(s.basis)
    assert t.pivots == 0 and t.objective == pytest.approx(s.objective)
    with pytest.raises(ValueError):
        L1State(M, b).restart(s.basis[:-1])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), laplacian=st.booleans())
def test_edge_sequences_match_oracle(seed, laplacian):
    rng = np.random.default_rng(seed)
    kind = emb.laplacian() if laplacian else emb.ADJACENCY
    n = int(rng.integers(2, 31))
    g = random_graph(n, 0.15, not laplacian, rng, self_loops=not laplacian)
    s = init_l1(g, kind, rng.integers(-5, 6, n).astype(float))
    for _ in range(int(rng.integers(1, 40))):
        s.update(random_update(s.graph, rng, EDGE_KINDS, self_loops=not laplacian))
        _agrees(s)
    assert s.scratch_fallbacks == 0


def test_warm_start_saves_pivots():
    rng = np.random.default_rng(5)
    ratios = []
    for _ in range(50):
        g = random_graph(200, 0.02, True, rng)
        b = rng.integers(-5, 6, 200).astype(float)
        s = init_l1(g, emb.ADJACENCY, b)
        s.update(random_update(s.graph, rng, EDGE_KINDS))
        scratch = init_l1(s.graph, emb.ADJACENCY, b)
        assert abs(scratch.objective - s.objective) <= 1e-8 * max(1.0, scratch.objective)
        ratios.append(s.pivots / max(scratch.pivots, 1))
    assert np.median(ratios) <= 0.25
