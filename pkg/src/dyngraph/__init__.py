"""Regression and SVD of dynamic graph embeddings with incremental updates."""
from .embedding import (
    ADJACENCY, EmbeddingDelta, EmbeddingKind, apply_delta, capabilities, delta_for_update,
    laplacian, materialize,
)
from .errors import (
    ConvergenceFailure, DynGraphError, EmptyMatrix, FormatError, IncompatibleEmbedding,
    InvalidWeight, MissingObservation, ShapeMismatch, UnsupportedOperation, UpdateConflict,
)
from .graph import (
    DynamicGraph, EdgeDelete, EdgeInsert, NodeDelete, NodeInsert, WeightChange, apply_update,
    permute_with_last,
)
from .l1 import L1State, solve_l1, update_l1
from .l2 import L2State, init_l2, update_l2
from .oracle import oracle_l1, oracle_lstsq, oracle_pinv, oracle_svd
from .pinv import PinvState, pinv_from_scratch
from .svd import SvdState, low_rank_approx, svd_from_scratch, update_svd_for_graph

__all__ = [
    "ADJACENCY", "EmbeddingDelta", "EmbeddingKind", "apply_delta", "capabilities",
    "delta_for_update", "laplacian", "materialize",
    "ConvergenceFailure", "DynGraphError", "EmptyMatrix", "FormatError", "IncompatibleEmbedding",
    "InvalidWeight", "MissingObservation", "ShapeMismatch", "UnsupportedOperation",
    "UpdateConflict",
    "DynamicGraph", "EdgeDelete", "EdgeInsert", "NodeDelete", "NodeInsert", "WeightChange",
    "apply_update", "permute_with_last",
    "L1State", "solve_l1", "update_l1", "L2State", "init_l2", "update_l2",
    "oracle_l1", "oracle_lstsq", "oracle_pinv", "oracle_svd",
    "PinvState", "pinv_from_scratch",
    "SvdState", "low_rank_approx", "svd_from_scratch", "update_svd_for_graph",
]
