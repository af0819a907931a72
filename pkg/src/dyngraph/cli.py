"""Command line front end.

    dyngraph solve  --graph G --b B [options]          one record for the initial state
    dyngraph stream --graph G --b B --ops OPS [...]    one record per applied update
    dyngraph oracle --graph G --b B [options]          from-scratch solve only
    dyngraph bench  --sizes 256,512 [...]               CSV of incremental vs scratch times

Records are JSON lines.  Exit status: 0 on success, 1 on bad input,
2 when ``--verify`` found a state that disagrees with the oracle.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import statistics
import sys
import time

import numpy as np

from . import embedding as emb
from .engines import ENGINES, restore
from .errors import (
    DynGraphError, FormatError, IncompatibleEmbedding, UnsupportedOperation,
)
from .generators import random_graph
from .graph import EdgeInsert, EdgeDelete, NodeDelete, NodeInsert, WeightChange, op_name
from .io import dump_checkpoint, load_checkpoint, load_graph, load_ops, load_vector
from .l1 import L1State
from .oracle import oracle_l1, oracle_lstsq, oracle_svd
from .svd import SvdState

log = logging.getLogger("dyngraph")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class InputError(Exception):
    pass


# ---- argument handling -----------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _common(p: argparse.ArgumentParser, stream: bool = False) -> None:
    p.add_argument("--graph", help="graph file")
    p.add_argument("--b", dest="b_path", help="observation vector file (not needed for --mode svd)")
    if stream:
        p.add_argument("--ops", help="update stream file; empty means no updates")
    p.add_argument("--embedding", choices=("adjacency", "laplacian"), default="adjacency")
    p.add_argument("--degree-bound", type=_positive_int, default=None,
                   help="degree bound C that enables Laplacian node operations")
    p.add_argument("--mode", choices=("l2", "l1", "svd"), default="l2")
    p.add_argument("--rank", type=_positive_int, default=None, help="rank cap for --mode svd")
    p.add_argument("--tol", type=float, default=None, help="pseudoinverse zero tolerance")
    p.add_argument("--verify", action="store_true", help="check every state against the oracle")
    p.add_argument("--no-timing", action="store_true", help="emit null wall times")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-in", help="resume from a checkpoint instead of --graph/--b")
    p.add_argument("--checkpoint-out", help="write the final state here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyngraph", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="solve the initial state"))
    _common(sub.add_parser("stream", help="replay an update stream"), stream=True)
    _common(sub.add_parser("oracle", help="one-shot from-scratch solve"))
    b = sub.add_parser("bench", help="time incremental updates against scratch solves")
    b.add_argument("--sizes", default="128,256", help="comma-separated node counts")
    b.add_argument("--ops", default="weight_change",
                   help="comma-separated update kinds: edge_insert, edge_delete, "
                        "weight_change, node_insert, node_delete")
    b.add_argument("--embedding", choices=("adjacency", "laplacian"), default="adjacency")
    b.add_argument("--degree-bound", type=_positive_int, default=None)
    b.add_argument("--mode", choices=("l2", "l1", "svd"), default="l2")
    b.add_argument("--rank", type=_positive_int, default=None)
    b.add_argument("--density", type=float, default=None,
                   help="edge probability (default 8/n)")
    b.add_argument("--bench-repeats", type=_positive_int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="CSV path (default: stdout)")
    return ap


def _kind(args) -> emb.EmbeddingKind:
    if args.embedding == "adjacency" and args.degree_bound is not None:
        raise InputError("--degree-bound applies only to --embedding laplacian")
    return emb.EmbeddingKind(args.embedding, args.degree_bound)


def _check_config(args) -> None:
    if args.rank is not None and args.mode != "svd":
        raise InputError("--rank applies only to --mode svd")


# ---- engines -----------------------------------------------------------------

def _load_engine(args):
    if args.checkpoint_in:
        eng = restore(load_checkpoint(args.checkpoint_in))
        if eng.mode != args.mode:
            raise InputError(f"checkpoint holds a {eng.mode} state, --mode is {args.mode}")
        return eng
    if not args.graph:
        raise InputError("--graph is required without --checkpoint-in")
    g = load_graph(args.graph)
    kind = _kind(args)
    b = None
    if args.b_path:
        b = load_vector(args.b_path)
        if b.shape != (g.n,):
            raise FormatError(f"vector has {b.shape[0]} entries, graph has {g.n} nodes", args.b_path)
    elif args.mode != "svd":
        raise InputError(f"--b is required for --mode {args.mode}")
    if args.mode == "l2":
        return ENGINES["l2"].build(g, kind, b, args.tol)
    if args.mode == "l1":
        return ENGINES["l1"].build(g, kind, b)
    return ENGINES["svd"].build(g, kind, b, args.rank)


class _Emitter:
    def __init__(self, out, timing: bool):
        self.out = out
        self.timing = timing

    def emit(self, rec: dict) -> None:
        self.out.write(json.dumps(rec) + "\n")

    def elapsed(self, t0: int) -> int | None:
        return time.perf_counter_ns() - t0 if self.timing else None


def _record(op: str, eng, pairs: int, wall, verified, with_x: bool = False, step=None) -> dict:
    rec = {"op": op}
    if step is not None:
        rec["step"] = step
    rec.update(eng.record(with_x))
    rec["pairs_applied"] = pairs
    rec["wall_time_ns"] = wall
    rec["verified"] = verified
    # keep the documented field order stable
    order = ["op", "step", "n", "m", "pairs_applied", "residual", "x_norm", "wall_time_ns",
             "verified", "norm", "objective", "rank", "sigma", "x", "recomputed"]
    return {k: rec[k] for k in order if k in rec}


def _initial(args, em: _Emitter):
    """Load or build the engine and emit the solve record."""
    t0 = time.perf_counter_ns()
    eng = _load_engine(args)
    wall = em.elapsed(t0)
    verified = eng.verify() if args.verify else None
    em.emit(_record("solve", eng, 0, wall, verified, with_x=args.mode != "svd"))
    return eng, EXIT_VERIFY if verified is False else EXIT_OK


def cmd_solve(args, out) -> int:
    eng, status = _initial(args, _Emitter(out, not args.no_timing))
    _write_checkpoint(args, eng)
    return status


def cmd_stream(args, out) -> int:
    ops = load_ops(args.ops) if args.ops else []
    em = _Emitter(out, not args.no_timing)
    eng, status = _initial(args, em)
    for step, line in enumerate(ops, start=1):
        u = line.update
        recomputed = False
        t0 = time.perf_counter_ns()
        try:
            pairs = eng.update(u)
        except (IncompatibleEmbedding, UnsupportedOperation) as exc:
            # the engine cannot absorb this update incrementally: start over
            log.info("%s:%d: %s; recomputing from scratch", line.source, line.line, exc)
            try:
                eng.rebuild(u)
            except DynGraphError as exc2:
                raise FormatError(str(exc2), line.source, line.line) from None
            pairs, recomputed = 0, True
        except DynGraphError as exc:
            raise FormatError(str(exc), line.source, line.line) from None
        wall = em.elapsed(t0)
        verified = eng.verify() if args.verify else None
        rec = _record(op_name(u), eng, pairs, wall, verified, step=step)
        if recomputed:
            rec["recomputed"] = True
        em.emit(rec)
        if verified is False:
            status = EXIT_VERIFY
    _write_checkpoint(args, eng)
    return status


def cmd_oracle(args, out) -> int:
    if args.checkpoint_in:
        raise InputError("the oracle command reads --graph/--b only")
    if not args.graph:
        raise InputError("--graph is required")
    g = load_graph(args.graph)
    M = emb.materialize(g, _kind(args))
    em = _Emitter(out, not args.no_timing)
    t0 = time.perf_counter_ns()
    rec = {"op": "oracle", "n": M.shape[0], "m": M.shape[1]}
    if args.mode == "svd":
        _, s, _ = oracle_svd(M)
        s = s[:args.rank] if args.rank else s
        rec.update(norm="svd", rank=int(s.size), sigma=s.tolist())
    else:
        if not args.b_path:
            raise InputError(f"--b is required for --mode {args.mode}")
        b = load_vector(args.b_path)
        if b.shape != (g.n,):
            raise FormatError(f"vector has {b.shape[0]} entries, graph has {g.n} nodes", args.b_path)
        if args.mode == "l2":
            x = oracle_lstsq(M, b)
            rec.update(norm="l2", residual=float(np.linalg.norm(M @ x - b)))
        else:
            x, obj = oracle_l1(M, b)
            rec.update(norm="l1", residual=obj, objective=obj)
        rec.update(x_norm=float(np.linalg.norm(x)), x=x.tolist())
    rec["wall_time_ns"] = em.elapsed(t0)
    em.emit(rec)
    return EXIT_OK


def _write_checkpoint(args, eng) -> None:
    if getattr(args, "checkpoint_out", None):
        with open(args.checkpoint_out, "w") as fh:
            fh.write(dump_checkpoint(eng.checkpoint()))


# ---- benchmark ----------------------------------------------------------------

def _bench_update(kind_name: str, g, rng, embedding: emb.EmbeddingKind):
    n = g.n
    edges = list(g.undirected_edges())
    if kind_name == "weight_change":
        i, j, w = edges[rng.integers(len(edges))]
        return WeightChange(i, j, w + 1.0 if w != -1.0 else 2.0)
    if kind_name == "edge_delete":
        i, j, _ = edges[rng.integers(len(edges))]
        return EdgeDelete(i, j)
    if kind_name == "edge_insert":
        while True:
            i, j = (int(v) for v in rng.integers(1, n + 1, 2))
            if i != j and not g.has_edge(i, j):
                return EdgeInsert(i, j, 1.0)
    if kind_name == "node_insert":
        k = min(embedding.degree_bound or 8, 8, n)
        nbrs = tuple((int(j) + 1, 1.0) for j in rng.choice(n, size=k, replace=False))
        inn = nbrs if g.directed else ()
        return NodeInsert(nbrs, inn, observation=1.0)
    if kind_name == "node_delete":
        bound = embedding.degree_bound
        ids = [i for i in range(1, n + 1) if bound is None or g.degree(i) <= bound]
        return NodeDelete(ids[rng.integers(len(ids))])
    raise InputError(f"unknown update kind {kind_name!r}")


def bench_one(mode: str, kind: emb.EmbeddingKind, n: int, op: str, repeats: int,
              rng, density: float | None = None, rank: int | None = None) -> dict:
    """Median wall time of one incremental update vs a scratch solve of the result."""
    p = density if density is not None else min(1.0, 8.0 / n)
    g = random_graph(n, p, not kind.is_laplacian, rng, integer=True,
                     positive=kind.is_laplacian)
    b = rng.standard_normal(n)
    if mode == "l2":
        eng = ENGINES["l2"].build(g, kind, b)
    elif mode == "l1":
        eng = ENGINES["l1"].build(g, kind, b)
    else:
        eng = ENGINES["svd"].build(g, kind, b, rank)
    inc, scr = [], []
    for _ in range(repeats):
        u = _bench_update(op, g, rng, kind)
        trial = copy.deepcopy(eng)
        t0 = time.perf_counter()
        trial.update(u)
        inc.append(time.perf_counter() - t0)
        M = emb.materialize(trial.graph, kind)
        bb = trial.b
        t0 = time.perf_counter()
        if mode == "l2":
            oracle_lstsq(M, bb)
        elif mode == "l1":
            L1State(M, bb).solve()
        else:
            SvdState.from_matrix(M, rank)
        scr.append(time.perf_counter() - t0)
    mi, ms = statistics.median(inc), statistics.median(scr)
    return {"n": n, "mode": mode, "embedding": kind.name, "op": op, "repeats": repeats,
            "incremental_s": mi, "scratch_s": ms, "ratio": mi / ms if ms else float("inf")}


def cmd_bench(args, out) -> int:
    kind = _kind(args)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise InputError(f"bad --sizes {args.sizes!r}") from None
    rng = np.random.default_rng(args.seed)
    rows = []
    for n in sizes:
        for op in [o for o in args.ops.split(",") if o]:
            rows.append(bench_one(args.mode, kind, n, op, args.bench_repeats, rng,
                                  args.density, args.rank))
    fh = open(args.out, "w", newline="") if args.out else out
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["n"])
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "stream": cmd_stream, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None, out=None) -> int:
    level = os.environ.get("DYNGRAPH_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command != "bench":
            _check_config(args)
            _kind(args)
        return COMMANDS[args.command](args, out)
    except (FormatError, InputError, DynGraphError, ValueError) as exc:
        print(f"dyngraph: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
