"""Line-oriented text formats for graphs, update streams, vectors, matrices and
engine checkpoints.

Every format allows blank lines and ``#`` comments.  Numbers are written with
``repr`` so a dump/load round trip reproduces each float exactly.

Graph::

    graph <n> <directed|undirected>
    edge <i> <j> <w>

Update stream, one operation per line::

    ei i j w | ed i j | wc i j w | nd i | ni k j1 w1 ... jk wk [obs]

In a directed graph a negative neighbor id -j in ``ni`` denotes an edge from
j into the new node; the optional trailing value is the new node's
observation for b.

Vector and matrix::

    vector <n> [name]            matrix <rows> <cols> [name]
    v1 v2 ...                    one line of <cols> values per row
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError
from .graph import (
    DynamicGraph, EdgeDelete, EdgeInsert, GraphUpdate, NodeDelete, NodeInsert,
    WeightChange,
)


def fmt(v: float) -> str:
    return repr(float(v))


# ---- tokenizing -----------------------------------------------------------

@dataclass
class _Lines:
    """Non-blank, comment-stripped lines with their 1-based line numbers."""
    items: list
    source: str | None = None
    pos: int = 0

    @classmethod
    def from_text(cls, text: str, source: str | None = None) -> "_Lines":
        items = []
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                items.append((no, line.split()))
        return cls(items, source)

    def done(self) -> bool:
        return self.pos >= len(self.items)

    def peek(self):
        return self.items[self.pos]

    def next(self):
        if self.done():
            raise FormatError("unexpected end of input", self.source, None)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def error(self, msg: str, line: int | None) -> FormatError:
        return FormatError(msg, self.source, line)


def _int(tok: str, lines: _Lines, no: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise lines.error(f"expected an integer, got {tok!r}", no) from None


def _float(tok: str, lines: _Lines, no: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise lines.error(f"expected a number, got {tok!r}", no) from None
    if not math.isfinite(v):
        raise lines.error(f"non-finite value {tok!r}", no)
    return v


def _expect(toks: list, count: int, lines: _Lines, no: int) -> None:
    if len(toks) != count:
        raise lines.error(f"{toks[0]!r} expects {count - 1} fields, got {len(toks) - 1}", no)


def _read_text(path) -> tuple[str, str]:
    try:
        return Path(path).read_text(), str(path)
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(path)) from None


# ---- graphs ---------------------------------------------------------------

def _parse_graph(lines: _Lines) -> DynamicGraph:
    no, toks = lines.next()
    if toks[0] != "graph":
        raise lines.error(f"expected a 'graph' header, got {toks[0]!r}", no)
    _expect(toks, 3, lines, no)
    n = _int(toks[1], lines, no)
    if n < 0:
        raise lines.error("node count must be nonnegative", no)
    if toks[2] not in ("directed", "undirected"):
        raise lines.error(f"expected 'directed' or 'undirected', got {toks[2]!r}", no)
    g = DynamicGraph(n, toks[2] == "directed")
    while not lines.done() and lines.peek()[1][0] == "edge":
        no, toks = lines.next()
        _expect(toks, 4, lines, no)
        u = EdgeInsert(_int(toks[1], lines, no), _int(toks[2], lines, no), _float(toks[3], lines, no))
        try:
            g.apply(u)
        except Exception as exc:
            raise lines.error(str(exc), no) from None
    return g


def parse_graph(text: str, source: str | None = None) -> DynamicGraph:
    lines = _Lines.from_text(text, source)
    g = _parse_graph(lines)
    if not lines.done():
        no, toks = lines.peek()
        raise lines.error(f"unexpected {toks[0]!r} after the edge list", no)
    return g


def load_graph(path) -> DynamicGraph:
    return parse_graph(*_read_text(path))


def dump_graph(g: DynamicGraph) -> str:
    out = [f"graph {g.n} {'directed' if g.directed else 'undirected'}"]
    out += [f"edge {i} {j} {fmt(w)}" for i, j, w in g.undirected_edges()]
    return "\n".join(out) + "\n"


# ---- update streams --------------------------------------------------------

@dataclass
class OpLine:
    update: GraphUpdate
    line: int
    source: str | None = None


def _parse_op(toks: list, lines: _Lines, no: int) -> GraphUpdate:
    code = toks[0]
    if code in ("ei", "wc"):
        _expect(toks, 4, lines, no)
        cls = EdgeInsert if code == "ei" else WeightChange
        return cls(_int(toks[1], lines, no), _int(toks[2], lines, no), _float(toks[3], lines, no))
    if code == "ed":
        _expect(toks, 3, lines, no)
        return EdgeDelete(_int(toks[1], lines, no), _int(toks[2], lines, no))
    if code == "nd":
        _expect(toks, 2, lines, no)
        return NodeDelete(_int(toks[1], lines, no))
    if code == "ni":
        if len(toks) < 2:
            raise lines.error("'ni' needs an edge count", no)
        k = _int(toks[1], lines, no)
        if k < 0 or len(toks) not in (2 + 2 * k, 3 + 2 * k):
            raise lines.error(f"'ni {toks[1]}' expects {k} id/weight pairs and an optional observation", no)
        out, inn = [], []
        for t in range(k):
            j = _int(toks[2 + 2 * t], lines, no)
            w = _float(toks[3 + 2 * t], lines, no)
            if j < 0:
                inn.append((-j, w))
            else:
                out.append((j, w))
        obs = _float(toks[-1], lines, no) if len(toks) == 3 + 2 * k else None
        return NodeInsert(tuple(out), tuple(inn), obs)
    raise lines.error(f"unknown operation {code!r}", no)


def parse_ops(text: str, source: str | None = None) -> list[OpLine]:
    lines = _Lines.from_text(text, source)
    ops = []
    while not lines.done():
        no, toks = lines.next()
        ops.append(OpLine(_parse_op(toks, lines, no), no, source))
    return ops


def load_ops(path) -> list[OpLine]:
    return parse_ops(*_read_text(path))


def dump_op(u: GraphUpdate) -> str:
    if isinstance(u, EdgeInsert):
        return f"ei {u.i} {u.j} {fmt(u.w)}"
    if isinstance(u, WeightChange):
        return f"wc {u.i} {u.j} {fmt(u.w)}"
    if isinstance(u, EdgeDelete):
        return f"ed {u.i} {u.j}"
    if isinstance(u, NodeDelete):
        return f"nd {u.i}"
    pairs = [(j, w) for j, w in u.edges] + [(-j, w) for j, w in u.in_edges]
    toks = ["ni", str(len(pairs))] + [f"{j} {fmt(w)}" for j, w in pairs]
    if u.observation is not None:
        toks.append(fmt(u.observation))
    return " ".join(toks)


def dump_ops(ops: Iterable[GraphUpdate]) -> str:
    return "".join(dump_op(u) + "\n" for u in ops)


# ---- vectors and matrices --------------------------------------------------

def _parse_vector(lines: _Lines, name: str | None = None) -> np.ndarray:
    no, toks = lines.next()
    if toks[0] != "vector" or len(toks) not in (2, 3):
        raise lines.error("expected 'vector <n> [name]'", no)
    if name is not None and (len(toks) < 3 or toks[2] != name):
        raise lines.error(f"expected vector {name!r}", no)
    n = _int(toks[1], lines, no)
    vals: list[float] = []
    while len(vals) < n:
        no, toks = lines.next()
        vals += [_float(t, lines, no) for t in toks]
    if len(vals) != n:
        raise lines.error(f"vector declares {n} entries, found {len(vals)}", no)
    return np.array(vals, dtype=float)


def _parse_matrix(lines: _Lines, name: str | None = None) -> np.ndarray:
    no, toks = lines.next()
    if toks[0] != "matrix" or len(toks) not in (3, 4):
        raise lines.error("expected 'matrix <rows> <cols> [name]'", no)
    if name is not None and (len(toks) < 4 or toks[3] != name):
        raise lines.error(f"expected matrix {name!r}", no)
    r, c = _int(toks[1], lines, no), _int(toks[2], lines, no)
    if r < 0 or c < 0:
        raise lines.error("matrix dimensions must be nonnegative", no)
    A = np.zeros((r, c))
    for i in range(r if c else 0):
        no, toks = lines.next()
        if len(toks) != c:
            raise lines.error(f"row {i + 1} has {len(toks)} entries, expected {c}", no)
        A[i] = [_float(t, lines, no) for t in toks]
    return A


def parse_vector(text: str, source: str | None = None) -> np.ndarray:
    lines = _Lines.from_text(text, source)
    v = _parse_vector(lines)
    if not lines.done():
        raise lines.error("trailing content after the vector", lines.peek()[0])
    return v


def load_vector(path) -> np.ndarray:
    return parse_vector(*_read_text(path))


def parse_matrix(text: str, source: str | None = None) -> np.ndarray:
    lines = _Lines.from_text(text, source)
    A = _parse_matrix(lines)
    if not lines.done():
        raise lines.error("trailing content after the matrix", lines.peek()[0])
    return A


def load_matrix(path) -> np.ndarray:
    return parse_matrix(*_read_text(path))


def dump_vector(v, name: str | None = None) -> str:
    v = np.asarray(v, dtype=float)
    head = f"vector {v.shape[0]}" + (f" {name}" if name else "")
    return head + "\n" + (" ".join(fmt(x) for x in v) + "\n" if v.size else "")


def dump_matrix(A, name: str | None = None) -> str:
    A = np.asarray(A, dtype=float)
    head = f"matrix {A.shape[0]} {A.shape[1]}" + (f" {name}" if name else "")
    rows = [" ".join(fmt(x) for x in row) for row in A] if A.shape[1] else []
    return "\n".join([head] + rows) + "\n"


# ---- checkpoints -----------------------------------------------------------

@dataclass
class Checkpoint:
    """Raw checkpoint contents: header fields plus named arrays."""
    mode: str
    embedding: str
    degree_bound: int | None
    params: dict = field(default_factory=dict)
    graph: DynamicGraph | None = None
    arrays: dict = field(default_factory=dict)
    basis: list | None = None
    source: str | None = None


def dump_checkpoint(ck: Checkpoint) -> str:
    out = ["# dyngraph checkpoint", f"mode {ck.mode}",
           f"embedding {ck.embedding}" + (f" {ck.degree_bound}" if ck.degree_bound else "")]
    for k, v in ck.params.items():
        out.append(f"param {k} {'none' if v is None else fmt(v) if isinstance(v, float) else v}")
    text = "\n".join(out) + "\n"
    if ck.graph is not None:
        text += dump_graph(ck.graph)
    for name, A in ck.arrays.items():
        A = np.asarray(A)
        text += dump_matrix(A, name) if A.ndim == 2 else dump_vector(A, name)
    if ck.basis is not None:
        text += "basis " + " ".join(str(int(j)) for j in ck.basis) + "\n"
    return text


def parse_checkpoint(text: str, source: str | None = None) -> Checkpoint:
    lines = _Lines.from_text(text, source)
    no, toks = lines.next()
    if toks[0] != "mode" or len(toks) != 2 or toks[1] not in ("l2", "l1", "svd"):
        raise lines.error("expected 'mode <l2|l1|svd>'", no)
    mode = toks[1]
    no, toks = lines.next()
    if toks[0] != "embedding" or len(toks) not in (2, 3) or toks[1] not in ("adjacency", "laplacian"):
        raise lines.error("expected 'embedding <adjacency|laplacian> [degree bound]'", no)
    ck = Checkpoint(mode, toks[1], _int(toks[2], lines, no) if len(toks) == 3 else None,
                    source=source)
    while not lines.done():
        no, toks = lines.peek()
        key = toks[0]
        if key == "param":
            lines.next()
            _expect(toks, 3, lines, no)
            ck.params[toks[1]] = None if toks[2] == "none" else _float(toks[2], lines, no)
        elif key == "graph":
            ck.graph = _parse_graph(lines)
        elif key in ("vector", "matrix"):
            if len(toks) < (3 if key == "vector" else 4):
                raise lines.error(f"checkpoint {key} needs a name", no)
            name = toks[-1]
            ck.arrays[name] = _parse_vector(lines) if key == "vector" else _parse_matrix(lines)
        elif key == "basis":
            lines.next()
            ck.basis = [_int(t, lines, no) for t in toks[1:]]
        else:
            raise lines.error(f"unknown checkpoint field {key!r}", no)
    return ck


def load_checkpoint(path) -> Checkpoint:
    return parse_checkpoint(*_read_text(path))

