import csv
import io as stdio
import json

import numpy as np
import pytest

from dyngraph import cli
from dyngraph import embedding as emb
from dyngraph.engines import L2Engine
from dyngraph.io import dump_graph, dump_ops, dump_vector, load_graph
from dyngraph.generators import ALL_KINDS, EDGE_KINDS, random_graph, random_update
from dyngraph.oracle import oracle_lstsq


def run(argv):
    out = stdio.StringIO()
    code = cli.main(argv, out)
    return code, [json.loads(line) for line in out.getvalue().splitlines()], out.getvalue()


@pytest.fixture
def small(tmp_path):
    (tmp_path / "g.txt").write_text("graph 2 directed\nedge 1 2 1\n")
    (tmp_path / "b.txt").write_text("vector 2\n3 5\n")
    (tmp_path / "empty.txt").write_text("# nothing\n")
    return tmp_path


def _args(d, *extra):
    return ["--graph", str(d / "g.txt"), "--b", str(d / "b.txt"), "--no-timing", *extra]


def test_solve_example(small):
    code, recs, _ = run(["solve", *_args(small)])
    assert code == 0 and len(recs) == 1
    rec = recs[0]
    assert rec["op"] == "solve" and rec["norm"] == "l2"
    assert np.allclose(rec["x"], [0.0, 3.0])
    assert rec["wall_time_ns"] is None and rec["verified"] is None
    assert list(rec)[:9] == ["op", "n", "m", "pairs_applied", "residual", "x_norm",
                             "wall_time_ns", "verified", "norm"]


def test_stream_with_empty_ops_equals_solve(small):
    _, _, solve_text = run(["solve", *_args(small)])
    _, _, stream_text = run(["stream", *_args(small), "--ops", str(small / "empty.txt")])
    assert stream_text == solve_text


@pytest.mark.parametrize("mode, embedding", [("l2", "adjacency"), ("l1", "adjacency"),
                                             ("l2", "laplacian"), ("svd", "laplacian")])
def test_stream_is_deterministic_and_verified(tmp_path, mode, embedding):
    rng = np.random.default_rng(8)
    directed = embedding == "adjacency"
    g = random_graph(10, 0.3, directed, rng, positive=not directed)
    kinds = EDGE_KINDS if mode == "l1" else ALL_KINDS
    h, ops = g.copy(), []
    for _ in range(15):
        u = random_update(h, rng, kinds, positive=not directed, max_new_degree=3, min_nodes=3)
        if mode == "svd" and type(u).__name__ == "NodeDelete":
            continue
        h.apply(u)
        ops.append(u)
    (tmp_path / "g.txt").write_text(dump_graph(g))
    (tmp_path / "b.txt").write_text(dump_vector(rng.integers(-4, 5, 10)))
    (tmp_path / "ops.txt").write_text(dump_ops(ops))
    argv = ["stream", *_args(tmp_path), "--ops", str(tmp_path / "ops.txt"), "--mode", mode,
            "--embedding", embedding, "--verify"]
    code, recs, first = run(argv)
    _, _, second = run(argv)
    assert code == 0 and first == second
    assert len(recs) == len(ops) + 1
    assert all(r["verified"] for r in recs)
    assert [r["step"] for r in recs[1:]] == list(range(1, len(ops) + 1))


def test_stream_final_state_equals_solve_on_final_graph(tmp_path):
    rng = np.random.default_rng(9)
    g = random_graph(8, 0.3, True, rng)
    b = rng.integers(-4, 5, 8).astype(float)
    eng = L2Engine.build(g, emb.ADJACENCY, b)
    ops = []
    for _ in range(10):
        u = random_update(eng.graph, rng, ALL_KINDS, min_nodes=3)
        eng.update(u)
        ops.append(u)
    (tmp_path / "g.txt").write_text(dump_graph(g))
    (tmp_path / "b.txt").write_text(dump_vector(b))
    (tmp_path / "ops.txt").write_text(dump_ops(ops))
    ck = tmp_path / "final.ck"
    code, recs, _ = run(["stream", *_args(tmp_path), "--ops", str(tmp_path / "ops.txt"),
                         "--checkpoint-out", str(ck)])
    assert code == 0
    (tmp_path / "g2.txt").write_text(dump_graph(eng.graph))
    (tmp_path / "b2.txt").write_text(dump_vector(eng.b))
    _, (final,), _ = run(["solve", "--graph", str(tmp_path / "g2.txt"),
                          "--b", str(tmp_path / "b2.txt"), "--no-timing"])
    assert recs[-1]["n"] == final["n"]
    assert recs[-1]["residual"] == pytest.approx(final["residual"], abs=1e-9)
    assert recs[-1]["x_norm"] == pytest.approx(final["x_norm"], rel=1e-8, abs=1e-9)


def test_checkpoint_resume_matches_uninterrupted_run(tmp_path):
    rng = np.random.default_rng(10)
    g = random_graph(9, 0.3, True, rng)
    h, ops = g.copy(), []
    for _ in range(12):
        u = random_update(h, rng, EDGE_KINDS)
        h.apply(u)
        ops.append(u)
    (tmp_path / "g.txt").write_text(dump_graph(g))
    (tmp_path / "b.txt").write_text(dump_vector(rng.integers(-4, 5, 9)))
    (tmp_path / "a.txt").write_text(dump_ops(ops[:6]))
    (tmp_path / "b_ops.txt").write_text(dump_ops(ops[6:]))
    (tmp_path / "all.txt").write_text(dump_ops(ops))
    for mode in ("l2", "l1", "svd"):
        ck = tmp_path / f"{mode}.ck"
        _, full, _ = run(["stream", *_args(tmp_path), "--mode", mode,
                          "--ops", str(tmp_path / "all.txt")])
        run(["stream", *_args(tmp_path), "--mode", mode, "--ops", str(tmp_path / "a.txt"),
             "--checkpoint-out", str(ck)])
        code, resumed, _ = run(["stream", "--checkpoint-in", str(ck), "--mode", mode,
                                "--no-timing", "--ops", str(tmp_path / "b_ops.txt")])
        assert code == 0
        key = "sigma" if mode == "svd" else "x_norm"
        assert np.allclose(resumed[-1][key], full[-1][key], rtol=1e-9, atol=1e-9)


def test_laplacian_node_op_without_bound_is_recomputed(tmp_path):
    (tmp_path / "g.txt").write_text("graph 3 undirected\nedge 1 2 1\nedge 2 3 2\n")
    (tmp_path / "b.txt").write_text("vector 3\n1 2 3\n")
    (tmp_path / "ops.txt").write_text("ni 1 1 1 0.5\nei 3 4 2\n")
    code, recs, _ = run(["stream", *_args(tmp_path), "--embedding", "laplacian",
                         "--ops", str(tmp_path / "ops.txt"), "--verify"])
    assert code == 0
    assert recs[1]["recomputed"] is True and recs[1]["n"] == 4
    assert "recomputed" not in recs[2] and recs[2]["verified"]


def test_oracle_command(small):
    code, (rec,), _ = run(["oracle", *_args(small)])
    assert code == 0 and np.allclose(rec["x"], [0.0, 3.0])
    code, (rec,), _ = run(["oracle", *_args(small), "--mode", "svd"])
    assert rec["sigma"] == [1.0]


@pytest.mark.parametrize("ops_text, line", [("ei 1 2 1\n", 1), ("wc 1 2 3\nzz\n", 2),
                                            ("ed 2 1\n", 1)])
def test_bad_ops_exit_1_with_position(small, capsys, ops_text, line):
    (small / "ops.txt").write_text(ops_text)
    code, _, _ = run(["stream", *_args(small), "--ops", str(small / "ops.txt")])
    assert code == 1
    assert f"ops.txt:{line}:" in capsys.readouterr().err


def test_input_errors_exit_1(small, capsys):
    assert run(["solve", "--graph", str(small / "nope.txt"), "--b", str(small / "b.txt")])[0] == 1
    (small / "b3.txt").write_text("vector 3\n1 2 3\n")
    assert run(["solve", "--graph", str(small / "g.txt"), "--b", str(small / "b3.txt")])[0] == 1
    assert run(["solve", *_args(small), "--embedding", "laplacian"])[0] == 1
    assert run(["solve", *_args(small), "--rank", "2"])[0] == 1
    assert run(["solve", *_args(small), "--degree-bound", "2"])[0] == 1
    assert "error" in capsys.readouterr().err


def test_l1_node_op_is_recomputed(small):
    (small / "ops.txt").write_text("nd 1\n")
    code, recs, _ = run(["stream", *_args(small), "--mode", "l1", "--ops",
                         str(small / "ops.txt"), "--verify"])
    assert code == 0 and recs[1]["recomputed"] and recs[1]["n"] == 1


def test_verify_failure_exits_2(small, monkeypatch):
    monkeypatch.setattr(L2Engine, "verify", lambda self: False)
    code, recs, _ = run(["solve", *_args(small), "--verify"])
    assert code == 2 and recs[0]["verified"] is False


def test_bench_writes_csv(tmp_path):
    out = tmp_path / "bench.csv"
    code, _, _ = run(["bench", "--sizes", "24,32", "--ops", "weight_change,edge_insert",
                      "--bench-repeats", "2", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["n"], r["op"]) for r in rows] == [("24", "weight_change"), ("24", "edge_insert"),
                                                 ("32", "weight_change"), ("32", "edge_insert")]
    assert all(float(r["ratio"]) > 0 for r in rows)


def test_bench_modes_run():
    for mode, op in (("l1", "weight_change"), ("svd", "node_insert")):
        row = cli.bench_one(mode, emb.ADJACENCY, 24, op, 2, np.random.default_rng(0), rank=4)
        assert row["mode"] == mode and row["incremental_s"] > 0


def test_log_level_from_environment(small, monkeypatch, capsys):
    monkeypatch.setenv("DYNGRAPH_LOG", "nonsense")
    assert run(["solve", *_args(small)])[0] == 0
