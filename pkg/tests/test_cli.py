import json

import spanplan as sp
from spanplan.cli import main

from .conftest import DATA_DIR

Q2A = str(DATA_DIR / "query_2a.json")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_count_2a(capsys):
    code, out, err = run(capsys, "count", "--graph", Q2A)
    assert code == 0
    assert err == ""
    doc = json.loads(out)
    assert doc == {"bound": 120, "valid": 72, "invalid": 48,
                   "linear": 36, "bushy": 36, "t_b": 5040}


def test_count_chain4(capsys, tmp_path):
    graph, model = sp.gen_topology("chain", 4, seed=0)
    path = tmp_path / "chain4.json"
    path.write_text(sp.graph_to_json(graph, model))
    code, out, err = run(capsys, "count", "--graph", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["bound"] == 6 and doc["valid"] == 6 and doc["invalid"] == 0


def test_optimize_este_2a(capsys):
    code, out, err = run(capsys, "optimize", "--graph", Q2A, "--algo", "este")
    assert code == 0
    assert err == ""
    doc = json.loads(out)
    assert doc["algorithm"] == "este"
    assert doc["internal_cost"] == 1_692_001
    assert doc["internal_cost"] <= 2_451_001
    assert doc["stats"]["elapsed_ms"] == 0.0
    assert [s["edge"] for s in doc["steps"]] + doc["filters"] == [0, 1, 2, 4, 3]


def test_optimize_exhaustive_two_table(capsys, tmp_path):
    path = tmp_path / "two.json"
    path.write_text(json.dumps({
        "tables": [{"name": "A", "cardinality": 100}, {"name": "B", "cardinality": 50}],
        "joins": [{"left": "A", "right": "B"}],
        "cardinalities": {"A": 100, "B": 50, "A,B": 40},
    }))
    code, out, err = run(capsys, "optimize", "--graph", str(path), "--algo", "exhaustive")
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert len(doc["steps"]) == 1
    assert doc["filters"] == []


def test_optimize_missing_graph_flag(capsys):
    code, out, err = run(capsys, "optimize")
    assert code == 1
    assert "usage" in err
    assert out == ""


def test_optimize_unknown_algo(capsys):
    code, _, err = run(capsys, "optimize", "--graph", Q2A, "--algo", "magic")
    assert code == 1
    assert "usage" in err


def test_optimize_unreadable_graph(capsys):
    code, _, err = run(capsys, "optimize", "--graph", "/nonexistent.json")
    assert code == 1
    assert err.strip().count("\n") == 0  # single-line diagnostic


def test_optimize_timeout_exit_code(capsys, tmp_path):
    graph, model = sp.gen_topology("clique", 14, seed=0)
    path = tmp_path / "big.json"
    path.write_text(sp.graph_to_json(graph, model))
    code, _, err = run(capsys, "optimize", "--graph", str(path),
                       "--algo", "exhaustive", "--timeout", "0.000000001")
    assert code == 2
    assert "timeout" in err


def test_gen_counts_and_determinism(capsys, tmp_path):
    f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
    for f in (f1, f2):
        code, _, err = run(capsys, "gen", "--topology", "clique", "--tables", "5",
                           "--seed", "7", "--out", str(f))
        assert code == 0 and err == ""
    assert f1.read_bytes() == f2.read_bytes()
    doc = json.loads(f1.read_text())
    assert len(doc["joins"]) == 10
    assert len(doc["selectivities"]) == 10

    code, out, _ = run(capsys, "gen", "--topology", "chain", "--tables", "4")
    assert code == 0
    assert len(json.loads(out)["joins"]) == 3


def test_bench_2a_csv(capsys, tmp_path):
    out_csv = tmp_path / "bench.csv"
    code, _, err = run(capsys, "bench", "--graph", Q2A, "--out", str(out_csv))
    assert code == 0 and err == ""
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 6  # header + five algorithms
    rows = [line.split(",") for line in lines[1:]]
    ratios = {row[2]: row[4] for row in rows}
    assert float(ratios["exhaustive"]) == 1.0
    times = {row[2]: row[5] for row in rows}
    assert set(times.values()) == {"0.0"}  # deterministic without --timing
    summary = json.loads((tmp_path / "bench.summary.json").read_text())
    assert summary["total"]["exhaustive"]["cost_ratio"] == 1.0


def test_bench_topology_sweep_rows(capsys, tmp_path):
    out_csv = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "bench", "--topology", "clique", "--sizes", "4,5",
                       "--seeds", "2", "--algos", "exhaustive,este", "--out", str(out_csv))
    assert code == 0 and err == ""
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 1 + 2 * 2 * 2


def test_bench_requires_input(capsys):
    code, _, err = run(capsys, "bench")
    assert code == 1
    assert err != ""


def test_cli_byte_identical_reruns(capsys, tmp_path):
    outputs = []
    for jobs in ("1", "8", "1"):
        f = tmp_path / f"plan{len(outputs)}.json"
        code, _, err = run(capsys, "optimize", "--graph", Q2A, "--algo", "este",
                           "--jobs", jobs, "--seed", "0", "--out", str(f))
        assert code == 0 and err == ""
        outputs.append(f.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_cli_timing_flag_reports_real_time(capsys):
    code, out, _ = run(capsys, "optimize", "--graph", Q2A, "--algo", "prim", "--timing")
    assert code == 0
    assert json.loads(out)["stats"]["elapsed_ms"] > 0.0
