import random

import pytest

import spanplan as sp
from spanplan.bench import (
    BenchRecord,
    WorkloadQuery,
    aggregate,
    complexity_group,
    growth_exponent,
    read_csv,
    records_to_csv,
    run_workload,
    topology_sweep,
)
from spanplan.cost import CardinalityCatalog
from spanplan.graph import connected_subset_masks


@pytest.mark.parametrize(
    "joins,expected",
    [(1, "simple"), (4, "simple"), (9, "simple"), (10, "moderate"),
     (19, "moderate"), (20, "complex"), (28, "complex")],
)
def test_complexity_group(joins, expected):
    assert complexity_group(joins) == expected


def test_run_workload_2a_ratios(q2a):
    graph, catalog = q2a
    query = WorkloadQuery(query_id="2a", graph=graph, selection_source=catalog)
    records = run_workload([query])
    by_algo = {r.algorithm: r for r in records}
    assert len(records) == 5
    assert by_algo["exhaustive"].cost_ratio == 1.0
    assert by_algo["kruskal"].cost_ratio == 2_451_001.0 / 1_617_001.0
    assert by_algo["prim"].cost_ratio == 4_658_001.0 / 1_617_001.0
    assert by_algo["este"].cost_ratio <= by_algo["kruskal"].cost_ratio
    assert by_algo["este"].distinct_plans == 7
    assert by_algo["exhaustive"].group == "simple"
    for r in records:
        assert r.error is None
        assert r.opt_time_ms is not None and r.opt_time_ms >= 0.0


def test_run_workload_is_parallel_safe(q2a):
    graph, catalog = q2a
    queries = [
        WorkloadQuery(query_id=f"q{i}", graph=graph, selection_source=catalog)
        for i in range(6)
    ]
    seq = run_workload(queries, jobs=1)
    par = run_workload(queries, jobs=4)
    strip = lambda rs: [(r.query_id, r.algorithm, r.internal_cost, r.cost_ratio) for r in rs]
    assert strip(seq) == strip(par)


def test_exhaustive_timeout_omits_ratios():
    graph, model = sp.gen_topology("clique", 14, seed=0)
    query = WorkloadQuery(query_id="big", graph=graph, selection_source=model)
    records = run_workload([query], algorithms=("exhaustive", "prim"), timeout=1e-9)
    by_algo = {r.algorithm: r for r in records}
    assert by_algo["exhaustive"].error is not None
    assert by_algo["exhaustive"].cost_ratio is None
    assert by_algo["prim"].internal_cost is not None
    assert by_algo["prim"].cost_ratio is None


def test_estimated_selection_can_beat_estimated_optimum():
    """With selection under a distorted catalog and evaluation under the true
    one, heuristic ratios may drop below 1; the harness must accept that."""
    graph, model = sp.gen_topology("cycle", 5, seed=3)
    true_entries = {m: model.lookup(graph, m) for m in connected_subset_masks(graph)}
    rng = random.Random(3 * 31 + 7)
    est_entries = {
        m: (v if bin(m).count("1") == 1 else max(0, int(v * rng.choice([0.01, 0.1, 1, 10, 100]))))
        for m, v in true_entries.items()
    }
    query = WorkloadQuery(
        query_id="distorted",
        graph=graph,
        selection_source=CardinalityCatalog(entries=est_entries, kind="estimated"),
        evaluation_source=CardinalityCatalog(entries=true_entries, kind="true"),
    )
    records = run_workload([query])
    ratios = {r.algorithm: r.cost_ratio for r in records}
    assert ratios["exhaustive"] == 1.0
    assert min(r for r in ratios.values() if r is not None) < 1.0


def test_aggregate_single_record_equals_itself():
    rec = BenchRecord(
        query_id="q", group="simple", algorithm="exhaustive",
        internal_cost=10.0, cost_ratio=1.0, opt_time_ms=2.0,
    )
    summary = aggregate([rec])
    assert summary["total"]["exhaustive"]["cost_ratio"] == 1.0
    assert summary["total"]["exhaustive"]["opt_time_ms"] == 2.0
    assert summary["groups"]["simple"]["exhaustive"]["queries"] == 1


def test_aggregate_weights_by_cost_sums():
    records = [
        BenchRecord("q1", "simple", "exhaustive", internal_cost=100.0, cost_ratio=1.0),
        BenchRecord("q1", "simple", "kruskal", internal_cost=100.0, cost_ratio=1.0),
        BenchRecord("q2", "simple", "exhaustive", internal_cost=100.0, cost_ratio=1.0),
        BenchRecord("q2", "simple", "kruskal", internal_cost=300.0, cost_ratio=3.0),
    ]
    summary = aggregate(records)
    assert summary["total"]["kruskal"]["cost_ratio"] == 2.0


def test_aggregate_empty_rejected():
    with pytest.raises(sp.SpanPlanError):
        aggregate([])


def test_topology_sweep_shape_and_bounds():
    records = topology_sweep("chain", [4, 5], seeds_per_size=2,
                             algorithms=("exhaustive", "prim", "este"))
    assert len(records) == 2 * 2 * 3
    assert {r.topology for r in records} == {"chain"}
    assert {r.n_tables for r in records} == {4, 5}
    for r in records:
        assert r.error is None
        if r.algorithm != "exhaustive":
            assert r.cost_ratio >= 1.0


def test_este_ratio_bounded_by_members_on_sweep():
    records = topology_sweep("clique", [5, 6], seeds_per_size=3,
                             algorithms=("exhaustive", "prim", "kruskal", "este"))
    by_query = {}
    for r in records:
        by_query.setdefault(r.query_id, {})[r.algorithm] = r.cost_ratio
    for ratios in by_query.values():
        assert ratios["este"] <= min(ratios["prim"], ratios["kruskal"])


def test_csv_round_trip(q2a):
    graph, catalog = q2a
    query = WorkloadQuery(query_id="2a", graph=graph, selection_source=catalog,
                          topology=None, n_tables=5, seed=None)
    records = run_workload([query])
    text = records_to_csv(records)
    assert text.splitlines()[0] == (
        "query_id,group,algorithm,internal_cost,cost_ratio,opt_time_ms,"
        "distinct_plans,topology,n_tables,seed,error"
    )
    again = read_csv(text)
    assert again == records


def test_growth_exponent_recovers_power_law():
    slope, r2 = growth_exponent([2, 4, 8, 16], [12, 48, 192, 768])  # 3 * n^2
    assert slope == pytest.approx(2.0)
    assert r2 == pytest.approx(1.0)
