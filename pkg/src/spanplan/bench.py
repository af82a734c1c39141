"""Workload runner: cost ratios against the exhaustive optimum, optimization
times, complexity grouping, topology sweeps, CSV emission.

Workload-level cost ratio is sum(algorithm costs) / sum(exhaustive costs)
over the queries where the exhaustive baseline succeeded; per-query ratios
are also emitted.  When an evaluation catalog is supplied, plans are chosen
under the selection source and every reported cost (including the baseline)
is re-evaluated under the evaluation source.
"""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .cost import CardinalitySource, CostContext, CostParams
from .enumerators import ALGORITHMS, este, run_algorithm
from .errors import SpanPlanError
from .graph import JoinGraph, TopologyKind, gen_topology
from .plan import reevaluate_plan

SIMPLE = "simple"
MODERATE = "moderate"
COMPLEX = "complex"


def complexity_group(n_joins: int) -> str:
    """Bucket a query by join count: <=9 simple, 10-19 moderate, >=20 complex."""
    if n_joins <= 9:
        return SIMPLE
    if n_joins <= 19:
        return MODERATE
    return COMPLEX


@dataclass(frozen=True)
class WorkloadQuery:
    query_id: str
    graph: JoinGraph
    selection_source: CardinalitySource
    evaluation_source: CardinalitySource | None = None
    topology: str | None = None
    n_tables: int | None = None
    seed: int | None = None


@dataclass
class BenchRecord:
    query_id: str
    group: str
    algorithm: str
    internal_cost: float | None = None
    cost_ratio: float | None = None
    opt_time_ms: float | None = None
    distinct_plans: int | None = None
    topology: str | None = None
    n_tables: int | None = None
    seed: int | None = None
    error: str | None = None


CSV_COLUMNS = [
    "query_id", "group", "algorithm", "internal_cost", "cost_ratio",
    "opt_time_ms", "distinct_plans", "topology", "n_tables", "seed", "error",
]
assert set(CSV_COLUMNS) == {f.name for f in fields(BenchRecord)}


def _run_query(query: WorkloadQuery, algorithms, params: CostParams | None,
               timeout: float, backend: str) -> list[BenchRecord]:
    group = complexity_group(query.graph.n_edges)
    base = dict(
        group=group,
        topology=query.topology,
        n_tables=query.n_tables if query.n_tables is not None else query.graph.n_vertices,
        seed=query.seed,
    )
    sel_ctx = CostContext(query.graph, query.selection_source, params)
    eval_ctx = None
    if query.evaluation_source is not None:
        eval_ctx = CostContext(query.graph, query.evaluation_source, params)

    def final_cost(plan) -> float:
        if eval_ctx is None:
            return plan.internal_cost
        return reevaluate_plan(plan, query.graph, eval_ctx).internal_cost

    records: dict[str, BenchRecord] = {}
    costs: dict[str, float] = {}
    for name in algorithms:
        rec = BenchRecord(query_id=query.query_id, algorithm=name, **base)
        try:
            t0 = time.perf_counter()
            if name == "este":
                plan, stats, distinct = este(query.graph, sel_ctx, params)
                rec.distinct_plans = distinct
            else:
                plan, stats = run_algorithm(
                    name, query.graph, sel_ctx, params, timeout=timeout, backend=backend
                )
            rec.opt_time_ms = (time.perf_counter() - t0) * 1000.0
            rec.internal_cost = final_cost(plan)
            costs[name] = rec.internal_cost
        except SpanPlanError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        records[name] = rec

    baseline = costs.get("exhaustive")
    if baseline is not None and baseline > 0:
        for name, rec in records.items():
            if rec.internal_cost is not None:
                rec.cost_ratio = rec.internal_cost / baseline
    return [records[name] for name in algorithms]


def run_workload(queries, algorithms=ALGORITHMS, params: CostParams | None = None,
                 timeout: float = 60.0, jobs: int = 1, backend: str = "auto"):
    """One BenchRecord per (query, algorithm); per-query failures are
    recorded, never raised.  Output order is (query_id, algorithm)."""
    algorithms = list(algorithms)

    def work(query):
        return _run_query(query, algorithms, params, timeout, backend)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(work, queries))
    else:
        chunks = [work(q) for q in queries]
    records = [rec for chunk in chunks for rec in chunk]
    order = {name: i for i, name in enumerate(algorithms)}
    records.sort(key=lambda r: (r.query_id, order[r.algorithm]))
    return records


def topology_sweep(kind: TopologyKind | str, sizes, seeds_per_size: int,
                   algorithms=ALGORITHMS, params: CostParams | None = None,
                   timeout: float = 60.0, jobs: int = 1, backend: str = "auto"):
    """Generate graphs for every (size, seed) and run the workload on them."""
    kind = TopologyKind(kind)
    queries = []
    for n in sizes:
        for seed in range(seeds_per_size):
            graph, model = gen_topology(kind, n, seed)
            queries.append(
                WorkloadQuery(
                    query_id=f"{kind.value}-{n:02d}-s{seed}",
                    graph=graph,
                    selection_source=model,
                    topology=kind.value,
                    n_tables=n,
                    seed=seed,
                )
            )
    return run_workload(queries, algorithms, params, timeout=timeout, jobs=jobs, backend=backend)


def aggregate(records) -> dict:
    """Per-group and total summaries.

    Workload cost ratio = sum of algorithm costs / sum of exhaustive costs,
    restricted to queries where the exhaustive baseline produced a cost.
    """
    if not records:
        raise SpanPlanError("no records to aggregate")
    baseline_by_query = {
        r.query_id: r.internal_cost
        for r in records
        if r.algorithm == "exhaustive" and r.internal_cost is not None
    }

    def summarize(recs) -> dict:
        per_algo: dict[str, dict] = {}
        for algo in sorted({r.algorithm for r in recs}):
            mine = [r for r in recs if r.algorithm == algo]
            cost_sum = 0.0
            base_sum = 0.0
            n_ratio = 0
            opt_ms = 0.0
            errors = 0
            for r in mine:
                if r.opt_time_ms is not None:
                    opt_ms += r.opt_time_ms
                if r.error is not None:
                    errors += 1
                base = baseline_by_query.get(r.query_id)
                if r.internal_cost is not None and base is not None and base > 0:
                    cost_sum += r.internal_cost
                    base_sum += base
                    n_ratio += 1
            per_algo[algo] = {
                "queries": len(mine),
                "rated_queries": n_ratio,
                "cost_ratio": (cost_sum / base_sum) if base_sum > 0 else None,
                "opt_time_ms": opt_ms,
                "errors": errors,
            }
        return per_algo

    groups = {}
    for grp in (SIMPLE, MODERATE, COMPLEX):
        recs = [r for r in records if r.group == grp]
        if recs:
            groups[grp] = summarize(recs)
    return {
        "ratio_definition": "sum(algorithm costs) / sum(exhaustive costs) over rated queries",
        "groups": groups,
        "total": summarize(records),
    }


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_cell(getattr(r, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def _parse_cell(col: str, text: str):
    if text == "":
        return None
    if col in ("internal_cost", "cost_ratio", "opt_time_ms"):
        return float(text)
    if col in ("distinct_plans", "n_tables", "seed"):
        return int(text)
    return text


def read_csv(path_or_text) -> list[BenchRecord]:
    if "\n" in str(path_or_text):
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8", newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header != CSV_COLUMNS:
        raise SpanPlanError("unexpected CSV header")
    out = []
    for row in body:
        kwargs = {col: _parse_cell(col, cell) for col, cell in zip(header, row)}
        out.append(BenchRecord(**kwargs))
    return out


def growth_exponent(sizes, counts) -> tuple[float, float]:
    """Log-log regression slope and R^2 of counts against sizes."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
