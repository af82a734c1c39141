"""Ground-truth brute force over ordered spanning trees.

An ordered edge arrangement of length |V|-1 is a valid plan iff no prefix
closes a cycle (the full set then necessarily spans all vertices).  A valid
arrangement is linear iff every prefix forms a single connected component.
This module counts the arrangement space exactly and certifies optimality
of the dynamic-programming search by exhaustive comparison.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from . import _kernels
from .cost import CardinalitySource, CostContext, CostParams
from .errors import LimitExceededError, SpanPlanError
from .graph import JoinGraph
from .plan import EnumStats, PlanBuilder

DEFAULT_ARRANGEMENT_LIMIT = 10**7

BINARY_SPACE_MAX_N = 15


def binary_tree_space_size(n: int) -> int:
    """Number of binary join trees over n permutable tables: (2n)!/(n+1)!."""
    if not 1 <= n <= BINARY_SPACE_MAX_N:
        raise LimitExceededError(f"table count {n} outside [1, {BINARY_SPACE_MAX_N}]")
    return math.factorial(2 * n) // math.factorial(n + 1)


def arrangement_bound(v: int, e: int) -> int:
    """Upper bound on ordered spanning trees: e!/(e-v+1)!."""
    if v < 1:
        raise LimitExceededError("vertex count must be positive")
    if e < v - 1:
        raise LimitExceededError(f"{e} edges cannot span {v} vertices")
    return math.perm(e, v - 1)


@dataclass(frozen=True)
class TreeCounts:
    bound: int
    valid: int
    invalid: int
    linear: int
    bushy: int


def enumerate_ordered_trees(graph: JoinGraph, limit: int = DEFAULT_ARRANGEMENT_LIMIT,
                            backend: str = "auto") -> TreeCounts:
    """Count all ordered (|V|-1)-edge arrangements, classified."""
    bound = arrangement_bound(graph.n_vertices, graph.n_edges)
    if bound > limit:
        raise LimitExceededError(f"{bound} arrangements exceed the limit of {limit}")
    kern = _kernels.get_backend(backend)
    edge_u = [e.v1 for e in graph.edges]
    edge_v = [e.v2 for e in graph.edges]
    valid, invalid, linear, bushy = kern.count_trees(graph.n_vertices, edge_u, edge_v)
    return TreeCounts(bound=bound, valid=valid, invalid=invalid, linear=linear, bushy=bushy)


def iter_ordered_trees(graph: JoinGraph):
    """Yield (edge_sequence, valid, linear) for every ordered arrangement.

    Test-oracle generator: materializes invalid arrangements too, so use it
    only on small graphs.
    """
    import itertools

    n = graph.n_vertices
    for seq in itertools.permutations(range(graph.n_edges), n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        valid = True
        linear = True
        touched = 0
        touched_cnt = 0
        for depth, eid in enumerate(seq, start=1):
            e = graph.edges[eid]
            ru, rv = find(e.v1), find(e.v2)
            if ru == rv:
                valid = False
                break
            parent[ru] = rv
            for v in (e.v1, e.v2):
                if not (touched >> v) & 1:
                    touched |= 1 << v
                    touched_cnt += 1
            if touched_cnt - depth != 1:
                linear = False
        yield seq, valid, (linear if valid else False)


def brute_force_optimal(graph: JoinGraph, source: CardinalitySource,
                        params: CostParams | None = None,
                        limit: int = DEFAULT_ARRANGEMENT_LIMIT,
                        timeout: float | None = None, backend: str = "auto"):
    """Minimum-cost plan by walking every valid ordered spanning tree.

    Returns (plan, stats); stats.plans_enumerated is the exact number of
    valid arrangements compared.
    """
    bound = arrangement_bound(graph.n_vertices, graph.n_edges)
    if bound > limit:
        raise LimitExceededError(f"{bound} arrangements exceed the limit of {limit}")
    ctx = source if isinstance(source, CostContext) else CostContext(graph, source, params)
    t0 = time.perf_counter()
    if graph.n_vertices == 1:
        plan = PlanBuilder(graph, ctx, "brute_force").build()
        return plan, EnumStats(plans_enumerated=1, elapsed=time.perf_counter() - t0)

    from .graph import connected_subset_masks

    ctx.ensure_cards(connected_subset_masks(graph))
    deadline = t0 + timeout if timeout else 0.0
    kern = _kernels.get_backend(backend)
    (best_cost, best_seq, valid, invalid, linear, bushy,
     subplans, splits, evals) = kern.brute_search(ctx.instance, deadline)

    builder = PlanBuilder(graph, ctx, "brute_force")
    comp_of = {v: 1 << v for v in range(graph.n_vertices)}
    for eid in best_seq:
        e = graph.edges[eid]
        lm, rm = comp_of[e.v1], comp_of[e.v2]
        builder.add_step(eid, lm, rm)
        merged = lm | rm
        for v in range(graph.n_vertices):
            if (merged >> v) & 1:
                comp_of[v] = merged
    in_tree = set(best_seq)
    for e in graph.edges:
        if e.id not in in_tree:
            builder.add_filter(e.id)
    plan = builder.build()
    if plan.internal_cost != best_cost:
        raise SpanPlanError("kernel cost does not match the reconstructed plan")
    stats = EnumStats(
        subplans_reached=subplans,
        join_costs_computed=splits,
        plans_enumerated=valid,
        evaluations=evals,
        elapsed=time.perf_counter() - t0,
    )
    return plan, stats
