import itertools
import math

import pytest

import spanplan as sp
from spanplan.cost import CostContext

from .conftest import mixed_instances


# ------------------------------------------------------- counting formulas

def _catalan_by_pascal(n: int) -> int:
    """Independent Catalan evaluation: binomial(2n, n)/(n+1) via Pascal rows."""
    row = [1]
    for _ in range(2 * n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row[n] // (n + 1)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 4), (5, 5040)])
def test_binary_tree_space_size_values(n, expected):
    assert sp.binary_tree_space_size(n) == expected


def test_binary_tree_space_size_matches_bruteforce():
    # tree space = Catalan(n) labeled n! ways; product computed iteratively.
    for n in range(1, 9):
        labelings = 1
        for k in range(2, n + 1):
            labelings *= k
        assert sp.binary_tree_space_size(n) == _catalan_by_pascal(n) * labelings


def test_binary_tree_space_size_guard():
    with pytest.raises(sp.LimitExceededError):
        sp.binary_tree_space_size(0)
    with pytest.raises(sp.LimitExceededError):
        sp.binary_tree_space_size(16)


@pytest.mark.parametrize("v,e,expected", [(5, 5, 120), (2, 1, 1), (4, 6, 120)])
def test_arrangement_bound_values(v, e, expected):
    assert sp.arrangement_bound(v, e) == expected


def test_arrangement_bound_matches_bruteforce():
    for e in range(1, 9):
        for v in range(2, e + 2):
            got = sp.arrangement_bound(v, e)
            expected = sum(1 for _ in itertools.permutations(range(e), v - 1))
            assert got == expected


def test_arrangement_bound_guard():
    with pytest.raises(sp.LimitExceededError):
        sp.arrangement_bound(4, 2)


# ------------------------------------------------------- tree enumeration

def test_counts_2a(q2a):
    graph, _ = q2a
    counts = sp.enumerate_ordered_trees(graph)
    assert counts == sp.TreeCounts(bound=120, valid=72, invalid=48, linear=36, bushy=36)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_counts_chain_factorial(n):
    graph, _ = sp.gen_topology("chain", n, seed=0)
    counts = sp.enumerate_ordered_trees(graph)
    assert counts.valid == math.factorial(n - 1)
    assert counts.invalid == 0
    assert counts.bound == counts.valid


def test_counts_triangle_all_linear():
    graph, _ = sp.gen_topology("cycle", 3, seed=0)
    counts = sp.enumerate_ordered_trees(graph)
    assert counts == sp.TreeCounts(bound=6, valid=6, invalid=0, linear=6, bushy=0)


def test_counts_sum_to_bound_across_topologies():
    for kind, n, graph, _ in mixed_instances(20, base_seed=50):
        counts = sp.enumerate_ordered_trees(graph)
        assert counts.valid + counts.invalid == counts.bound
        assert counts.linear + counts.bushy == counts.valid
        if graph.n_edges == graph.n_vertices - 1:  # acyclic
            assert counts.invalid == 0
            assert counts.valid == math.factorial(graph.n_vertices - 1)


def test_counts_limit_guard():
    graph, _ = sp.gen_topology("clique", 8, seed=0)  # bound 28!/21! ~ 6e9
    with pytest.raises(sp.LimitExceededError):
        sp.enumerate_ordered_trees(graph)


def test_iter_ordered_trees_agrees_with_kernel(q2a):
    graph, _ = q2a
    seqs = list(sp.oracle.iter_ordered_trees(graph))
    counts = sp.enumerate_ordered_trees(graph)
    assert len(seqs) == counts.bound
    assert sum(1 for _, valid, _ in seqs if valid) == counts.valid
    assert sum(1 for _, valid, linear in seqs if valid and linear) == counts.linear
    # Every valid arrangement uses |V|-1 distinct edges and no prefix cycle;
    # every invalid one closes a cycle somewhere.
    for seq, valid, _ in seqs:
        parent = list(range(graph.n_vertices))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        clean = True
        for eid in seq:
            e = graph.edges[eid]
            ru, rv = find(e.v1), find(e.v2)
            if ru == rv:
                clean = False
                break
            parent[ru] = rv
        assert clean == valid


# ------------------------------------------------------------ brute force

def test_brute_force_2a(q2a):
    graph, catalog = q2a
    plan, stats = sp.brute_force_optimal(graph, catalog)
    assert plan.internal_cost == 1_617_001.0
    assert stats.plans_enumerated == 72
    assert stats.subplans_reached == 14
    assert stats.join_costs_computed == 32
    exh, _ = sp.exhaustive(graph, catalog)
    assert plan.internal_cost == exh.internal_cost


def test_brute_force_two_table(two_table):
    graph, catalog = two_table
    plan, stats = sp.brute_force_optimal(graph, catalog)
    assert stats.plans_enumerated == 1
    assert len(plan.steps) == 1


def test_brute_force_matches_exhaustive_on_random_graphs():
    for kind, n, graph, model in mixed_instances(40, base_seed=4000):
        ctx = CostContext(graph, model)
        exh, _ = sp.exhaustive(graph, ctx)
        brute, _ = sp.brute_force_optimal(graph, ctx)
        assert exh.internal_cost == brute.internal_cost, (kind, n)
        sp.validate_plan(graph, brute, ctx)


def test_brute_force_lower_bounds_heuristics(q2a):
    graph, catalog = q2a
    ctx = CostContext(graph, catalog)
    brute, _ = sp.brute_force_optimal(graph, ctx)
    for name in ("prim", "kruskal", "goo", "este"):
        plan, _ = sp.run_algorithm(name, graph, ctx)
        assert brute.internal_cost <= plan.internal_cost


def test_brute_force_limit_guard():
    graph, model = sp.gen_topology("clique", 8, seed=1)
    with pytest.raises(sp.LimitExceededError):
        sp.brute_force_optimal(graph, model)
