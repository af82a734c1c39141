"""Pure-Python search kernels.

These are the reference implementations of the two hot paths: the subset
dynamic program over connected vertex sets, and the depth-first enumeration
of ordered spanning-tree edge arrangements.  The compiled extension in
``_speedups.pyx`` mirrors this module operation-for-operation; equivalence
is enforced by tests/test_kernels.py.

Cost bookkeeping convention: per-join increments fold in the scan costs of
base tables consumed by that join (an index-lookup inner table is never
scanned), and a subtree's cost is always accumulated as
``increment + cost(left) + cost(right)``.  Keeping that expression shape
identical everywhere makes costs bit-for-bit comparable across kernels.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from ..errors import OptimizeTimeout

OP_HJ = 0
OP_INL = 1
SIDE_LEFT = 0
SIDE_RIGHT = 1

name = "pure"
is_compiled = False


@dataclass
class Instance:
    """Compact numeric view of one planning problem."""

    n: int
    edge_u: tuple[int, ...]
    edge_v: tuple[int, ...]
    scan: tuple[float, ...]        # per-vertex scan cost (tau * base size)
    indexed: tuple[bool, ...]
    lam: float
    cards: dict[int, float]        # mask -> output cardinality
    pair_inner: dict[int, int]     # 2-vertex edge mask -> lookup-side vertex


def merge(inst: Instance, l_mask: int, r_mask: int):
    """Cost one join of two disjoint connected subsets.

    Returns (step_cost, op, side, out_card).  ``side`` names the hash-build
    side for OP_HJ and the index-lookup (inner) side for OP_INL, relative to
    the (l_mask, r_mask) argument order.
    """
    cards = inst.cards
    out = cards[l_mask | r_mask]
    lc = cards[l_mask]
    rc = cards[r_mask]
    l_single = l_mask & (l_mask - 1) == 0
    r_single = r_mask & (r_mask - 1) == 0

    # Hash join: build on the smaller input, ties toward the smaller mask.
    if lc < rc or (lc == rc and l_mask < r_mask):
        build_card = lc
        side = SIDE_LEFT
    else:
        build_card = rc
        side = SIDE_RIGHT
    cost = out + build_card
    if l_single:
        cost = cost + inst.scan[l_mask.bit_length() - 1]
    if r_single:
        cost = cost + inst.scan[r_mask.bit_length() - 1]
    op = OP_HJ

    # Index nested-loop: the inner must be a base table.  When both sides
    # are base tables the edge orientation designates the inner (its right
    # endpoint); otherwise the singleton side is the inner.
    inner = -1
    if l_single and r_single:
        inner = inst.pair_inner.get(l_mask | r_mask, -1)
    elif r_single:
        inner = r_mask.bit_length() - 1
    elif l_single:
        inner = l_mask.bit_length() - 1
    if inner >= 0 and inst.indexed[inner]:
        inner_mask = 1 << inner
        outer_mask = r_mask if inner_mask == l_mask else l_mask
        outer_card = cards[outer_mask]
        if outer_card > 0.0:
            inl = inst.lam * (out if out >= outer_card else outer_card)
        else:
            inl = 0.0
        if outer_mask & (outer_mask - 1) == 0:
            inl = inl + inst.scan[outer_mask.bit_length() - 1]
        if inl < cost:
            cost = inl
            op = OP_INL
            side = SIDE_LEFT if inner_mask == l_mask else SIDE_RIGHT
    return cost, op, side, out


def _connectivity(n: int, adjacency: list[int]) -> list[bool]:
    size = 1 << n
    conn = [False] * size
    for mask in range(1, size):
        seed = mask & -mask
        reach = seed
        frontier = seed
        while frontier:
            v = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            grow = adjacency[v] & mask & ~reach
            reach |= grow
            frontier |= grow
        conn[mask] = reach == mask
    return conn


def _adjacency(inst: Instance) -> list[int]:
    adj = [0] * inst.n
    for u, v in zip(inst.edge_u, inst.edge_v):
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return adj


def dp_search(inst: Instance, prune_bound: float = float("inf"), deadline: float = 0.0):
    """Optimal join over every connected subset via dynamic programming.

    Returns (root_cost, choices, subplans, splits, evals) where
    choices[mask] = (left_submask, op, side) reconstructs the best plan.
    Subsets whose best cost already exceeds prune_bound are never used as
    children of larger subsets (cost-based pruning; increments are
    non-negative, so this cannot prune an optimal plan).
    """
    n = inst.n
    full = (1 << n) - 1
    adj = _adjacency(inst)
    conn = _connectivity(n, adj)
    nbr = [0] * (full + 1)
    for mask in range(1, full + 1):
        low = mask & -mask
        nbr[mask] = nbr[mask ^ low] | adj[low.bit_length() - 1]

    best: dict[int, float] = {}
    choices: dict[int, tuple[int, int, int]] = {}
    for v in range(n):
        best[1 << v] = 0.0

    subplans = 0
    splits = 0
    checked = 0
    for mask in range(1, full + 1):
        if not conn[mask] or mask & (mask - 1) == 0:
            continue
        checked += 1
        if deadline and checked % 1024 == 0 and time.perf_counter() > deadline:
            raise OptimizeTimeout("exhaustive enumeration ran past its deadline")
        low = mask & -mask
        best_cost = float("inf")
        best_choice = None
        touched = False
        # Canonical split order: s1 descends and always contains the low bit.
        s1 = (mask - 1) & mask
        while s1:
            if s1 & low:
                s2 = mask ^ s1
                c1 = best.get(s1)
                c2 = best.get(s2)
                if (
                    c1 is not None
                    and c2 is not None
                    and c1 <= prune_bound
                    and c2 <= prune_bound
                    and nbr[s1] & s2
                ):
                    splits += 1
                    touched = True
                    inc, op, side, _out = merge(inst, s1, s2)
                    total = inc + c1 + c2
                    if total < best_cost:
                        best_cost = total
                        best_choice = (s1, op, side)
            s1 = (s1 - 1) & mask
        if touched:
            subplans += 1
        if best_choice is not None:
            best[mask] = best_cost
            choices[mask] = best_choice

    if full not in best and n > 1:
        # Pruning can only hide the root if the bound itself was a plan cost,
        # in which case a plan at exactly the bound exists; signal the caller.
        return float("inf"), choices, subplans, splits, splits
    root = best.get(full, 0.0)
    return root, choices, subplans, splits, splits


def count_trees(n: int, edge_u, edge_v, deadline: float = 0.0):
    """Count ordered edge arrangements of length n-1: valid spanning trees
    (split into linear/bushy) versus arrangements pruned for closing a cycle.

    Returns (valid, invalid, linear, bushy).
    """
    n_edges = len(edge_u)
    slots = n - 1
    if slots == 0:
        return 1, 0, 1, 0

    # ff[u][s]: ordered ways to fill s slots from u distinct edges.
    ff = [[1] * (slots + 1) for _ in range(n_edges + 1)]
    for u in range(n_edges + 1):
        for s in range(1, slots + 1):
            ff[u][s] = 0 if u < s else ff[u - 1][s - 1] * u

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            x = parent[x]
        return x

    used = [False] * n_edges
    counts = [0, 0, 0, 0]  # valid, invalid, linear, bushy
    state = {"nodes": 0}

    def rec(depth: int, touched_mask: int, touched_cnt: int, linear: bool):
        state["nodes"] += 1
        if deadline and state["nodes"] % 4096 == 0 and time.perf_counter() > deadline:
            raise OptimizeTimeout("tree enumeration ran past its deadline")
        remaining = slots - depth
        unused = n_edges - depth
        for e in range(n_edges):
            if used[e]:
                continue
            u, v = edge_u[e], edge_v[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                counts[1] += ff[unused - 1][remaining - 1]
                continue
            parent[ru] = rv
            used[e] = True
            new_touched = touched_mask | (1 << u) | (1 << v)
            new_cnt = touched_cnt + ((touched_mask >> u) & 1 == 0) + ((touched_mask >> v) & 1 == 0)
            new_linear = linear and (new_cnt - (depth + 1) == 1)
            if depth + 1 == slots:
                counts[0] += 1
                if new_linear:
                    counts[2] += 1
                else:
                    counts[3] += 1
            else:
                rec(depth + 1, new_touched, new_cnt, new_linear)
            used[e] = False
            parent[ru] = ru

    rec(0, 0, 0, True)
    return counts[0], counts[1], counts[2], counts[3]


def brute_search(inst: Instance, deadline: float = 0.0):
    """Exhaustive walk of every valid ordered spanning tree, tracking the
    minimum-cost one.  No cost pruning: the valid/invalid/linear/bushy counts
    stay exact and every complete plan is compared.

    Returns (best_cost, best_seq, valid, invalid, linear, bushy,
    subplans, splits, evals).
    """
    n = inst.n
    edge_u, edge_v = inst.edge_u, inst.edge_v
    n_edges = len(edge_u)
    slots = n - 1
    if slots == 0:
        return 0.0, [], 1, 0, 1, 0, 0, 0, 0

    ff = [[1] * (slots + 1) for _ in range(n_edges + 1)]
    for u in range(n_edges + 1):
        for s in range(1, slots + 1):
            ff[u][s] = 0 if u < s else ff[u - 1][s - 1] * u

    parent = list(range(n))
    comp_mask = [1 << v for v in range(n)]
    comp_cost = [0.0] * n

    def find(x: int) -> int:
        while parent[x] != x:
            x = parent[x]
        return x

    used = [False] * n_edges
    seq: list[int] = []
    memo: dict[tuple[int, int], float] = {}
    counts = [0, 0, 0, 0]
    state = {"best": float("inf"), "seq": None, "evals": 0, "nodes": 0}

    def rec(depth: int, touched_mask: int, touched_cnt: int, linear: bool):
        state["nodes"] += 1
        if deadline and state["nodes"] % 4096 == 0 and time.perf_counter() > deadline:
            raise OptimizeTimeout("oracle enumeration ran past its deadline")
        remaining = slots - depth
        unused = n_edges - depth
        for e in range(n_edges):
            if used[e]:
                continue
            u, v = edge_u[e], edge_v[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                counts[1] += ff[unused - 1][remaining - 1]
                continue
            lm, rm = comp_mask[ru], comp_mask[rv]
            key = (lm, rm) if lm < rm else (rm, lm)
            state["evals"] += 1
            inc = memo.get(key)
            if inc is None:
                inc, _op, _side, _out = merge(inst, key[0], key[1])
                memo[key] = inc
            new_cost = inc + comp_cost[ru] + comp_cost[rv]

            parent[ru] = rv
            saved_mask, saved_cost = comp_mask[rv], comp_cost[rv]
            comp_mask[rv] = lm | rm
            comp_cost[rv] = new_cost
            used[e] = True
            seq.append(e)
            new_touched = touched_mask | (1 << u) | (1 << v)
            new_cnt = touched_cnt + ((touched_mask >> u) & 1 == 0) + ((touched_mask >> v) & 1 == 0)
            new_linear = linear and (new_cnt - (depth + 1) == 1)
            if depth + 1 == slots:
                counts[0] += 1
                if new_linear:
                    counts[2] += 1
                else:
                    counts[3] += 1
                if new_cost < state["best"]:
                    state["best"] = new_cost
                    state["seq"] = list(seq)
            else:
                rec(depth + 1, new_touched, new_cnt, new_linear)
            seq.pop()
            used[e] = False
            comp_mask[rv] = saved_mask
            comp_cost[rv] = saved_cost
            parent[ru] = ru

    rec(0, 0, 0, True)
    subplans = len({a | b for a, b in memo})
    return (
        state["best"],
        state["seq"] or [],
        counts[0],
        counts[1],
        counts[2],
        counts[3],
        subplans,
        len(memo),
        state["evals"],
    )
