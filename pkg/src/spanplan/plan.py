"""Query plans as ordered spanning-tree edge sequences.

A plan is a sequence of |V|-1 join steps plus the leftover cyclic edges,
which are applied as filters.  Steps carry the operator decision, the output
cardinality, and the cost increment the step adds on top of its two child
subtrees.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .cost import CostContext, HJ, INL
from .errors import PlanValidationError
from .graph import JoinGraph, iter_bits

LINEAR = "linear"
BUSHY = "bushy"


@dataclass(frozen=True)
class PlanStep:
    """One join: the graph edge that triggered it plus the costed decision."""

    edge: int
    operator: str          # "HJ" | "INL"
    side: str              # hash-build side (HJ) or index-lookup side (INL)
    left_mask: int
    right_mask: int
    out_card: float
    step_cost: float

    @property
    def resulting_mask(self) -> int:
        return self.left_mask | self.right_mask

    def side_mask(self) -> int:
        return self.left_mask if self.side == "left" else self.right_mask


@dataclass(frozen=True)
class Plan:
    algorithm: str
    steps: tuple[PlanStep, ...]
    filters: tuple[int, ...]
    internal_cost: float
    total_cost: float
    shape: str


@dataclass
class EnumStats:
    """Search-effort counters for one enumeration run."""

    subplans_reached: int = 0
    join_costs_computed: int = 0
    plans_enumerated: int = 0
    evaluations: int = 0
    elapsed: float = 0.0


class PlanBuilder:
    """Replays merges into a Plan, accumulating component subtree costs."""

    def __init__(self, graph: JoinGraph, ctx: CostContext, algorithm: str):
        self.graph = graph
        self.ctx = ctx
        self.algorithm = algorithm
        self.steps: list[PlanStep] = []
        self.filters: list[int] = []
        self._cost: dict[int, float] = {1 << v: 0.0 for v in range(graph.n_vertices)}

    def component_cost(self, mask: int) -> float:
        return self._cost[mask]

    def add_step(self, edge_id: int, l_mask: int, r_mask: int) -> float:
        res = self.ctx.merge(l_mask, r_mask)
        new_mask = l_mask | r_mask
        new_cost = res.step_cost + self._cost[l_mask] + self._cost[r_mask]
        del self._cost[l_mask]
        del self._cost[r_mask]
        self._cost[new_mask] = new_cost
        self.steps.append(
            PlanStep(
                edge=edge_id,
                operator=res.op.kind,
                side=res.op.side,
                left_mask=l_mask,
                right_mask=r_mask,
                out_card=res.out_card,
                step_cost=res.step_cost,
            )
        )
        return new_cost

    def add_filter(self, edge_id: int) -> None:
        self.filters.append(edge_id)

    def build(self) -> Plan:
        graph = self.graph
        if len(self._cost) != 1:
            raise PlanValidationError("plan does not merge the graph into one component")
        (root_mask, internal) = next(iter(self._cost.items()))
        if root_mask != graph.full_mask:
            raise PlanValidationError("plan does not span all tables")
        total = internal
        for step in self.steps:
            if step.operator == INL:
                inner = step.side_mask()
                if inner & (inner - 1) == 0:
                    total = total + self.ctx.scan_cost(inner.bit_length() - 1)
        return Plan(
            algorithm=self.algorithm,
            steps=tuple(self.steps),
            filters=tuple(sorted(self.filters)),
            internal_cost=internal,
            total_cost=total,
            shape=classify_shape(self.steps),
        )


def classify_shape(steps) -> str:
    for step in steps:
        if step.left_mask & (step.left_mask - 1) and step.right_mask & (step.right_mask - 1):
            return BUSHY
    return LINEAR


def canonical_encoding(plan: Plan) -> tuple:
    """Order-insensitive encoding of the physical plan tree.

    Steps are keyed by their resulting subset with children normalized, so
    two runs that build the same operator-annotated tree in different edge
    orders encode identically.
    """
    items = []
    for s in plan.steps:
        lo, hi = sorted((s.left_mask, s.right_mask))
        items.append((s.resulting_mask, lo, hi, s.edge, s.operator, s.side_mask()))
    return tuple(sorted(items))


def validate_plan(graph: JoinGraph, plan: Plan, ctx: CostContext | None = None) -> None:
    """Check spanning/acyclicity/edge-partition invariants; with a context,
    also recompute every step cost.  Raises PlanValidationError."""
    n = graph.n_vertices
    if len(plan.steps) != n - 1:
        raise PlanValidationError(f"expected {n - 1} steps, found {len(plan.steps)}")
    step_edges = [s.edge for s in plan.steps]
    all_ids = sorted(step_edges) + sorted(plan.filters)
    if sorted(all_ids) != [e.id for e in graph.edges]:
        raise PlanValidationError("steps + filters do not partition the edge set")

    owner = {v: 1 << v for v in range(n)}
    for s in plan.steps:
        edge = graph.edges[s.edge]
        cl, cr = owner[edge.v1], owner[edge.v2]
        if cl == cr:
            raise PlanValidationError(f"step edge {s.edge} closes a cycle")
        if {cl, cr} != {s.left_mask, s.right_mask}:
            raise PlanValidationError(f"step over edge {s.edge} records wrong components")
        merged = cl | cr
        for v in iter_bits(merged):
            owner[v] = merged
    full = graph.full_mask
    if owner[0] != full:
        raise PlanValidationError("steps do not span all tables")
    for f in plan.filters:
        edge = graph.edges[f]
        if owner[edge.v1] != owner[edge.v2]:
            raise PlanValidationError(f"filter edge {f} does not close a cycle")
    if classify_shape(plan.steps) != plan.shape:
        raise PlanValidationError("shape label disagrees with the step structure")

    if ctx is not None:
        rebuilt = PlanBuilder(graph, ctx, plan.algorithm)
        for s in plan.steps:
            rebuilt.add_step(s.edge, s.left_mask, s.right_mask)
            got = rebuilt.steps[-1]
            if got.step_cost != s.step_cost or got.operator != s.operator or got.side != s.side:
                raise PlanValidationError(f"step over edge {s.edge} does not recompute")
        for f in plan.filters:
            rebuilt.add_filter(f)
        again = rebuilt.build()
        if again.internal_cost != plan.internal_cost or again.total_cost != plan.total_cost:
            raise PlanValidationError("plan costs do not recompute")


def reevaluate_plan(plan: Plan, graph: JoinGraph, eval_ctx: CostContext) -> Plan:
    """Re-cost a fixed physical plan under a different cardinality source.

    Join order, operators, and build/inner sides stay as selected; output
    cardinalities and costs are recomputed from the evaluation source.
    """
    lam = eval_ctx.params.lam
    comp_cost: dict[int, float] = {1 << v: 0.0 for v in range(graph.n_vertices)}
    new_steps = []
    total_extra = 0.0
    for s in plan.steps:
        out = eval_ctx.card(s.resulting_mask)
        l_single = s.left_mask & (s.left_mask - 1) == 0
        r_single = s.right_mask & (s.right_mask - 1) == 0
        if s.operator == HJ:
            build_card = eval_ctx.card(s.side_mask())
            inc = out + build_card
            if l_single:
                inc = inc + eval_ctx.scan_cost(s.left_mask.bit_length() - 1)
            if r_single:
                inc = inc + eval_ctx.scan_cost(s.right_mask.bit_length() - 1)
        else:
            inner_mask = s.side_mask()
            outer_mask = s.resulting_mask ^ inner_mask
            outer_card = eval_ctx.card(outer_mask)
            if outer_card > 0.0:
                inc = lam * (out if out >= outer_card else outer_card)
            else:
                inc = 0.0
            if outer_mask & (outer_mask - 1) == 0:
                inc = inc + eval_ctx.scan_cost(outer_mask.bit_length() - 1)
            if inner_mask & (inner_mask - 1) == 0:
                total_extra = total_extra + eval_ctx.scan_cost(inner_mask.bit_length() - 1)
        new_cost = inc + comp_cost[s.left_mask] + comp_cost[s.right_mask]
        del comp_cost[s.left_mask]
        del comp_cost[s.right_mask]
        comp_cost[s.resulting_mask] = new_cost
        new_steps.append(replace(s, out_card=out, step_cost=inc))
    internal = comp_cost[graph.full_mask] if plan.steps else 0.0
    return replace(
        plan,
        steps=tuple(new_steps),
        internal_cost=internal,
        total_cost=internal + total_extra,
    )


def _num(x: float):
    """Emit integral floats as JSON integers for stable, readable output."""
    if x == int(x) and abs(x) < 2**53:
        return int(x)
    return x


def si_display(x: float) -> str:
    for scale, suffix in ((1e9, "G"), (1e6, "M"), (1e3, "K")):
        if abs(x) >= scale:
            return f"{x / scale:.1f}{suffix}"
    return f"{x:.1f}"


def plan_document(plan: Plan, graph: JoinGraph, stats: EnumStats | None = None,
                  timing: bool = False) -> dict:
    doc = {
        "algorithm": plan.algorithm,
        "internal_cost": _num(plan.internal_cost),
        "internal_cost_display": si_display(plan.internal_cost),
        "total_cost": _num(plan.total_cost),
        "shape": plan.shape,
        "steps": [
            {
                "edge": s.edge,
                "left_subset": list(graph.names_of_mask(s.left_mask)),
                "right_subset": list(graph.names_of_mask(s.right_mask)),
                "operator": s.operator,
                "build_side": s.side,
                "out_card": _num(s.out_card),
                "step_cost": _num(s.step_cost),
            }
            for s in plan.steps
        ],
        "filters": list(plan.filters),
    }
    if stats is not None:
        doc["stats"] = {
            "subplans": stats.subplans_reached,
            "join_costs": stats.join_costs_computed,
            "plans": stats.plans_enumerated,
            "elapsed_ms": round(stats.elapsed * 1000.0, 3) if timing else 0.0,
        }
    return doc


def plan_to_json(plan: Plan, graph: JoinGraph, stats: EnumStats | None = None,
                 timing: bool = False) -> str:
    return json.dumps(plan_document(plan, graph, stats, timing), indent=2) + "\n"
