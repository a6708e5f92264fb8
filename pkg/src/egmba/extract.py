"""Minimum tree-size extraction from an e-class."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .egraph import CONST, VAR, EClassId, EGraph, ENode
from .expr import Binary, Const, Expr, Op, Var, walk, op_of


class CyclicOnly(RuntimeError):
    """A reachable class has no finite term."""


class DepthExhausted(RuntimeError):
    pass


def _unit(op: Op) -> int:
    return 1


@dataclass(frozen=True)
class CostModel:
    node_cost: Callable[[Op], int] = field(default=_unit)

    def cost_of(self, e: Expr) -> int:
        """Summed node cost of a concrete term."""
        return sum(self.node_cost(op_of(n)) for n in walk(e))


AST_SIZE = CostModel()


@dataclass(frozen=True)
class ExtractionResult:
    expr: Expr
    cost: int


def _tie_key(node: ENode) -> tuple:
    # operator tag first, then child class ids (leaves compare by payload)
    if len(node) == 3:
        return (node[0], node[1], node[2])
    return (node[0], str(node[1]))


def best_nodes(g: EGraph, cm: CostModel = AST_SIZE) -> dict[EClassId, tuple[int, ENode]]:
    """Relax every class to its cheapest e-node until nothing improves."""
    costs: dict[EClassId, tuple[int, ENode]] = {}
    op_cost = {op: cm.node_cost(op) for op in Op}
    for c in op_cost.values():
        if c < 1:
            raise ValueError("node costs must be >= 1")
    order = sorted(g.classes)
    changed = True
    while changed:
        changed = False
        for cid in order:
            best = costs.get(cid)
            for node in g.classes[cid].nodes:
                if len(node) == 3:
                    left = costs.get(g.find(node[1]))
                    right = costs.get(g.find(node[2]))
                    if left is None or right is None:
                        continue
                    cost = op_cost[Op(node[0])] + left[0] + right[0]
                else:
                    cost = op_cost[Op(node[0])]
                if best is None or (cost, _tie_key(node)) < (best[0], _tie_key(best[1])):
                    best = (cost, node)
            if best is not None and costs.get(cid) != best:
                costs[cid] = best
                changed = True
    return costs


def _build(g: EGraph, costs, cid: EClassId, cm: CostModel) -> Expr:
    entry = costs.get(g.find(cid))
    if entry is None:
        raise CyclicOnly(f"class {cid} has no finite-cost term")
    node = entry[1]
    if node[0] == CONST:
        return Const(node[1])
    if node[0] == VAR:
        return Var(node[1])
    return Binary(Op(node[0]), _build(g, costs, node[1], cm), _build(g, costs, node[2], cm))


def extract_best(g: EGraph, root: EClassId, cm: CostModel = AST_SIZE) -> ExtractionResult:
    if not g.clean:
        raise RuntimeError("extraction requires a rebuilt e-graph")
    costs = best_nodes(g, cm)
    expr = _build(g, costs, root, cm)
    return ExtractionResult(expr, costs[g.find(root)][0])


def brute_force_best(g: EGraph, root: EClassId, cm: CostModel = AST_SIZE, depth_limit: int = 8) -> ExtractionResult:
    """Cheapest term of depth at most ``depth_limit``, found by building the
    cheapest concrete term per class one depth layer at a time and costing
    each candidate term directly. Test oracle for :func:`extract_best`; a
    depth limit of the class count is always enough."""
    if not g.clean:
        raise RuntimeError("extraction requires a rebuilt e-graph")
    layer: dict[EClassId, tuple[int, Expr]] = {}
    for _ in range(depth_limit):
        nxt: dict[EClassId, tuple[int, Expr]] = dict(layer)
        for cid, cls in g.classes.items():
            for node in cls.nodes:
                if node[0] == CONST:
                    term = Const(node[1])
                elif node[0] == VAR:
                    term = Var(node[1])
                else:
                    left = layer.get(g.find(node[1]))
                    right = layer.get(g.find(node[2]))
                    if left is None or right is None:
                        continue
                    term = Binary(Op(node[0]), left[1], right[1])
                cost = cm.cost_of(term)
                if cid not in nxt or cost < nxt[cid][0]:
                    nxt[cid] = (cost, term)
        if nxt == layer:
            break  # deeper layers cannot change either
        layer = nxt
    hit = layer.get(g.find(root))
    if hit is None:
        raise DepthExhausted(f"no term of depth <= {depth_limit} in class {root}")
    return ExtractionResult(hit[1], hit[0])
