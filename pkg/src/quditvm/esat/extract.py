"""Cost model and greedy simultaneous extraction."""

from __future__ import annotations

import heapq
import math
from typing import Mapping, Sequence

from ..symbolic.expr import Expr, tree_cost
from .egraph import EGraph

__all__ = ["CostTable", "DEFAULT_COSTS", "cost_of", "extract_simultaneous", "ExtractionError", "OP_ORDER"]

INF = math.inf

# per-node expression costs
DEFAULT_COSTS: Mapping[str, float] = {
    "pi": 0.0,
    "var": 0.0,
    "const": 0.5,
    "neg": 1.0,
    "add": 1.0,
    "sub": 1.0,
    "mul": 5.0,
    "div": 5.0,
    "sqrt": 50.0,
    "sin": 50.0,
    "cos": 50.0,
    "exp": 100.0,
    "ln": 100.0,
    "pow": 100.0,
}

CostTable = Mapping[str, float]

# tie-breaking order among equal-cost e-nodes
OP_ORDER = {op: i for i, op in enumerate(
    ("const", "pi", "var", "neg", "add", "sub", "mul", "div", "sqrt", "sin", "cos", "exp", "ln", "pow"))}


class ExtractionError(RuntimeError):
    pass


def cost_of(e: Expr, costs: CostTable = DEFAULT_COSTS) -> float:
    """Sum of per-node costs over the expression tree."""
    return tree_cost(e, costs)


def _node_cost(node, costs, cost) -> float:
    total = costs[node[0]]
    for c in node[2]:
        total += cost[c]
    return total


def _parent_map(eg: EGraph) -> dict[int, list[tuple[tuple, int]]]:
    parents: dict[int, list] = {cid: [] for cid in eg.classes}
    for cid, cls in eg.classes.items():
        for node in cls.nodes:
            for child in set(node[2]):
                parents[child].append((node, cid))
    return parents


def _compute_costs(eg: EGraph, costs: CostTable, parents: dict) -> dict[int, float]:
    """Least tree cost of every class (Knuth's generalization of Dijkstra)."""
    cost: dict[int, float] = {cid: INF for cid in eg.classes}
    waiting: dict[tuple, int] = {}
    heap: list[tuple[float, int]] = []
    done: set[int] = set()
    for cid, cls in eg.classes.items():
        for node in cls.nodes:
            if not node[2]:
                heapq.heappush(heap, (costs[node[0]], cid))
            else:
                waiting[(node, cid)] = len(set(node[2]))
    while heap:
        c, cid = heapq.heappop(heap)
        if cid in done:
            continue
        done.add(cid)
        cost[cid] = c
        for key in parents[cid]:
            left = waiting[key] - 1
            waiting[key] = left
            if left == 0 and key[1] not in done:
                heapq.heappush(heap, (_node_cost(key[0], costs, cost), key[1]))
    return cost


def _best(eg: EGraph, cid: int, costs: CostTable, cost: dict, busy: set):
    best_key, best_node = None, None
    for node in eg.classes[cid].nodes:
        if any(c in busy for c in node[2]):
            continue
        c = _node_cost(node, costs, cost)
        if c == INF:
            continue
        key = (c, OP_ORDER[node[0]], node[2], str(node[1]))
        if best_key is None or key < best_key:
            best_key, best_node = key, node
    return best_node


def _propagate_zero(parents: dict, zeroed: list[int], costs: CostTable, cost: dict) -> None:
    """Lower class costs after ``zeroed`` became free, walking parents."""
    work = list(zeroed)
    while work:
        cid = work.pop()
        for pnode, pcid in parents[cid]:
            c = _node_cost(pnode, costs, cost)
            if c < cost[pcid]:
                cost[pcid] = c
                work.append(pcid)


def extract_simultaneous(eg: EGraph, roots: Sequence[int], costs: CostTable = DEFAULT_COSTS) -> list[Expr]:
    """Extract one expression per root, sharing credit for already-extracted classes.

    Roots are processed in order. After each root, every class it traversed
    costs zero, and that saving propagates to parents before the next root,
    so later roots prefer subterms that are already computed.
    """
    if not eg.clean:
        eg.rebuild()
    parents = _parent_map(eg)
    cost = _compute_costs(eg, costs, parents)
    built: dict[int, Expr] = {}
    out: list[Expr] = []
    for root in roots:
        root = eg.find(root)
        if cost[root] == INF:
            raise ExtractionError(f"class {root} has no finite-cost representative")
        traversed: list[int] = []
        busy: set[int] = set()
        # iterative post-order construction
        stack: list[tuple[int, object]] = [(root, None)]
        while stack:
            cid, node = stack.pop()
            if node is None:
                if cid in built:
                    continue
                node = _best(eg, cid, costs, cost, busy)
                if node is None:
                    raise ExtractionError(f"class {cid} has no acyclic finite-cost representative")
                busy.add(cid)
                stack.append((cid, node))
                for child in reversed(node[2]):
                    if child not in built:
                        stack.append((child, None))
                continue
            if cid in built:
                continue
            op, payload, kids = node
            if op == "var":
                e = Expr("var", (), payload)
            elif op == "const":
                e = Expr("const", (), payload)
            else:
                e = Expr(op, tuple(built[k] for k in kids))
            built[cid] = e
            busy.discard(cid)
            traversed.append(cid)
        out.append(built[root])
        zero = [c for c in traversed if cost[c] != 0.0]
        for c in zero:
            cost[c] = 0.0
        _propagate_zero(parents, zero, costs, cost)
    return out
