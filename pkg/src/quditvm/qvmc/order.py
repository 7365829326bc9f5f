"""Contraction ordering for a circuit viewed as a network of operator tensors.

Tensors are given in a topological order together with the qudits they act
on; wires connect consecutive tensors on each qudit. Two tensors can be
combined when they are adjacent on every qudit they share and no third
tensor lies on a path between them, so every intermediate result is again
an operator on a set of qudits.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .tree import pair_cost

__all__ = ["Step", "Plan", "greedy_plan", "optimal_cost", "kron_matmul_cost"]


@dataclass(frozen=True)
class Step:
    kind: str  # "pair" | "kron" | "outer"
    # pair/outer: (earlier, later); kron: (first, second, gate) with first/second
    # ordered like the gate's qudits
    operands: tuple[int, ...]
    result: int
    before: bool = True  # kron: the single-qudit tensors precede the gate
    cost: int = 0


@dataclass
class Plan:
    steps: list[Step] = field(default_factory=list)
    root: int = -1

    @property
    def cost(self) -> int:
        return sum(s.cost for s in self.steps)


def kron_matmul_cost(dim: int) -> int:
    """Outer product filling a dim x dim matrix, then a dim x dim multiply."""
    return dim * dim + 2 * dim**3


@dataclass
class _Group:
    qudits: tuple[int, ...]
    prev: dict[int, int | None]
    next: dict[int, int | None]


class _Network:
    def __init__(self, tensors: Sequence[Sequence[int]], radix: Mapping[int, int]):
        self.radix = radix
        self.groups: dict[int, _Group] = {}
        last: dict[int, int] = {}
        for t, qs in enumerate(tensors):
            qs = tuple(qs)
            g = _Group(qs, {q: last.get(q) for q in qs}, {q: None for q in qs})
            for q in qs:
                if q in last:
                    self.groups[last[q]].next[q] = t
                last[q] = t
            self.groups[t] = g
        self.next_id = len(tensors)
        self._costs: dict[tuple, int] = {}

    def cost(self, later: tuple[int, ...], earlier: tuple[int, ...]) -> int:
        key = (later, earlier)
        c = self._costs.get(key)
        if c is None:
            c = self._costs[key] = pair_cost(later, earlier, self.radix)
        return c

    def merged_qudits(self, a: int, b: int) -> tuple[int, ...]:
        qa, qb = self.groups[a].qudits, self.groups[b].qudits
        if qa == qb:
            return qa
        return tuple(sorted(set(qa) | set(qb)))

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """(earlier, later) pairs adjacent on every shared qudit."""
        out = []
        for a, g in self.groups.items():
            seen = set()
            for q in g.qudits:
                b = g.next[q]
                if b is None or b in seen:
                    continue
                seen.add(b)
                gb = self.groups[b]
                if all(g.next[s] == b for s in g.qudits if s in gb.next):
                    out.append((a, b))
        return out

    def has_detour(self, a: int, b: int) -> bool:
        """Whether some path from ``a`` reaches ``b`` through another tensor."""
        stack = [n for n in set(self.groups[a].next.values()) if n is not None and n != b]
        seen = set(stack)
        while stack:
            x = stack.pop()
            for n in self.groups[x].next.values():
                if n == b:
                    return True
                if n is not None and n not in seen:
                    seen.add(n)
                    stack.append(n)
        return False

    def kron_candidates(self) -> list[tuple[int, int, int, bool]]:
        """(first, second, gate, before) triples: two single-qudit tensors
        directly on both wires of a two-qudit tensor, on the same side."""
        out = []
        for gid, g in self.groups.items():
            if len(g.qudits) != 2:
                continue
            qa, qb = g.qudits
            for before, links in ((True, g.prev), (False, g.next)):
                x, z = links[qa], links[qb]
                if x is None or z is None or x == z:
                    continue
                if len(self.groups[x].qudits) == 1 and len(self.groups[z].qudits) == 1:
                    out.append((x, z, gid, before))
        return out

    def merge(self, ids: Sequence[int], qudits: tuple[int, ...]) -> int:
        """Replace the groups ``ids`` (a convex set) by one group on ``qudits``."""
        members = set(ids)
        new = self.next_id
        self.next_id += 1
        prev: dict[int, int | None] = {}
        nxt: dict[int, int | None] = {}
        for q in qudits:
            on_q = [i for i in ids if q in self.groups[i].qudits]
            # members on one wire form a chain; find its ends
            first = next(i for i in on_q if self.groups[i].prev[q] not in members)
            last = next(i for i in on_q if self.groups[i].next[q] not in members)
            prev[q] = self.groups[first].prev[q]
            nxt[q] = self.groups[last].next[q]
        for q in qudits:
            if prev[q] is not None:
                self.groups[prev[q]].next[q] = new
            if nxt[q] is not None:
                self.groups[nxt[q]].prev[q] = new
        for i in ids:
            del self.groups[i]
        self.groups[new] = _Group(qudits, prev, nxt)
        return new


def greedy_plan(
    tensors: Sequence[Sequence[int]], radix: Mapping[int, int], kron_special: bool = True, lookahead: bool = True
) -> Plan:
    """Greedy contraction order with one step of lookahead.

    Each round scores every admissible move by its own cost plus the cheapest
    move available right after it, and performs the best one (ties go to the
    move on the lowest qudits). With ``kron_special``, two single-qudit tensors
    sitting on both wires of a two-qudit tensor may be combined as an outer
    product followed by a plain multiply.
    """
    net = _Network(tensors, radix)
    plan = Plan()
    if not tensors:
        return plan
    while len(net.groups) > 1:
        moves = []  # (cost, tiebreak, kind, payload)
        for a, b in net.adjacent_pairs():
            ga, gb = net.groups[a], net.groups[b]
            c = net.cost(gb.qudits, ga.qudits)
            tie = tuple(sorted(set(ga.qudits) | set(gb.qudits)))
            moves.append((c, tie, a, b, "pair", (a, b)))
        if kron_special:
            for x, z, g, before in net.kron_candidates():
                gq = net.groups[g].qudits
                c = kron_matmul_cost(radix[gq[0]] * radix[gq[1]])
                moves.append((c, tuple(sorted(gq)), x, z, "kron", (x, z, g, before)))
        if not moves:
            # only independent components are left: combine them as outer products
            ids = sorted(net.groups, key=lambda i: min(net.groups[i].qudits))
            a, b = ids[0], ids[1]
            qs = net.merged_qudits(a, b)
            c = net.cost(net.groups[b].qudits, net.groups[a].qudits)
            new = net.merge((a, b), qs)
            plan.steps.append(Step("outer", (a, b), new, cost=c))
            continue
        moves.sort(key=lambda m: (m[0], m[1], m[2], m[3]))
        scored = []
        for m in moves:
            score = m[0]
            if lookahead:
                score += _best_followup(net, m, moves)
            scored.append((score, m[0], m[1], m[2], m[3], m))
        scored.sort(key=lambda s: s[:5])
        chosen = None
        for s in scored:
            m = s[5]
            if m[4] == "pair" and net.has_detour(*m[5]):
                continue
            chosen = m
            break
        if chosen is None:  # every adjacent pair is blocked; cannot happen for a DAG
            raise RuntimeError("no admissible contraction")
        cost, kind, payload = chosen[0], chosen[4], chosen[5]
        if kind == "pair":
            a, b = payload
            new = net.merge((a, b), net.merged_qudits(a, b))
            plan.steps.append(Step("pair", (a, b), new, cost=cost))
        else:
            x, z, g, before = payload
            new = net.merge((x, z, g), net.groups[g].qudits)
            plan.steps.append(Step("kron", (x, z, g), new, before=before, cost=cost))
    plan.root = next(iter(net.groups))
    return plan


def _best_followup(net: _Network, move, moves) -> int:
    """Cheapest move available after ``move`` (approximate: the new tensor's
    neighbours plus every untouched existing move)."""
    kind, payload = move[4], move[5]
    touched = set(payload[:3]) if kind == "kron" else set(payload)
    best = None
    for m in moves:
        ids = set(m[5][:3]) if m[4] == "kron" else set(m[5])
        if not ids & touched:
            best = m[0]
            break  # moves are sorted by cost
    if kind == "pair":
        a, b = payload
        qs = net.merged_qudits(a, b)
        ga, gb = net.groups[a], net.groups[b]
        prev = {q: (ga.prev[q] if q in ga.prev else gb.prev[q]) for q in qs}
        nxt = {q: (gb.next[q] if q in gb.next else ga.next[q]) for q in qs}
    else:
        x, z, g, _ = payload
        qs = net.groups[g].qudits
        members = {x, z, g}
        prev, nxt = {}, {}
        for q in qs:
            chain = [i for i in members if q in net.groups[i].qudits]
            prev[q] = next(net.groups[i].prev[q] for i in chain if net.groups[i].prev[q] not in members)
            nxt[q] = next(net.groups[i].next[q] for i in chain if net.groups[i].next[q] not in members)
    for q in qs:
        for nb, later in ((prev[q], False), (nxt[q], True)):
            if nb is None:
                continue
            nq = net.groups[nb].qudits
            c = net.cost(nq, qs) if later else net.cost(qs, nq)
            if best is None or c < best:
                best = c
    return 0 if best is None else best


def optimal_cost(tensors: Sequence[Sequence[int]], radix: Mapping[int, int]) -> int:
    """Minimum total ``pair_cost`` over all pairwise contraction orders.

    Dynamic programming over convex subsets of tensors (exponential; meant for
    at most a dozen or so tensors).
    """
    n = len(tensors)
    if n > 16:
        raise ValueError("exhaustive search is limited to 16 tensors")
    if n <= 1:
        return 0
    tensors = [tuple(t) for t in tensors]
    succ = [0] * n
    last: dict[int, int] = {}
    for t, qs in enumerate(tensors):
        for q in qs:
            if q in last:
                succ[last[q]] |= 1 << t
            last[q] = t
    reach = [0] * n  # strict descendants
    for t in range(n - 1, -1, -1):
        r = succ[t]
        s = succ[t]
        while s:
            low = s & -s
            r |= reach[low.bit_length() - 1]
            s ^= low
        reach[t] = r

    full = (1 << n) - 1
    reach_of = [0] * (full + 1)
    for mask in range(1, full + 1):
        low = mask & -mask
        reach_of[mask] = reach_of[mask ^ low] | reach[low.bit_length() - 1]
    convex = [False] * (full + 1)
    for mask in range(1, full + 1):
        outside = reach_of[mask] & ~mask
        convex[mask] = (reach_of[outside] & mask) == 0 if outside else True

    def qudits_of(mask: int) -> tuple[int, ...]:
        if mask & (mask - 1) == 0:
            return tensors[mask.bit_length() - 1]
        qs = set()
        m = mask
        while m:
            low = m & -m
            qs.update(tensors[low.bit_length() - 1])
            m ^= low
        return tuple(sorted(qs))

    qcache = {}
    costs: dict[tuple, int] = {}

    def cost(later, earlier):
        key = (later, earlier)
        if key not in costs:
            costs[key] = pair_cost(later, earlier, radix)
        return costs[key]

    INF = float("inf")
    best = [INF] * (full + 1)
    for t in range(n):
        best[1 << t] = 0
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0 or not convex[mask]:
            continue
        low = mask & -mask
        rest = mask ^ low
        b = INF
        sub = rest
        while True:
            a_mask = sub | low  # the part containing the lowest tensor
            c_mask = mask ^ a_mask
            if c_mask and convex[a_mask] and convex[c_mask] and best[a_mask] < INF and best[c_mask] < INF:
                qa = qcache.get(a_mask) or qcache.setdefault(a_mask, qudits_of(a_mask))
                qc = qcache.get(c_mask) or qcache.setdefault(c_mask, qudits_of(c_mask))
                if reach_of[a_mask] & c_mask:
                    step = cost(qc, qa)
                elif reach_of[c_mask] & a_mask:
                    step = cost(qa, qc)
                else:
                    step = min(cost(qa, qc), cost(qc, qa))
                total = best[a_mask] + best[c_mask] + step
                if total < b:
                    b = total
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = b
    return int(best[full])
