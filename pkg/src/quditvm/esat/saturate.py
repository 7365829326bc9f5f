"""Equality saturation driver with an egg-style backoff scheduler."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .egraph import EGraph
from .rules import Rewrite

__all__ = ["SaturationLimits", "SaturationReport", "saturate", "DEFAULT_LIMITS"]


@dataclass(frozen=True)
class SaturationLimits:
    max_iterations: int = 30
    max_nodes: int = 50_000
    time_limit: float = 10.0
    # backoff scheduler: a rule producing more than match_limit << bans matches
    # is banned for ban_length << bans iterations
    match_limit: int = 1000
    ban_length: int = 5

    def __post_init__(self):
        if self.max_iterations <= 0 or self.max_nodes <= 0 or self.time_limit <= 0:
            raise ValueError("saturation limits must be positive")


DEFAULT_LIMITS = SaturationLimits()


@dataclass
class SaturationReport:
    stop_reason: str  # saturated | iteration_limit | node_limit | time_limit | goal
    iterations: int
    nodes: int
    classes: int
    elapsed: float
    applied: dict[str, int] = field(default_factory=dict)


@dataclass
class _RuleStats:
    times_banned: int = 0
    banned_until: int = 0


def _index_by_op(eg: EGraph) -> dict[str, list[int]]:
    idx: dict[str, list[int]] = defaultdict(list)
    for cid, cls in eg.classes.items():
        seen = set()
        for node in cls.nodes:
            op = node[0]
            if op not in seen:
                seen.add(op)
                idx[op].append(cid)
    return idx


def saturate(
    eg: EGraph,
    rules: Sequence[Rewrite],
    limits: SaturationLimits = DEFAULT_LIMITS,
    goal: Callable[[EGraph], bool] | None = None,
) -> SaturationReport:
    """Apply ``rules`` until fixpoint, a limit, or ``goal(eg)`` becomes true."""
    start = time.perf_counter()
    deadline = start + limits.time_limit
    eg.rebuild()
    stats = {r.name: _RuleStats() for r in rules}
    applied: dict[str, int] = defaultdict(int)

    def report(reason: str, it: int) -> SaturationReport:
        return SaturationReport(reason, it, eg.num_nodes, eg.num_classes, time.perf_counter() - start, dict(applied))

    if goal is not None and goal(eg):
        return report("goal", 0)
    for it in range(limits.max_iterations):
        index = _index_by_op(eg)
        matches: list[tuple[Rewrite, list]] = []
        any_banned = False
        timed_out = False
        for rule in rules:
            st = stats[rule.name]
            if it < st.banned_until:
                any_banned = True
                continue
            found = rule.search(eg, index.get(rule.lhs[1], ()), deadline)
            threshold = limits.match_limit << st.times_banned
            if len(found) > threshold:
                st.banned_until = it + (limits.ban_length << st.times_banned)
                st.times_banned += 1
                any_banned = True
                continue
            matches.append((rule, found))
            if time.perf_counter() > deadline:
                timed_out = True
                break
        changed = False
        for rule, found in matches:
            for cid, subst in found:
                if rule.apply(eg, cid, subst):
                    applied[rule.name] += 1
                    changed = True
            if eg.num_nodes > limits.max_nodes or time.perf_counter() > deadline:
                break
        eg.rebuild()
        if goal is not None and goal(eg):
            return report("goal", it + 1)
        if eg.num_nodes > limits.max_nodes:
            return report("node_limit", it + 1)
        if timed_out or time.perf_counter() > deadline:
            return report("time_limit", it + 1)
        if not changed:
            if not any_banned:
                return report("saturated", it + 1)
            # nothing happened with the active rules: lift the bans and retry
            for st in stats.values():
                st.banned_until = 0
    return report("iteration_limit", limits.max_iterations)
