"""Minimal and maximal expected time to reach a goal set.

The analysis reduces to a non-negative stochastic shortest path problem:
a Markovian state pays its expected sojourn time 1/E(s) per visit and
moves along the embedded jump distribution, a probabilistic state pays
nothing and chooses among its actions, and goal states (made absorbing
first) terminate at cost zero.  States that cannot almost surely reach
the goal under the relevant quantifier have infinite expected time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from . import graph
from .mdpsolve import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    SolveResult,
    SspAction,
    SspInstance,
    solve_ssp,
)
from .model import BOT, ValidatedMA, make_absorbing


@dataclass(frozen=True)
class ExpectedTimeQuery:
    goal: frozenset[int]
    mode: str = "min"
    tol: float = DEFAULT_TOL


def build_ssp_et(vma: ValidatedMA, goal: Iterable[int]) -> SspInstance:
    """Shortest-path instance whose minimal cost is the expected time.

    Expects the goal states to be absorbing already.  Markovian non-goal
    states get the single pseudo-action with cost 1/E(s) and the branching
    kernel; probabilistic states keep their actions at cost zero; terminal
    costs vanish.
    """
    goal = frozenset(goal)
    actions: list[tuple[SspAction, ...]] = []
    for s in range(vma.n):
        if s in goal:
            actions.append(())
        elif s in vma.ms:
            actions.append(
                (SspAction(BOT, 1.0 / vma.exit_rate[s], vma.branch[s]),)
            )
        else:
            actions.append(
                tuple(
                    SspAction(label, 0.0, dist)
                    for label, dist in vma.ma.prob_transitions[s]
                )
            )
    return SspInstance(
        names=vma.states,
        actions=tuple(actions),
        goal=goal,
        terminal=tuple((g, 0.0) for g in sorted(goal)),
        initial=vma.initial,
    )


def _collapse_zero_time_components(
    absorbed: ValidatedMA, ssp: SspInstance, infinite: frozenset[int]
) -> tuple[SspInstance, dict[int, int], dict[tuple[int, str], tuple[int, str]], list]:
    """Merge each probabilistic-only end component into its representative.

    Such components cost nothing per step, so minimizing value iteration
    from zero would stall on them; every member shares one value (members
    reach each other in zero time), and only the actions leaving the
    component matter.  Components already marked infinite are left alone
    (their members cannot escape).  Returns the reduced instance, the
    state map, the qualified-action origins, and the collapsed components.
    """
    components = [
        (comp, kept)
        for comp, kept in graph._refine_end_components(absorbed, absorbed.ps)
        if comp[0] not in infinite
    ]
    rep: dict[int, int] = {}
    kept_of: dict[int, frozenset[str]] = {}
    for comp, kept in components:
        head = min(comp)
        for s in comp:
            rep[s] = head
            kept_of[s] = frozenset(kept[s])

    keep_states = [s for s in range(absorbed.n) if rep.get(s, s) == s]
    new_index = {s: i for i, s in enumerate(keep_states)}

    def retarget(dist):
        mass: dict[int, float] = {}
        for t, p in dist:
            target = new_index[rep.get(t, t)]
            mass[target] = mass.get(target, 0.0) + p
        return tuple(sorted(mass.items()))

    merged: dict[int, list[SspAction]] = {min(comp): [] for comp, _ in components}
    origin: dict[tuple[int, str], tuple[int, str]] = {}
    for comp, kept in components:
        head = min(comp)
        for member in comp:
            for act in ssp.actions[member]:
                if act.label in kept[member]:
                    continue  # stays inside: never needed after collapse
                label = f"{absorbed.name(member)}.{act.label}"
                origin[(head, label)] = (member, act.label)
                merged[head].append(SspAction(label, act.cost, retarget(act.dist)))

    actions = []
    for s in keep_states:
        if s in merged:
            actions.append(tuple(merged[s]))
        else:
            actions.append(
                tuple(
                    SspAction(a.label, a.cost, retarget(a.dist))
                    for a in ssp.actions[s]
                )
            )
    reduced = SspInstance(
        names=tuple(absorbed.name(s) for s in keep_states),
        actions=tuple(actions),
        goal=frozenset(new_index[g] for g in ssp.goal),
        terminal=tuple((new_index[g], value) for g, value in ssp.terminal),
        initial=new_index[rep.get(absorbed.initial, absorbed.initial)],
    )
    state_map = {s: new_index[rep.get(s, s)] for s in range(absorbed.n)}
    return reduced, state_map, origin, components


def _zero_time_reach_policy(
    absorbed: ValidatedMA, comp: list[int], kept, target: int
) -> dict[int, str]:
    """Kept-action choices steering a component to one of its members."""
    dist = {target: 0}
    frontier = [target]
    while frontier:
        nxt = []
        for t in frontier:
            for s in comp:
                if s in dist:
                    continue
                for label, d in absorbed.ma.prob_transitions[s]:
                    if label in kept[s] and any(u == t for u, _ in d):
                        dist[s] = dist[t] + 1
                        nxt.append(s)
                        break
        frontier = sorted(set(nxt))
    policy = {}
    for s in comp:
        if s == target:
            continue
        best = None
        for label, d in sorted(absorbed.ma.prob_transitions[s], key=lambda a: a[0]):
            if label not in kept[s]:
                continue
            reachable = [dist[u] for u, _ in d if u in dist]
            if not reachable:
                continue
            cand = (min(reachable), label)
            if best is None or cand < best:
                best = cand
        if best is not None:
            policy[s] = best[1]
    return policy


def expected_time(
    vma: ValidatedMA,
    goal: Iterable[int],
    mode: str = "min",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SolveResult:
    """Optimal expected time to the goal set, with a witness policy.

    mode="min" infimum over policies, mode="max" supremum.  Entries are
    `inf` for states that fail the qualitative pre-pass: for the minimum no
    policy reaches the goal almost surely, for the maximum some policy
    avoids it with positive probability.  The returned policy covers the
    probabilistic states.
    """
    goal = frozenset(goal)
    graph.require_non_zeno(vma)
    absorbed = make_absorbing(vma, goal)
    ssp = build_ssp_et(absorbed, goal)
    quantifier = "max" if mode == "min" else "min"
    finite = graph.almost_sure_reach(absorbed, goal, quantifier)
    infinite = frozenset(range(vma.n)) - finite

    if mode == "max":
        result = solve_ssp(ssp, mode, tol=tol, max_iters=max_iters, infinite=infinite)
        result.policy = {
            s: label for s, label in result.policy.items() if s in absorbed.ps
        }
        return result

    # Minimization must not stall on zero-cost cycles: collapse the
    # probabilistic-only end components (unreachable in non-Zeno models,
    # but their states still carry well-defined values).
    reduced, state_map, origin, components = _collapse_zero_time_components(
        absorbed, ssp, infinite
    )
    res = solve_ssp(
        reduced,
        mode,
        tol=tol,
        max_iters=max_iters,
        infinite=frozenset(state_map[s] for s in infinite),
    )
    values = [res.values[state_map[s]] for s in range(vma.n)]
    policy: dict[int, str] = {}
    for s in absorbed.ps:
        if math.isinf(values[s]):
            continue
        chosen = res.policy.get(state_map[s])
        if chosen is not None:
            policy[s] = chosen
    # Re-map qualified labels at collapsed components: the member owning
    # the chosen escape plays it, the rest steer to that member.
    for comp, kept in components:
        head = min(comp)
        chosen = res.policy.get(state_map[head])
        for s in comp:
            policy.pop(s, None)
        if chosen is None or math.isinf(values[head]):
            continue
        member, label = origin[(head, chosen)]
        policy.update(_zero_time_reach_policy(absorbed, comp, kept, member))
        policy[member] = label
    return SolveResult(
        values=values, policy=policy, iterations=res.iterations, residual=res.residual
    )


def run_query(vma: ValidatedMA, query: ExpectedTimeQuery) -> SolveResult:
    return expected_time(vma, query.goal, query.mode, query.tol)


def bellman_residual(
    vma: ValidatedMA, goal: Iterable[int], values: list[float], mode: str
) -> float:
    """Sup-norm distance of `values` from one Bellman application.

    Useful to certify a solution independently of the iteration that
    produced it; infinite entries must be reproduced exactly.
    """
    goal = frozenset(goal)
    worst = 0.0
    for s in range(vma.n):
        if s in goal:
            expect = 0.0
        else:
            candidates = []
            for _, dist in vma.enabled(s):
                total = 0.0
                for t, p in dist:
                    if math.isinf(values[t]):
                        total = math.inf
                        break
                    total += p * values[t]
                cost = 1.0 / vma.exit_rate[s] if s in vma.ms else 0.0
                candidates.append(cost + total)
            expect = min(candidates) if mode == "min" else max(candidates)
        if math.isinf(expect) and math.isinf(values[s]):
            continue
        if math.isinf(expect) != math.isinf(values[s]):
            return math.inf
        worst = max(worst, abs(expect - values[s]))
    return worst
