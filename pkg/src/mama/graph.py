"""Qualitative graph analyses on validated Markov automata.

Everything here ignores numeric values and only looks at the support of
the transition structure: strongly connected components, detection of
Zeno behaviour (reachable cycles of instantaneous transitions), maximal
end components, and almost-sure reachability in the induced decision
process.  All outputs are deterministically ordered.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ZenoModelError
from .model import ValidatedMA


@dataclass(frozen=True)
class ZenoWitness:
    """A reachable set of probabilistic states closed under a zero-time cycle."""

    states: frozenset[int]


@dataclass(frozen=True, eq=True)
class Mec:
    """A maximal end component.

    `states` is the component's state set and `actions` maps every member
    to the nonempty set of action labels kept inside the component
    (Markovian states keep the pseudo-action `BOT`).  The kept sub-model is
    strongly connected and closed: kept probabilistic actions and all
    Markovian moves stay inside `states`.
    """

    states: frozenset[int]
    actions: tuple[tuple[int, frozenset[str]], ...]

    def action_map(self) -> dict[int, frozenset[str]]:
        return dict(self.actions)

    @property
    def min_state(self) -> int:
        return min(self.states)


def _union_successors(vma: ValidatedMA, s: int) -> list[int]:
    succ = [t for _, dist in vma.enabled(s) for t, _ in dist]
    seen: set[int] = set()
    out = []
    for t in succ:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _tarjan(nodes: Iterable[int], succ) -> list[list[int]]:
    """Iterative Tarjan; components in a deterministic order."""
    index: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    comps: list[list[int]] = []

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=min)
    return comps


def sccs(vma: ValidatedMA) -> list[frozenset[int]]:
    """Strongly connected components of the union graph.

    The union graph has an edge for every Markovian move and for every
    probabilistic successor with positive probability.  Components are
    returned sorted by their smallest member index.
    """
    comps = _tarjan(range(vma.n), lambda s: _union_successors(vma, s))
    return [frozenset(c) for c in comps]


def _reachable_from_initial(vma: ValidatedMA) -> set[int]:
    seen = {vma.initial}
    stack = [vma.initial]
    while stack:
        s = stack.pop()
        for t in _union_successors(vma, s):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def check_non_zeno(vma: ValidatedMA) -> ZenoWitness | None:
    """Search for a reachable cycle of probabilistic transitions.

    Returns the first such component (by smallest state index) or None if
    the model is non-Zeno.  A singleton probabilistic state only counts
    when some action loops back to it.
    """
    reachable = _reachable_from_initial(vma)
    nodes = sorted(s for s in reachable if s in vma.ps)

    def psucc(s: int) -> list[int]:
        return [
            t
            for _, dist in vma.ma.prob_transitions[s]
            for t, _ in dist
            if t in vma.ps and t in reachable
        ]

    for comp in _tarjan(nodes, psucc):
        if len(comp) > 1:
            return ZenoWitness(frozenset(comp))
        s = comp[0]
        if any(t == s for t in psucc(s)):
            return ZenoWitness(frozenset(comp))
    return None


def require_non_zeno(vma: ValidatedMA) -> None:
    witness = check_non_zeno(vma)
    if witness is not None:
        raise ZenoModelError({vma.name(s) for s in witness.states})


def _refine_end_components(
    vma: ValidatedMA, initial_states: Iterable[int]
) -> list[tuple[list[int], dict[int, set[str]]]]:
    """Iterative refinement to the end components inside `initial_states`.

    Repeatedly splits the kept sub-model into SCCs, drops actions whose
    support leaves their component (for Markovian states this deletes the
    state itself), and re-splits until stable.  Returns the surviving
    components with their kept action sets.
    """
    alive: set[int] = set(initial_states)
    kept: dict[int, set[str]] = {
        s: {label for label, _ in vma.enabled(s)} for s in alive
    }

    while True:
        def succ(s: int) -> list[int]:
            out = []
            for label, dist in vma.enabled(s):
                if label in kept[s]:
                    out.extend(t for t, _ in dist if t in alive)
            return sorted(set(out))

        comps = _tarjan(sorted(alive), succ)
        comp_of = {}
        for i, comp in enumerate(comps):
            for s in comp:
                comp_of[s] = i
        changed = False
        for s in sorted(alive):
            for label, dist in vma.enabled(s):
                if label not in kept[s]:
                    continue
                targets = [t for t, _ in dist]
                if any(
                    t not in alive or comp_of[t] != comp_of[s] for t in targets
                ):
                    kept[s].discard(label)
                    changed = True
        dead = {s for s in alive if not kept[s]}
        if dead:
            alive -= dead
            changed = True
        if not changed:
            break

    # At the fixpoint every kept action stays inside its own component, so
    # the components of the kept graph are exactly the end components
    # (surviving singletons necessarily self-loop).
    result = []
    for comp in _tarjan(sorted(alive), lambda s: sorted(
        {t for label, dist in vma.enabled(s) if label in kept[s] for t, _ in dist}
    )):
        result.append((comp, {s: set(kept[s]) for s in comp}))
    return result


def mecs(vma: ValidatedMA) -> list[Mec]:
    """The maximal-end-component decomposition.

    Components are pairwise disjoint, each strongly connected and closed
    under its kept actions, and no state outside the returned components
    belongs to any end component.  Output is sorted by smallest member.
    """
    out = []
    for comp, kept in _refine_end_components(vma, range(vma.n)):
        actions = tuple(
            (s, frozenset(kept[s])) for s in sorted(comp)
        )
        out.append(Mec(frozenset(comp), actions))
    out.sort(key=lambda m: m.min_state)
    return out


def almost_sure_reach(
    vma: ValidatedMA, goal: Iterable[int], mode: str
) -> frozenset[int]:
    """States reaching the goal set with probability one.

    mode="max": some policy reaches the goal almost surely (greatest
    fixpoint of the controlled predecessor operator).  mode="min": every
    policy does; equivalently no action path inside the goal's complement
    reaches an end component that avoids the goal.
    """
    goal = frozenset(goal)
    if mode == "max":
        candidate = set(range(vma.n))
        while True:
            reach = set(goal)
            frontier = True
            while frontier:
                frontier = False
                for s in range(vma.n):
                    if s in reach or s not in candidate:
                        continue
                    for _, dist in vma.enabled(s):
                        targets = [t for t, _ in dist]
                        if all(t in candidate for t in targets) and any(
                            t in reach for t in targets
                        ):
                            reach.add(s)
                            frontier = True
                            break
            if reach == candidate:
                return frozenset(candidate)
            candidate = reach
    if mode == "min":
        complement = set(range(vma.n)) - goal
        avoid_core: set[int] = set()
        for comp, _ in _refine_end_components(vma, complement):
            avoid_core.update(comp)
        bad = set(avoid_core)
        frontier = True
        while frontier:
            frontier = False
            for s in sorted(complement - bad):
                for _, dist in vma.enabled(s):
                    if any(t in bad for t, _ in dist):
                        bad.add(s)
                        frontier = True
                        break
        return frozenset(range(vma.n)) - frozenset(bad)
    raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
