"""Long-run average fraction of time spent in a goal set.

The computation follows a three-step decomposition: find the maximal end
components, compute the optimal long-run ratio inside each component, and
combine the per-component optima through a stochastic-shortest-path
quotient in which every component collapses to a gate state (carrying the
transitions that leave it) and an absorbing sink whose terminal cost is
the component's value.

Inside a component the value is a ratio of two accumulated costs on the
embedded jump chain: time spent in goal states over total time, both per
step.  The optimal ratio is found by bisection on the crossing point of
the optimal average of (time-in-goal - k * total-time), each average
evaluated by relative value iteration with a damping transform that
guarantees convergence on periodic chains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import graph
from .errors import EmptyMec, NotConverged
from .graph import Mec
from .mdpsolve import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    SspAction,
    SspInstance,
    solve_ssp,
)
from .model import BOT, ValidatedMA

_DAMPING = 0.5


@dataclass(frozen=True)
class TwoCostAction:
    label: str
    c1: float
    c2: float
    dist: tuple[tuple[int, float], ...]  # local state indices


@dataclass(frozen=True)
class TwoCostMdp:
    """Jump-chain MDP with two step costs on a component's states.

    `c1` charges the expected sojourn time 1/E(s) of Markovian goal
    states, `c2` that of every Markovian state; probabilistic moves are
    instantaneous and cost nothing under both.  `origin[i]` is the state
    index of local state `i` in the full model.
    """

    names: tuple[str, ...]
    origin: tuple[int, ...]
    actions: tuple[tuple[TwoCostAction, ...], ...]

    @property
    def n(self) -> int:
        return len(self.names)


@dataclass
class LraPolicy:
    """Witness policy: a commit/exit decision per component plus the
    stationary choices that realize it."""

    decisions: dict[int, str | tuple[int, str]]
    in_mec: dict[int, str]
    transient: dict[int, str]

    def flat(self) -> dict[int, str]:
        merged = dict(self.transient)
        merged.update(self.in_mec)
        return merged


@dataclass
class LraResult:
    mode: str
    per_mec: list[float]
    values: list[float]
    policy: LraPolicy
    mecs: list[Mec]
    iterations: int


def two_cost_mdp(vma: ValidatedMA, mec: Mec, goal: Iterable[int]) -> TwoCostMdp:
    """Restrict the model to a component and attach the two step costs."""
    if not mec.states:
        raise EmptyMec()
    goal = frozenset(goal)
    origin = tuple(sorted(mec.states))
    local = {s: i for i, s in enumerate(origin)}
    kept = mec.action_map()
    actions: list[tuple[TwoCostAction, ...]] = []
    for s in origin:
        rows = []
        for label, dist in vma.enabled(s):
            if label not in kept[s]:
                continue
            sojourn = 1.0 / vma.exit_rate[s] if s in vma.ms else 0.0
            rows.append(
                TwoCostAction(
                    label=label,
                    c1=sojourn if (s in vma.ms and s in goal) else 0.0,
                    c2=sojourn,
                    dist=tuple((local[t], p) for t, p in dist),
                )
            )
        actions.append(tuple(sorted(rows, key=lambda r: r.label)))
    return TwoCostMdp(
        names=tuple(vma.name(s) for s in origin),
        origin=origin,
        actions=tuple(actions),
    )


class _RatioSweep:
    """Flattened arrays for relative value iteration on a TwoCostMdp."""

    def __init__(self, tc: TwoCostMdp, mode: str):
        self.mode = mode
        self.n = tc.n
        rows: list[tuple[int, TwoCostAction]] = []
        group_starts = [0]
        succ_starts = [0]
        idx: list[int] = []
        ps: list[float] = []
        c1: list[float] = []
        c2: list[float] = []
        row_state: list[int] = []
        for s in range(tc.n):
            for act in tc.actions[s]:
                rows.append((s, act))
                row_state.append(s)
                c1.append(act.c1)
                c2.append(act.c2)
                for t, p in act.dist:
                    if p > 0.0:
                        idx.append(t)
                        ps.append(p)
                succ_starts.append(len(idx))
            group_starts.append(len(rows))
        self.rows = rows
        self.row_state = np.array(row_state, dtype=np.int64)
        self.c1 = np.array(c1, dtype=np.float64)
        self.c2 = np.array(c2, dtype=np.float64)
        self.succ_idx = np.array(idx, dtype=np.int64)
        self.succ_p = np.array(ps, dtype=np.float64)
        self.succ_starts = np.array(succ_starts[:-1], dtype=np.int64)
        self.group_starts = np.array(group_starts[:-1], dtype=np.int64)

    def row_values(self, k: float, v: np.ndarray) -> np.ndarray:
        # Damped Bellman application: the self-weight keeps the iteration
        # aperiodic without changing the stationary averages.
        cost = self.c1 - k * self.c2
        expect = np.add.reduceat(self.succ_p * v[self.succ_idx], self.succ_starts)
        return cost + _DAMPING * v[self.row_state] + (1.0 - _DAMPING) * expect

    def gain_bounds(
        self, k: float, span_tol: float, max_iters: int
    ) -> tuple[float, float, int]:
        """Lower/upper bounds on the optimal average of (c1 - k*c2)."""
        v = np.zeros(self.n, dtype=np.float64)
        reduceat = np.minimum.reduceat if self.mode == "min" else np.maximum.reduceat
        for it in range(1, max_iters + 1):
            new = reduceat(self.row_values(k, v), self.group_starts)
            diff = new - v
            lo, hi = float(diff.min()), float(diff.max())
            v = new - new[0]
            if hi - lo <= span_tol:
                return lo, hi, it
        raise NotConverged(max_iters, hi - lo)

    def policy(self, k: float, span_tol: float, max_iters: int) -> dict[int, str]:
        """Argopt choices at the crossing ratio, smallest label on ties."""
        v = np.zeros(self.n, dtype=np.float64)
        reduceat = np.minimum.reduceat if self.mode == "min" else np.maximum.reduceat
        for _ in range(max_iters):
            new = reduceat(self.row_values(k, v), self.group_starts)
            diff = new - v
            v = new - new[0]
            if float(diff.max()) - float(diff.min()) <= span_tol:
                break
        row_q = self.row_values(k, v)
        bounds = list(self.group_starts) + [len(self.rows)]
        out: dict[int, str] = {}
        for s in range(self.n):
            lo, hi = bounds[s], bounds[s + 1]
            qs = row_q[lo:hi]
            opt = qs.min() if self.mode == "min" else qs.max()
            for j in range(lo, hi):
                if row_q[j] == opt:
                    out[s] = self.rows[j][1].label
                    break
        return out


def _default_policy(vma: ValidatedMA, mec: Mec) -> dict[int, str]:
    kept = mec.action_map()
    return {
        s: min(kept[s]) for s in sorted(mec.states) if s in vma.ps
    }


def lra_unichain(
    vma: ValidatedMA,
    mec: Mec,
    goal: Iterable[int],
    mode: str = "min",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> tuple[float, dict[int, str], int]:
    """Optimal long-run goal fraction inside one end component.

    Bisects on the candidate ratio k in [0,1]: the optimal per-step
    average of (c1 - k*c2) is nonincreasing in k and crosses zero exactly
    at the optimal ratio.  Returns the ratio, a witness policy on the
    component's probabilistic states, and the number of inner sweeps.
    """
    if not mec.states:
        raise EmptyMec()
    goal = frozenset(goal) & mec.states & vma.ms
    ms_inside = mec.states & vma.ms
    if not goal:
        return 0.0, _default_policy(vma, mec), 0
    if ms_inside <= goal:
        return 1.0, _default_policy(vma, mec), 0

    tc = two_cost_mdp(vma, mec, goal)
    sweep = _RatioSweep(tc, mode)
    span_tol = tol * 1.0  # ratios live in [0,1]
    iterations = 0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gmin, gmax, used = sweep.gain_bounds(mid, span_tol, max_iters)
        iterations += used
        if 0.5 * (gmin + gmax) > 0.0:
            lo = mid
        else:
            hi = mid
    k_star = 0.5 * (lo + hi)

    local_policy = sweep.policy(k_star, span_tol, max_iters)
    policy = {
        tc.origin[i]: label
        for i, label in local_policy.items()
        if tc.origin[i] in vma.ps
    }
    return k_star, policy, iterations


@dataclass
class _Quotient:
    ssp: SspInstance
    state_map: dict[int, int]  # original state -> quotient state
    u_state: list[int]  # per component: gate index in the quotient
    q_state: list[int]  # per component: sink index in the quotient
    gate_actions: dict[tuple[int, str], tuple[int, str]] = field(default_factory=dict)


def _quotient(
    vma: ValidatedMA, mec_list: Sequence[Mec], per_mec: Sequence[float]
) -> _Quotient:
    mec_of: dict[int, int] = {}
    for j, mec in enumerate(mec_list):
        for s in mec.states:
            mec_of[s] = j

    outside = [s for s in range(vma.n) if s not in mec_of]
    names: list[str] = [vma.name(s) for s in outside]
    qmap: dict[int, int] = {s: i for i, s in enumerate(outside)}
    u_state, q_state = [], []
    for j in range(len(mec_list)):
        u_state.append(len(names))
        names.append(f"@u{j + 1}")
    for j in range(len(mec_list)):
        q_state.append(len(names))
        names.append(f"@q{j + 1}")
    for j, mec in enumerate(mec_list):
        for s in mec.states:
            qmap[s] = u_state[j]

    def retarget(dist: Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
        mass: dict[int, float] = {}
        for t, p in dist:
            qt = qmap[t]
            mass[qt] = mass.get(qt, 0.0) + p
        return tuple(sorted(mass.items()))

    n_q = len(names)
    actions: list[tuple[SspAction, ...]] = [() for _ in range(n_q)]
    for s in outside:
        actions[qmap[s]] = tuple(
            SspAction(label, 0.0, retarget(dist)) for label, dist in vma.enabled(s)
        )

    gate_actions: dict[tuple[int, str], tuple[int, str]] = {}
    for j, mec in enumerate(mec_list):
        kept = mec.action_map()
        rows = [SspAction(BOT, 0.0, ((q_state[j], 1.0),))]
        for s in sorted(mec.states):
            if s not in vma.ps:
                continue  # Markovian members never leave the component
            for label, dist in vma.ma.prob_transitions[s]:
                if label in kept[s]:
                    continue
                gate_label = f"{vma.name(s)}.{label}"
                while (j, gate_label) in gate_actions:
                    gate_label += "'"
                gate_actions[(j, gate_label)] = (s, label)
                rows.append(SspAction(gate_label, 0.0, retarget(dist)))
        actions[u_state[j]] = tuple(rows)

    goal = frozenset(q_state)
    terminal = tuple((q_state[j], float(per_mec[j])) for j in range(len(mec_list)))
    ssp = SspInstance(
        names=tuple(names),
        actions=tuple(actions),
        goal=goal,
        terminal=terminal,
        initial=qmap[vma.initial],
    )
    return _Quotient(ssp, qmap, u_state, q_state, gate_actions)


def build_ssp_lra(
    vma: ValidatedMA, mec_list: Sequence[Mec], per_mec: Sequence[float]
) -> SspInstance:
    """Quotient SSP: gates carry the exits, sinks carry the values.

    Component j becomes gate @uj plus absorbing sink @qj with terminal
    cost `per_mec[j]`.  The gate keeps every probabilistic transition
    leaving the component (qualified as "<state>.<label>") with successors
    inside any component redirected to that component's gate, plus a
    commit move to the sink.  States outside all components keep their
    transitions, similarly redirected.  All step costs are zero.
    """
    return _quotient(vma, mec_list, per_mec).ssp


def _reach_policy(vma: ValidatedMA, mec: Mec, target: int) -> dict[int, str]:
    """Choices that reach `target` almost surely inside the component.

    Backward BFS over the kept sub-model; each probabilistic state picks
    the (smallest-labelled) kept action whose support gets strictly closer
    to the target, which makes the hit certain in a strongly connected
    component.
    """
    kept = mec.action_map()
    dist = {target: 0}
    frontier = [target]
    pred: dict[int, list[int]] = {s: [] for s in mec.states}
    for s in sorted(mec.states):
        for label, d in vma.enabled(s):
            if label in kept[s]:
                for t, _ in d:
                    pred[t].append(s)
    while frontier:
        nxt = []
        for t in frontier:
            for s in pred[t]:
                if s not in dist:
                    dist[s] = dist[t] + 1
                    nxt.append(s)
        frontier = sorted(set(nxt))

    policy: dict[int, str] = {}
    for s in sorted(mec.states):
        if s not in vma.ps or s == target:
            continue
        best: tuple[int, str] | None = None
        for label, d in sorted(vma.ma.prob_transitions[s], key=lambda a: a[0]):
            if label not in kept[s]:
                continue
            reachable = [dist[t] for t, _ in d if t in dist]
            if not reachable:
                continue
            cand = (min(reachable), label)
            if best is None or cand < best:
                best = cand
        if best is not None:
            policy[s] = best[1]
    return policy


def lra(
    vma: ValidatedMA,
    goal: Iterable[int],
    mode: str = "min",
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> LraResult:
    """Optimal long-run average fraction of time spent in the goal set.

    Runs the three-step pipeline (components, per-component ratios,
    quotient solve).  Values are per state; the witness policy records a
    commit-or-exit decision per component together with stationary choices
    realizing it.
    """
    graph.require_non_zeno(vma)
    goal_ms = frozenset(goal) & vma.ms  # probabilistic states take no time
    mec_list = graph.mecs(vma)
    per_mec: list[float] = []
    mec_policies: list[dict[int, str]] = []
    iterations = 0
    for mec in mec_list:
        value, policy, used = lra_unichain(
            vma, mec, goal_ms, mode=mode, tol=tol, max_iters=max_iters
        )
        per_mec.append(value)
        mec_policies.append(policy)
        iterations += used

    quotient = _quotient(vma, mec_list, per_mec)
    res = solve_ssp(quotient.ssp, mode, tol=tol, max_iters=max_iters)
    iterations += res.iterations

    values = [res.values[quotient.state_map[s]] for s in range(vma.n)]

    decisions: dict[int, str | tuple[int, str]] = {}
    in_mec: dict[int, str] = {}
    for j, mec in enumerate(mec_list):
        chosen = res.policy.get(quotient.u_state[j], BOT)
        if chosen == BOT:
            decisions[j] = "stay"
            in_mec.update(mec_policies[j])
        else:
            exit_state, exit_label = quotient.gate_actions[(j, chosen)]
            decisions[j] = (exit_state, exit_label)
            in_mec.update(_reach_policy(vma, mec, exit_state))
            in_mec[exit_state] = exit_label
    in_any_mec = {s for mec in mec_list for s in mec.states}
    transient: dict[int, str] = {}
    for s in range(vma.n):
        if s in vma.ps and s not in in_any_mec:
            label = res.policy.get(quotient.state_map[s])
            if label is not None:
                transient[s] = label

    return LraResult(
        mode=mode,
        per_mec=per_mec,
        values=values,
        policy=LraPolicy(decisions=decisions, in_mec=in_mec, transient=transient),
        mecs=mec_list,
        iterations=iterations,
    )
