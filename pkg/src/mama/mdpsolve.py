"""Value iteration for non-negative stochastic shortest path problems.

The solver is shared by the expected-time, long-run-average and timed
analyses.  Instances are flattened into numpy arrays once and iterated
with Jacobi sweeps (every update reads the previous vector), which makes
results bit-reproducible regardless of how the work is scheduled.
Unreachable-goal states are represented by `inf` and never mixed into
finite arithmetic: a probability-weighted sum touching an `inf` successor
is itself `inf`.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

import math

from .errors import NotConverged, ZenoSubgraph
from .model import ValidatedMA

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000_000


@dataclass(frozen=True)
class SspAction:
    label: str
    cost: float
    dist: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class SspInstance:
    """Non-negative SSP: row-stochastic kernel, costs, goal, terminal costs.

    `actions[s]` must be nonempty for every non-goal state; costs and
    terminal costs are non-negative.  `terminal` pairs goal states with
    their terminal cost.
    """

    names: tuple[str, ...]
    actions: tuple[tuple[SspAction, ...], ...]
    goal: frozenset[int]
    terminal: tuple[tuple[int, float], ...]
    initial: int = 0

    @property
    def n(self) -> int:
        return len(self.names)

    def terminal_map(self) -> dict[int, float]:
        return dict(self.terminal)

    def check(self) -> None:
        for s in range(self.n):
            if s in self.goal:
                continue
            if not self.actions[s]:
                raise ValueError(f"non-goal state {self.names[s]} has no actions")
            for act in self.actions[s]:
                if act.cost < 0:
                    raise ValueError(f"negative cost at {self.names[s]}/{act.label}")
                total = sum(p for _, p in act.dist)
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(
                        f"kernel row {self.names[s]}/{act.label} sums to {total!r}"
                    )
        for g, value in self.terminal:
            if g not in self.goal or value < 0:
                raise ValueError("terminal costs must sit on goal states and be >= 0")


@dataclass
class SolveResult:
    values: list[float]
    policy: dict[int, str]
    iterations: int
    residual: float


class _Sweep:
    """Flattened Bellman operator restricted to the updatable states."""

    def __init__(self, ssp: SspInstance, mode: str, frozen: frozenset[int]):
        if mode not in ("min", "max"):
            raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
        self.mode = mode
        self.upd = np.array(
            [s for s in range(ssp.n) if s not in frozen], dtype=np.int64
        )
        self.rows: list[tuple[int, SspAction]] = []
        group_starts = [0]
        succ_starts = [0]
        costs: list[float] = []
        idx: list[int] = []
        ps: list[float] = []
        for s in self.upd:
            for act in sorted(ssp.actions[s], key=lambda a: a.label):
                self.rows.append((int(s), act))
                costs.append(act.cost)
                for t, p in act.dist:
                    if p > 0.0:
                        idx.append(t)
                        ps.append(p)
                succ_starts.append(len(idx))
            group_starts.append(len(self.rows))
        self.row_cost = np.array(costs, dtype=np.float64)
        self.succ_idx = np.array(idx, dtype=np.int64)
        self.succ_p = np.array(ps, dtype=np.float64)
        self.succ_starts = np.array(succ_starts[:-1], dtype=np.int64)
        self.group_starts = np.array(group_starts[:-1], dtype=np.int64)

    def row_values(self, v: np.ndarray) -> np.ndarray:
        if not self.rows:
            return np.empty(0)
        contrib = self.succ_p * v[self.succ_idx]
        return self.row_cost + np.add.reduceat(contrib, self.succ_starts)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """One Jacobi sweep; returns the updated copy of `v`."""
        if not len(self.upd):
            return v.copy()
        row_q = self.row_values(v)
        if self.mode == "min":
            opt = np.minimum.reduceat(row_q, self.group_starts)
        else:
            opt = np.maximum.reduceat(row_q, self.group_starts)
        out = v.copy()
        out[self.upd] = opt
        return out

    def extract_policy(self, v: np.ndarray) -> dict[int, str]:
        """Argopt per state; ties resolved by the smallest action label.

        Rows are label-sorted, so the first row matching the state optimum
        is the lexicographic tie-break winner.
        """
        row_q = self.row_values(v)
        policy: dict[int, str] = {}
        bounds = list(self.group_starts) + [len(self.rows)]
        for i, s in enumerate(self.upd):
            lo, hi = bounds[i], bounds[i + 1]
            qs = row_q[lo:hi]
            opt = qs.min() if self.mode == "min" else qs.max()
            for j in range(lo, hi):
                if row_q[j] == opt:
                    policy[int(s)] = self.rows[j][1].label
                    break
        return policy


def solve_ssp(
    ssp: SspInstance,
    mode: str,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    infinite: Iterable[int] = (),
) -> SolveResult:
    """Value iteration on the SSP Bellman operator.

    Starts from 0 on non-goal states and the terminal cost on goal states
    and sweeps until the sup-norm change drops below `tol`, scaled by an
    estimate of the contraction rate so the reported values are within
    `tol` of the fixpoint rather than merely one sweep from it.  States
    listed in `infinite` are held at `inf`; states whose every route runs
    through them converge to `inf` as well (not an error).  Iterates are
    pointwise nondecreasing.  Raises NotConverged when `max_iters` sweeps
    are exhausted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ssp.check()
    infinite = frozenset(infinite)
    v = np.zeros(ssp.n, dtype=np.float64)
    for g, value in ssp.terminal:
        v[g] = value
    for s in infinite:
        v[s] = np.inf

    sweep = _Sweep(ssp, mode, frozen=ssp.goal | infinite)
    residual = 0.0
    previous = None
    iterations = 0
    while True:
        new = sweep.apply(v)
        iterations += 1
        if len(sweep.upd):
            new_u, old_u = new[sweep.upd], v[sweep.upd]
            with np.errstate(invalid="ignore"):
                diff = np.abs(new_u - old_u)
            diff[np.isinf(new_u) & np.isinf(old_u)] = 0.0
            residual = float(np.max(diff))
        else:
            residual = 0.0
        v = new
        if residual <= tol:
            rate = (
                min(residual / previous, 0.999999)
                if previous not in (None, 0.0) and math.isfinite(residual)
                else 0.5
            )
            if residual <= tol * max(1.0 - rate, 1.0 / 64.0):
                break
        previous = residual if math.isfinite(residual) else None
        if iterations >= max_iters:
            raise NotConverged(iterations, residual)

    policy = sweep.extract_policy(v)
    return SolveResult(
        values=[float(x) for x in v],
        policy=policy,
        iterations=iterations,
        residual=residual,
    )


class ZeroTimePropagator:
    """Optimal zero-time propagation through probabilistic states.

    Probabilistic transitions take no time, so the value of a probabilistic
    state is the optimal expectation of the values of the first
    non-probabilistic (or otherwise terminal) states it can reach.  The
    non-terminal states must form an acyclic dependency graph; a cycle
    would mean unboundedly many instantaneous transitions and is rejected.
    The evaluation order is compiled once and can be replayed against many
    terminal vectors.
    """

    def __init__(self, vma: ValidatedMA, terminal: frozenset[int], mode: str):
        if mode not in ("min", "max"):
            raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
        self.mode = mode
        self.terminal = terminal
        solved = [s for s in range(vma.n) if s not in terminal]
        bad = [s for s in solved if s not in vma.ps]
        if bad:
            raise ValueError(
                "zero-time propagation needs terminal values on all "
                f"non-probabilistic states; missing {bad}"
            )
        self.rows: dict[int, list[tuple[str, tuple[tuple[int, float], ...]]]] = {}
        deps: dict[int, set[int]] = {s: set() for s in solved}
        rdeps: dict[int, set[int]] = {s: set() for s in solved}
        for s in solved:
            acts = sorted(vma.ma.prob_transitions[s], key=lambda a: a[0])
            self.rows[s] = [(label, dist) for label, dist in acts]
            for _, dist in acts:
                for t, _ in dist:
                    if t not in terminal:
                        deps[s].add(t)
                        rdeps[t].add(s)
        ready = [s for s in solved if not deps[s]]
        heapq.heapify(ready)
        order: list[int] = []
        pending = {s: len(deps[s]) for s in solved}
        while ready:
            s = heapq.heappop(ready)
            order.append(s)
            for r in sorted(rdeps[s]):
                pending[r] -= 1
                if pending[r] == 0:
                    heapq.heappush(ready, r)
        if len(order) != len(solved):
            stuck = sorted(s for s in solved if pending[s] > 0)
            raise ZenoSubgraph(stuck)
        self.order = order

    def apply(self, v) -> None:
        """Fill the non-terminal entries of `v` in place (topological order)."""
        better = min if self.mode == "min" else max
        for s in self.order:
            v[s] = better(
                sum(p * v[t] for t, p in dist) for _, dist in self.rows[s]
            )


def zero_time_reach(
    vma: ValidatedMA, terminal: Mapping[int, float], mode: str
) -> dict[int, float]:
    """Optimal expected terminal value reached through zero-time moves only.

    `terminal` must cover at least all Markovian states; the remaining
    (probabilistic) states get the sup/inf over time-abstract policies of
    the expected terminal value at the first terminal state reached via
    probabilistic transitions.  Non-Zenoness guarantees arrival.
    """
    prop = ZeroTimePropagator(vma, frozenset(terminal), mode)
    v = [0.0] * vma.n
    for s, value in terminal.items():
        v[s] = value
    prop.apply(v)
    return {s: v[s] for s in prop.order}
