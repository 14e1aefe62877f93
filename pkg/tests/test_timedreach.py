import itertools
import math
import random

import pytest

from mama import (
    TimedQuery,
    choose_delta,
    discretise,
    make_absorbing,
    oracle,
    step_bounded_reach,
    timed_reachability,
    validate,
)
from mama.errors import StepOverflow

from conftest import mk, random_ctmc


def erlang(n, rate=1.0):
    markov = {f"s{i}": [(f"s{i+1}" if i + 1 < n else "g", rate)] for i in range(n)}
    vma = validate(mk("s0", markov=markov))
    return vma, frozenset({vma.index_of("g")})


def birth_death(n, up=1.5, down=1.0):
    markov = {}
    for i in range(n):
        edges = []
        if i + 1 < n:
            edges.append((f"s{i+1}", up))
        if i > 0:
            edges.append((f"s{i-1}", down))
        markov[f"s{i}"] = edges
    vma = validate(mk("s0", markov=markov, states=[f"s{i}" for i in range(n)]))
    return vma, frozenset({vma.index_of(f"s{n-1}")})


def test_choose_delta_examples():
    delta, k = choose_delta(1.0, 1.0, 0.005)
    assert k == 100 and delta == pytest.approx(0.01)
    delta, k = choose_delta(2.0, 1.0, 0.5)
    assert k == 4 and delta == pytest.approx(0.25)
    # accuracy looser than the bound itself: a single step suffices
    _, k = choose_delta(1.0, 1.0, 0.9)
    assert k == 1


def test_choose_delta_guarantee():
    for lam, b, eps in [(1.0, 1.0, 0.005), (2.0, 3.0, 1e-3), (0.5, 10.0, 1e-2)]:
        delta, k = choose_delta(lam, b, eps)
        term = 1.0 - math.exp(-lam * b) * (1.0 + lam * delta) ** k
        assert term <= lam * lam * b * b / (2 * k) <= eps


def test_choose_delta_overflow():
    with pytest.raises(StepOverflow):
        choose_delta(1000.0, 1000.0, 1e-9)


def test_discretise_rows():
    vma = validate(mk("s", markov={"s": [("g", 2.0)]}))
    dma = discretise(vma, 0.1)
    s, g = vma.index_of("s"), vma.index_of("g")
    row = dict(dma.mu[s])
    assert row[g] == pytest.approx(1.0 - math.exp(-0.2))
    assert row[s] == pytest.approx(math.exp(-0.2))
    assert sum(row.values()) == pytest.approx(1.0, abs=1e-12)


def test_discretise_large_step_approaches_branching():
    vma = validate(mk("s", markov={"s": [("a", 1.0), ("b", 1.0)]}))
    dma = discretise(vma, 1000.0)
    row = dict(dma.mu[vma.index_of("s")])
    assert row[vma.index_of("a")] == pytest.approx(0.5, abs=1e-9)
    assert row[vma.index_of("b")] == pytest.approx(0.5, abs=1e-9)


def test_discretise_self_loop_mass():
    vma = validate(mk("s", markov={"s": [("s", 1.0), ("g", 1.0)]}))
    dma = discretise(vma, 0.1)
    row = dict(dma.mu[vma.index_of("s")])
    stay = math.exp(-0.2)
    assert row[vma.index_of("s")] == pytest.approx(0.5 * (1 - stay) + stay)
    assert row[vma.index_of("s")] >= stay


def test_step_bounded_geometric_closed_form():
    vma, goal = erlang(1)
    delta, lam, k = 0.1, 1.0, 10
    dma = discretise(make_absorbing(vma, goal), delta)
    v = step_bounded_reach(dma, goal, k, "max")
    assert v[0] == pytest.approx(1.0 - math.exp(-lam * delta * k), rel=1e-12)
    assert v[0] == pytest.approx(0.6321206, abs=1e-7)


def test_step_bounded_zero_steps_is_zero_time_reach():
    vma = validate(
        mk(
            "p",
            prob={"p": [("a", [("g", 0.3), ("m", 0.7)])]},
            markov={"m": [("g", 1.0)]},
        )
    )
    goal = frozenset({vma.index_of("g")})
    dma = discretise(make_absorbing(vma, goal), 0.1)
    v = step_bounded_reach(dma, goal, 0, "max")
    assert v[vma.index_of("g")] == 1.0
    assert v[vma.index_of("m")] == 0.0
    assert v[vma.index_of("p")] == pytest.approx(0.3)


def test_step_bounded_monotone_in_k():
    vma, goal = birth_death(5)
    dma = discretise(make_absorbing(vma, goal), 0.05)
    prev = step_bounded_reach(dma, goal, 0, "max")
    for k in (1, 2, 5, 10, 25):
        cur = step_bounded_reach(dma, goal, k, "max")
        assert all(a <= b + 1e-15 for a, b in zip(prev, cur))
        prev = cur


def test_mode_choice_prefers_fast_branch():
    vma = validate(
        mk(
            "p",
            prob={"p": [("a", [("m1", 1.0)]), ("b", [("m2", 1.0)])]},
            markov={"m1": [("g", 10.0)], "m2": [("g", 0.1)]},
        )
    )
    goal = frozenset({vma.index_of("g")})
    hi = timed_reachability(vma, TimedQuery(goal=goal, b=0.5, eps=1e-3, mode="max"))
    lo = timed_reachability(vma, TimedQuery(goal=goal, b=0.5, eps=1e-3, mode="min"))
    p = vma.index_of("p")
    assert hi.lower[p] > lo.upper[p]
    fast = 1 - math.exp(-10 * 0.5)
    slow = 1 - math.exp(-0.1 * 0.5)
    assert hi.lower[p] <= fast <= hi.upper[p]
    assert lo.lower[p] <= slow <= lo.upper[p]


def test_zero_zero_interval():
    vma = validate(
        mk("p", prob={"p": [("a", [("g", 0.25), ("m", 0.75)])]},
           markov={"m": [("g", 1.0)]})
    )
    goal = frozenset({vma.index_of("g")})
    res = timed_reachability(vma, TimedQuery(goal=goal, b=0.0, eps=1e-3, mode="max"))
    assert res.lower[vma.index_of("g")] == res.upper[vma.index_of("g")] == 1.0
    assert res.lower[vma.index_of("p")] == pytest.approx(0.25)
    assert res.lower[vma.index_of("m")] == 0.0


def test_sandwich_on_analytic_families():
    for n in (1, 2, 5):
        vma, goal = erlang(n)
        for b, eps in itertools.product((0.5, 1.0, 4.0), (1e-2, 1e-3)):
            res = timed_reachability(
                vma, TimedQuery(goal=goal, b=b, eps=eps, mode="max")
            )
            want = oracle.ctmc_transient(vma, goal, b)
            for s in range(vma.n):
                assert res.lower[s] <= want[s] <= res.upper[s]
                assert res.upper[s] - res.lower[s] <= eps


def test_bracket_narrows_with_accuracy():
    vma, goal = erlang(2)
    prev = None
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        res = timed_reachability(vma, TimedQuery(goal=goal, b=1.0, eps=eps, mode="max"))
        if prev is not None:
            assert res.lower[0] >= prev.lower[0] - 1e-12
            assert res.upper[0] <= prev.upper[0] + 1e-12
        prev = res


def test_error_halves_when_steps_double():
    lam, b = 1.0, 2.0
    _, k = choose_delta(lam, b, 1e-2)
    for _ in range(3):
        first = lam * lam * b * b / (2 * k)
        second = lam * lam * b * b / (2 * (2 * k))
        assert second <= first / 2 + 1e-15
        k *= 2


def test_min_bracket_below_max_bracket():
    rng = random.Random(131)
    from conftest import random_ma

    done = 0
    while done < 8:
        vma, goal = random_ma(rng, max_states=5)
        if vma.lambda_max <= 0:
            continue
        q = dict(goal=goal, b=1.0, eps=1e-2)
        lo = timed_reachability(vma, TimedQuery(mode="min", **q))
        hi = timed_reachability(vma, TimedQuery(mode="max", **q))
        for s in range(vma.n):
            assert lo.lower[s] <= hi.lower[s] + 1e-12
            assert lo.upper[s] <= hi.upper[s] + 1e-12
        done += 1


def test_modes_coincide_without_nondeterminism():
    # a pure chain has no choices, so the min and max brackets agree
    vma, goal = birth_death(4)
    q = dict(goal=goal, b=1.0, eps=1e-3)
    lo = timed_reachability(vma, TimedQuery(mode="min", **q))
    hi = timed_reachability(vma, TimedQuery(mode="max", **q))
    assert lo.lower == hi.lower
    assert lo.upper == hi.upper


def test_interval_single_exponential():
    vma, goal = erlang(1)
    for a, b in ((1.0, 4.0), (0.5, 1.0)):
        res = timed_reachability(
            vma, TimedQuery(goal=goal, a=a, b=b, eps=1e-3, mode="max")
        )
        want = math.exp(-a) - math.exp(-b)
        assert res.lower[0] <= want <= res.upper[0]
        assert res.upper[0] - res.lower[0] <= 1e-3


def test_interval_erlang_first_passage():
    for n in (2, 5):
        vma, goal = erlang(n)
        for a, b in ((0.5, 2.0), (1.0, 3.0)):
            res = timed_reachability(
                vma, TimedQuery(goal=goal, a=a, b=b, eps=1e-3, mode="max")
            )
            want = (
                oracle.ctmc_transient(vma, goal, b)[0]
                - oracle.ctmc_transient(vma, goal, a)[0]
            )
            assert res.lower[0] <= want <= res.upper[0]
            assert res.upper[0] - res.lower[0] <= 1e-3


def test_interval_birth_death_first_passage():
    vma, goal = birth_death(6)
    res = timed_reachability(
        vma, TimedQuery(goal=goal, a=1.0, b=2.5, eps=1e-3, mode="max")
    )
    want = (
        oracle.ctmc_transient(vma, goal, 2.5)[0]
        - oracle.ctmc_transient(vma, goal, 1.0)[0]
    )
    assert res.lower[0] <= want <= res.upper[0]


def test_interval_grid_divides_both_horizons():
    vma, goal = erlang(1)
    res = timed_reachability(
        vma, TimedQuery(goal=goal, a=0.75, b=2.0, eps=1e-2, mode="max")
    )
    assert res.steps_a * res.delta_used == pytest.approx(0.75, rel=1e-12)
    assert res.steps * res.delta_used == pytest.approx(1.25, rel=1e-12)


def test_bounds_certified_on_random_ctmcs():
    rng = random.Random(137)
    for _ in range(10):
        vma, goal = random_ctmc(rng, max_states=8, rate_hi=3.0)
        res = timed_reachability(
            vma, TimedQuery(goal=goal, b=1.0, eps=1e-2, mode="max")
        )
        want = oracle.ctmc_transient(vma, goal, 1.0)
        for s in range(vma.n):
            assert res.lower[s] - 1e-12 <= want[s] <= res.upper[s] + 1e-12
