"""Expected time to reach a goal set.

The minimal (or maximal) expected time solves a stochastic shortest path
problem on the embedded jump chain: Markovian states pay their mean
sojourn time 1/E(s), probabilistic states choose among their actions for
free.  Unreachable goals give infinity.
"""

import math
from pathlib import Path

from mama import MarkovAutomaton, expected_time, oracle, parse, validate

MODELS = Path(__file__).resolve().parent.parent / "models"

# ---------------------------------------------------------------------------
# A single exponential jump of rate 2: the answer is its mean, 0.5.

vma = validate(MarkovAutomaton.from_parts("s", markov={"s": [("g", 2.0)]}))
goal = {vma.index_of("g")}
res = expected_time(vma, goal, "min")
print("one jump at rate 2:", res.values[0], "(mean of Exp(2))")

# ---------------------------------------------------------------------------
# A real choice: action a reaches the goal instantly, action b first waits
# for a rate-1 delay.  Minimizing picks a (time 0), maximizing picks b.

choice = validate(
    MarkovAutomaton.from_parts(
        "s",
        prob={"s": [("a", [("g", 1.0)]), ("b", [("m", 1.0)])]},
        markov={"m": [("g", 1.0)]},
    )
)
goal = {choice.index_of("g")}
lo = expected_time(choice, goal, "min")
hi = expected_time(choice, goal, "max")
print("\nbest action:", lo.policy[0], "->", lo.values[0])
print("worst action:", hi.policy[0], "->", hi.values[0])

# ---------------------------------------------------------------------------
# Erlang-3: three unit-rate stages in series sum their means.

erlang3 = validate(
    MarkovAutomaton.from_parts(
        "s0",
        markov={"s0": [("s1", 1.0)], "s1": [("s2", 1.0)], "s2": [("g", 1.0)]},
    )
)
res = expected_time(erlang3, {erlang3.index_of("g")}, "min")
print("\nErlang-3 head:", res.values[0])
print("linear-solve reference:", oracle.ctmc_hitting_time(erlang3, {erlang3.index_of("g")})[0])

# ---------------------------------------------------------------------------
# The bundled queueing model: time until both stations and the server are
# busy.  The two polling actions are symmetric here, so min equals max.

ma, goal = parse((MODELS / "queue.ma").read_text())
queue = validate(ma)
lo = expected_time(queue, goal, "min")
hi = expected_time(queue, goal, "max")
print("\nqueue model, time to (1,1,1):")
print("  min", lo.values[queue.initial], "max", hi.values[queue.initial])
print("  witness choices:", {queue.name(s): a for s, a in sorted(lo.policy.items())})

# ---------------------------------------------------------------------------
# Unreachable goals are reported as infinity, not an error.

trap = validate(
    MarkovAutomaton.from_parts(
        "s", markov={"s": [("s", 1.0)], "g": [("g", 1.0)]}, states=["s", "g"]
    )
)
res = expected_time(trap, {trap.index_of("g")}, "min")
print("\nself-looping state never reaches g:", res.values[0], math.isinf(res.values[0]))
