"""Models in memory and on disk.

Walk-through of the model layer: building a Markov automaton in code,
validating it (maximal progress, derived rates), the textual .ma format,
and what happens with Zeno models.
"""

from pathlib import Path

from mama import MarkovAutomaton, check_non_zeno, parse, serialize, validate

MODELS = Path(__file__).resolve().parent.parent / "models"

# ---------------------------------------------------------------------------
# Build a small automaton in code: one probabilistic choice, two rates.

ma = MarkovAutomaton.from_parts(
    "start",
    prob={"start": [("go", [("fast", 0.3), ("slow", 0.7)])]},
    markov={"fast": [("done", 5.0)], "slow": [("done", 0.5)]},
)
vma = validate(ma)
print("states:", vma.states)
print("Markovian:", sorted(vma.name(s) for s in vma.ms))
print("probabilistic:", sorted(vma.name(s) for s in vma.ps))
print("exit rate of 'fast':", vma.exit_rate[vma.index_of("fast")])
print("largest exit rate:", vma.lambda_max)

# 'done' had no transitions at all; validation normalizes such deadlocks to
# a rate-1 self-loop so every Markovian state has a defined exit rate.
done = vma.index_of("done")
print("'done' branch:", vma.branch[done])

# ---------------------------------------------------------------------------
# Maximal progress: action transitions preempt rate transitions.

mixed = MarkovAutomaton.from_parts(
    "s",
    prob={"s": [("tau", [("a", 1.0)])]},
    markov={"s": [("b", 4.0)]},
)
closed = validate(mixed)
print("\nwarnings:", closed.warnings)
print("'s' is probabilistic after closure:", closed.index_of("s") in closed.ps)

# ---------------------------------------------------------------------------
# The .ma text format round-trips exactly.

text = serialize(vma.ma)
print("\nserialized model:")
print(text)
again, _ = parse(text)
print("round trip equal:", again == vma.ma)

# ---------------------------------------------------------------------------
# Zeno models (a reachable cycle of zero-time transitions) are detected.

zeno_text = (MODELS / "zeno.ma").read_text()
zeno_ma, _ = parse(zeno_text)
witness = check_non_zeno(validate(zeno_ma))
print("Zeno witness states:", sorted(zeno_ma.states[s] for s in witness.states))
