"""Command-line front end.

    mama run MODEL --query {et,lra,tbr} [--mode {min,max,both}] [options]

Loads a `.ma` model, runs one query, and prints per-state results as text
or JSON (schema frozen in docs/json.md).  Exit codes: 0 success, 1 usage
error, 2 model error, 3 numeric non-convergence, 4 Zeno model (the witness
states are printed), 5 oracle disagreement under --verify.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

from . import graph, oracle
from .errors import (
    MamaError,
    NotConverged,
    ParseError,
    StepOverflow,
    ZenoModelError,
)
from .exptime import expected_time
from .longrun import lra
from .model import ValidatedMA, validate
from .parser import parse
from .timedreach import TimedQuery, timed_reachability

_USAGE_EXIT = 1
_MODEL_EXIT = 2
_NUMERIC_EXIT = 3
_ZENO_EXIT = 4
_VERIFY_EXIT = 5

VERIFY_MAX_STATES = 10
VERIFY_ET_TOL = 1e-7
VERIFY_LRA_TOL = 1e-6
VERIFY_TBR_SLACK = 1e-9


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        raise _ArgumentError(message)


@dataclass
class CliQuery:
    model_path: str
    query: str
    mode: str
    goal_override: list[str] | None
    a: float
    b: float | None
    epsilon: float
    tol: float
    output: str
    show_policy: bool
    verify: bool
    show_stats: bool


def _build_parser() -> _Parser:
    top = _Parser(prog="mama", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one query against a model")
    run_p.add_argument("model", help="path to the .ma model file")
    run_p.add_argument("--query", required=True, choices=("et", "lra", "tbr"))
    run_p.add_argument("--mode", default="both", choices=("min", "max", "both"))
    run_p.add_argument(
        "--goal", nargs="+", default=None,
        help="goal state ids (overrides the #GOALS section)",
    )
    run_p.add_argument("--from", dest="a", type=float, default=0.0,
                       help="interval lower bound (tbr)")
    run_p.add_argument("--to", dest="b", type=float, default=None,
                       help="interval upper bound (tbr)")
    run_p.add_argument("--epsilon", type=float, default=1e-3,
                       help="certified accuracy for tbr brackets")
    run_p.add_argument("--tol", type=float, default=1e-10,
                       help="convergence tolerance for iterative solves")
    run_p.add_argument("--output", default="text", choices=("text", "json"))
    run_p.add_argument("--policy", action="store_true", dest="show_policy",
                       help="report a witness policy (et, lra)")
    run_p.add_argument("--verify", action="store_true",
                       help="cross-check against the oracle on small models")
    run_p.add_argument("--stats", action="store_true", dest="show_stats",
                       help="report model and solver statistics")
    return top


def _read_threads_env() -> int:
    raw = os.environ.get("MAMA_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise _ArgumentError(f"MAMA_THREADS must be an integer, got {raw!r}")
    if value < 0:
        raise _ArgumentError("MAMA_THREADS must be >= 0")
    # Sweeps are Jacobi, so results never depend on this; the setting only
    # caps worker fan-out, and this implementation runs them sequentially.
    return value


def _fmt_value(v: float):
    return "inf" if math.isinf(v) else v


def _fmt_text(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def _policy_names(vma: ValidatedMA, policy: dict[int, str]) -> dict[str, str]:
    return {vma.name(s): policy[s] for s in sorted(policy)}


def _run_query(vma: ValidatedMA, goal: frozenset[int], args: CliQuery, mode: str):
    """One (query, mode) execution; returns (values, bounds, policy, iters)."""
    if args.query == "et":
        res = expected_time(vma, goal, mode, tol=args.tol)
        return res.values, None, _policy_names(vma, res.policy), res.iterations
    if args.query == "lra":
        res = lra(vma, goal, mode, tol=args.tol)
        return (
            res.values,
            None,
            _policy_names(vma, res.policy.flat()),
            res.iterations,
        )
    query = TimedQuery(goal=goal, a=args.a, b=args.b, eps=args.epsilon, mode=mode)
    res = timed_reachability(vma, query)
    bounds = {"lower": res.lower, "upper": res.upper}
    return res.lower, bounds, None, res.steps + res.steps_a


def _verify(vma, goal, args: CliQuery, mode: str, values, bounds) -> str | None:
    """Compare one mode's results against the oracle; None means agreement."""
    if args.query in ("et", "lra"):
        objective = args.query
        tol = VERIFY_ET_TOL if objective == "et" else VERIFY_LRA_TOL
        reference = oracle.enumerate_policies(vma, goal, objective, mode)
        for s in range(vma.n):
            got, want = values[s], reference[s]
            if math.isinf(got) != math.isinf(want):
                return (
                    f"{args.query}/{mode} at {vma.name(s)}: {got} vs oracle {want}"
                )
            if not math.isinf(got) and abs(got - want) > tol:
                return (
                    f"{args.query}/{mode} at {vma.name(s)}: {got} vs oracle "
                    f"{want} (tol {tol})"
                )
        return None
    if vma.ps:
        return ""  # signals "skipped" to the caller
    hi = oracle.ctmc_transient(vma, goal, args.b)
    if args.a > 0.0:
        lo_part = oracle.ctmc_transient(vma, goal, args.a)
        reference = [h - l for h, l in zip(hi, lo_part)]
    else:
        reference = hi
    for s in range(vma.n):
        if not (
            bounds["lower"][s] - VERIFY_TBR_SLACK
            <= reference[s]
            <= bounds["upper"][s] + VERIFY_TBR_SLACK
        ):
            return (
                f"tbr/{mode} at {vma.name(s)}: oracle {reference[s]} outside "
                f"[{bounds['lower'][s]}, {bounds['upper'][s]}]"
            )
    return None


def run(argv) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        _read_threads_env()
        args = CliQuery(
            model_path=ns.model,
            query=ns.query,
            mode=ns.mode,
            goal_override=ns.goal,
            a=ns.a,
            b=ns.b,
            epsilon=ns.epsilon,
            tol=ns.tol,
            output=ns.output,
            show_policy=ns.show_policy,
            verify=ns.verify,
            show_stats=ns.show_stats,
        )
        if args.query == "tbr":
            if args.b is None:
                raise _ArgumentError("tbr queries need --to")
            try:
                TimedQuery(goal=frozenset(), a=args.a, b=args.b, eps=args.epsilon)
            except ValueError as exc:
                raise _ArgumentError(str(exc)) from None
        if args.tol <= 0:
            raise _ArgumentError("--tol must be positive")
    except _ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _USAGE_EXIT

    started = time.perf_counter()
    try:
        with open(args.model_path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return _MODEL_EXIT

    try:
        ma, file_goal = parse(text)
        vma = validate(ma)
        if args.goal_override is not None:
            goal = frozenset(vma.index_of(name) for name in args.goal_override)
        else:
            goal = file_goal
    except (ParseError, MamaError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return _MODEL_EXIT

    modes = ["min", "max"] if args.mode == "both" else [args.mode]
    per_mode = {}
    iterations = 0
    try:
        for mode in modes:
            values, bounds, policy, iters = _run_query(vma, goal, args, mode)
            per_mode[mode] = {"values": values, "bounds": bounds, "policy": policy}
            iterations += iters
    except ZenoModelError as exc:
        print(f"zeno error: {exc}", file=sys.stderr)
        return _ZENO_EXIT
    except NotConverged as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT
    except StepOverflow as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    wall = time.perf_counter() - started

    verify_notes = []
    if args.verify:
        if vma.n > VERIFY_MAX_STATES:
            verify_notes.append(
                f"verify: skipped, model has {vma.n} > {VERIFY_MAX_STATES} states"
            )
        else:
            for mode in modes:
                outcome = _verify(
                    vma, goal, args, mode,
                    per_mode[mode]["values"], per_mode[mode]["bounds"],
                )
                if outcome == "":
                    verify_notes.append(
                        "verify: skipped for tbr on models with probabilistic states"
                    )
                elif outcome is not None:
                    print(f"verify error: {outcome}", file=sys.stderr)
                    return _VERIFY_EXIT
                else:
                    verify_notes.append(f"verify: {args.query}/{mode} agrees with oracle")

    payload = _assemble(vma, goal, args, modes, per_mode)
    if args.show_stats:
        payload["stats"] = {
            "states": vma.n,
            "markovian": len(vma.ms),
            "probabilistic": len(vma.ps),
            "mecs": len(graph.mecs(vma)),
            "lambda_max": vma.lambda_max,
            "iterations": iterations,
            "wall_time_s": wall,
        }

    if args.output == "json":
        print(json.dumps(payload, indent=2))
    else:
        _print_text(vma, args, modes, per_mode, payload)
    for note in verify_notes:
        print(note, file=sys.stderr)
    return 0


def _assemble(vma, goal, args: CliQuery, modes, per_mode) -> dict:
    payload: dict = {"query": args.query, "mode": args.mode}
    names = vma.states
    if len(modes) == 1:
        mode = modes[0]
        data = per_mode[mode]
        payload["values"] = {
            names[s]: _fmt_value(data["values"][s]) for s in range(vma.n)
        }
        if data["bounds"] is not None:
            payload["bounds"] = {
                "lower": {names[s]: data["bounds"]["lower"][s] for s in range(vma.n)},
                "upper": {names[s]: data["bounds"]["upper"][s] for s in range(vma.n)},
            }
        if args.show_policy and data["policy"] is not None:
            payload["policy"] = data["policy"]
        return payload

    payload["values"] = {
        names[s]: [
            _fmt_value(per_mode["min"]["values"][s]),
            _fmt_value(per_mode["max"]["values"][s]),
        ]
        for s in range(vma.n)
    }
    if per_mode["min"]["bounds"] is not None:
        payload["bounds"] = {
            mode: {
                "lower": {
                    names[s]: per_mode[mode]["bounds"]["lower"][s]
                    for s in range(vma.n)
                },
                "upper": {
                    names[s]: per_mode[mode]["bounds"]["upper"][s]
                    for s in range(vma.n)
                },
            }
            for mode in ("min", "max")
        }
    if args.show_policy and per_mode["min"]["policy"] is not None:
        payload["policy"] = {
            mode: per_mode[mode]["policy"] for mode in ("min", "max")
        }
    return payload


def _print_text(vma, args: CliQuery, modes, per_mode, payload) -> None:
    names = vma.states
    if args.query == "tbr":
        if len(modes) == 1:
            bounds = per_mode[modes[0]]["bounds"]
            for s in range(vma.n):
                print(
                    f"{names[s]} [{_fmt_text(bounds['lower'][s])}, "
                    f"{_fmt_text(bounds['upper'][s])}]"
                )
        else:
            for s in range(vma.n):
                lo = per_mode["min"]["bounds"]["lower"][s]
                hi = per_mode["max"]["bounds"]["upper"][s]
                print(f"{names[s]} [{_fmt_text(lo)}, {_fmt_text(hi)}]")
    elif len(modes) == 1:
        values = per_mode[modes[0]]["values"]
        for s in range(vma.n):
            print(f"{names[s]} {_fmt_text(_fmt_value(values[s]))}")
    else:
        for s in range(vma.n):
            lo = _fmt_value(per_mode["min"]["values"][s])
            hi = _fmt_value(per_mode["max"]["values"][s])
            print(f"{names[s]} [{_fmt_text(lo)}, {_fmt_text(hi)}]")
    if args.show_policy:
        for mode in modes:
            policy = per_mode[mode]["policy"]
            if policy is None:
                continue
            print(f"POLICY {mode}")
            for state, action in policy.items():
                print(f"{state} {action}")
    if "stats" in payload:
        stats = payload["stats"]
        print(
            "STATS "
            + " ".join(f"{key}={stats[key]}" for key in stats)
        )


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
