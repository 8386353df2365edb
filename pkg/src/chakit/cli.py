"""Command-line interface.

Subcommands: validate, check, cost, compare, candidates, cover, simulate,
translate, quotient, synthesize, verify, serve. Output is deterministic
for fixed inputs and seeds; `--json` switches to machine format. Exit
codes: 0 success/realizable, 1 domain error, 2 usage, 3 unrealizable,
4 unsupported goal fragment, 5 strategy found but not verified.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cost import (TherapySpace, candidate_therapies, covers,
                   therapy_cost_set, therapy_dominates, untimed_cost)
from .ctl import close_system, format_formula, model_check, parse_ctl
from .errors import ChaError, FragmentUnsupportedError, ModelValidationError
from .game import (canonical_menu, discretize, quotient, translate, untimed_game)
from .modelfile import ModelBundle, load_model, packaged_model_path
from .session import Session
from .synth import Strategy, solve_ctl, verify_strategy
from .therapy import MemorylessTherapy, parse_therapy_spec
from .untimed import AdversaryPolicy, cocktail_key, execute, validate
from .timed import validate_timed

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_UNREALIZABLE = 3
EXIT_UNSUPPORTED = 4
EXIT_UNVERIFIED = 5


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _vec(v) -> str:
    return "(" + ", ".join(_fmt(x) for x in v) + ")"


def _resolve_model(path: str) -> ModelBundle:
    p = Path(path)
    if not p.exists():
        packaged = packaged_model_path(path)
        if packaged.exists():
            p = packaged
    return load_model(p)


def _parse_menu(bundle: ModelBundle, entries):
    if not entries:
        return bundle.menu
    menu = [frozenset(d for d in item.split("+") if d) for item in entries]
    if frozenset() not in menu:
        menu.append(frozenset())
    return canonical_menu(menu, bundle.model.drugs)


def _build_game(bundle: ModelBundle, menu, bound=None):
    if bundle.timed:
        return quotient(discretize(translate(bundle.timed_cha, menu)), bound=bound)
    return untimed_game(bundle.cha, menu)


def _therapy_strategy(bundle: ModelBundle, qg, therapy: MemorylessTherapy) -> Strategy:
    """Memoryless state therapy lifted to every controller node."""
    entries = []
    for i, (vi, ci, region, turn) in enumerate(qg.nodes):
        if turn != 0:
            continue
        state = qg.states[vi]
        entries.append(((state, cocktail_key(qg.menu[ci]), region),
                        therapy.cocktail_for([state])))
    bounds = tuple(sorted(qg.bounds.items()))
    return Strategy(tuple(sorted(set(entries))), qg.scale, bounds, qg.clocks,
                    "therapy closure")


def _emit(args, lines, payload):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    try:
        bundle = _resolve_model(args.model)
    except ModelValidationError as exc:
        report = exc.report
        _emit(args, [str(report)], {"ok": False,
                                    "findings": [str(f) for f in report.findings]})
        return EXIT_DOMAIN
    model = bundle.model
    report = validate_timed(model) if bundle.timed else validate(model)
    _emit(args, [str(report)], {"ok": report.ok,
                                "findings": [str(f) for f in report.findings]})
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_check(args) -> int:
    bundle = _resolve_model(args.model)
    f = parse_ctl(args.formula)
    menu = _parse_menu(bundle, args.menu)
    if bundle.timed:
        qg = _build_game(bundle, menu, args.bound)
        if args.therapy is not None:
            therapy = parse_therapy_spec(args.therapy)
            from .synth import close_game
            k = close_game(qg, _therapy_strategy(bundle, qg, therapy))
        else:
            k = qg.to_kripke()
        k.atom_universe = frozenset(k.atom_universe | {a.name for a in _atoms(f)})
        result = model_check(k, f)
        lines = [f"formula: {format_formula(f)}",
                 f"verdict: {'true' if result.verdict else 'false'}",
                 f"nodes: {len(k.keys)}"]
        payload = {"formula": format_formula(f), "verdict": result.verdict,
                   "nodes": len(k.keys)}
    else:
        therapy = parse_therapy_spec(args.therapy or "")
        k = close_system(bundle.cha, therapy)
        result = model_check(k, f)
        table = {str(key): val for key, val in result.table}
        lines = [f"formula: {format_formula(f)}",
                 f"verdict: {'true' if result.verdict else 'false'}"]
        lines += [f"  {key}: {'true' if table[key] else 'false'}" for key in sorted(table)]
        payload = {"formula": format_formula(f), "verdict": result.verdict,
                   "table": table}
    _emit(args, lines, payload)
    return EXIT_OK


def _atoms(f):
    from .ctl import Atom, Formula
    out = set()
    def walk(g):
        if isinstance(g, Atom):
            out.add(g)
        for name in ("sub", "lhs", "rhs"):
            child = getattr(g, name, None)
            if isinstance(child, Formula):
                walk(child)
    walk(f)
    return out


def cmd_cost(args) -> int:
    bundle = _resolve_model(args.model)
    therapy = parse_therapy_spec(args.therapy or "")
    policy = AdversaryPolicy.parse(args.policy)
    lines = [f"model: {bundle.name}", f"therapy: {therapy.describe()}",
             f"policy: {policy}", f"seed: {args.seed}", f"steps: {args.steps}"]
    if bundle.timed:
        session = Session(bundle, policy, args.seed)
        trace = [session.snapshot()["state"]]
        for _ in range(args.steps):
            if session.halted:
                break
            session.step(therapy.cocktail_for([session.snapshot()["state"]]))
            trace.append(session.snapshot()["state"])
        value = session.cost
        lines.append("trace: " + " ".join(trace))
        lines.append(f"cost: {_vec(value)} (exponential discount, {args.steps} rounds)")
        payload = {"cost": list(value), "trace": trace, "seed": args.seed}
    else:
        run = execute(bundle.cha, therapy, policy, args.steps, args.seed)
        res = untimed_cost(run, therapy, bundle.cost_model,
                           horizon=args.horizon or args.steps)
        lines.append("trace: " + " ".join(run.states))
        lines.append(f"cost: {_vec(res.value)} tail<= {_vec(res.tail_radius)}")
        payload = {"cost": list(res.value), "tail_radius": list(res.tail_radius),
                   "trace": list(run.states), "seed": args.seed}
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_compare(args) -> int:
    bundle = _resolve_model(args.model)
    ta = parse_therapy_spec(args.therapy_a)
    tb = parse_therapy_spec(args.therapy_b)
    ca = therapy_cost_set(bundle.cha, ta, bundle.cost_model, args.horizon)
    cb = therapy_cost_set(bundle.cha, tb, bundle.cost_model, args.horizon)
    a_dom = therapy_dominates(ca, cb)
    b_dom = therapy_dominates(cb, ca)
    verdict = ("A dominates B" if a_dom else
               "B dominates A" if b_dom else "incomparable")
    lines = [f"therapy A: {ta.describe()}", f"therapy B: {tb.describe()}",
             "cost set A: " + " ".join(_vec(v) for v in ca[0]),
             "cost set B: " + " ".join(_vec(v) for v in cb[0]),
             f"verdict: {verdict}"]
    payload = {"verdict": verdict, "a_dominates": a_dom, "b_dominates": b_dom,
               "costs_a": [list(v) for v in ca[0]], "costs_b": [list(v) for v in cb[0]]}
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_candidates(args) -> int:
    bundle = _resolve_model(args.model)
    menu = _parse_menu(bundle, args.menu)
    report = candidate_therapies(bundle.cha, bundle.cost_model, TherapySpace(menu),
                                 args.horizon)
    lines = [f"therapy space: {len(report.therapies)} memoryless therapies",
             f"candidates: {len(report.candidates)}"]
    lines += [f"  {t.describe()}" for t in report.candidates]
    if report.inconclusive:
        lines.append(f"inconclusive dominance pairs: {len(report.inconclusive)}")
    payload = {"candidates": [t.describe() for t in report.candidates],
               "space_size": len(report.therapies),
               "inconclusive": len(report.inconclusive)}
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_cover(args) -> int:
    family = [_resolve_model(m).cha for m in args.family]
    base = _resolve_model(args.family[0])
    menu = _parse_menu(base, args.menu)
    pool = [parse_therapy_spec(spec) for spec in args.therapy]
    verdict = covers(pool, family, base.cost_model, TherapySpace(menu), args.horizon)
    lines = [f"family: {len(family)} models", f"therapies: {len(pool)}",
             f"covers: {'true' if verdict else 'false'}"]
    _emit(args, lines, {"covers": verdict})
    return EXIT_OK


def cmd_simulate(args) -> int:
    bundle = _resolve_model(args.model)
    therapy = parse_therapy_spec(args.therapy or "")
    policy = AdversaryPolicy.parse(args.policy)
    lines = [f"model: {bundle.name}", f"policy: {policy}", f"seed: {args.seed}"]
    if bundle.timed:
        session = Session(bundle, policy, args.seed)
        rows = []
        for _ in range(args.steps):
            if session.halted:
                break
            state = session.snapshot()["state"]
            c = therapy.cocktail_for([state])
            out = session.step(c)
            rows.append((session.round - 1, state, cocktail_key(c), out["env_move"],
                         out["state"]))
        for r in rows:
            lines.append(f"round {r[0]:>3}  {r[1]:<14} give {{{r[2]}}}  "
                         f"{r[3]:<10} -> {r[4]}")
        final = session.snapshot()
        lines.append(f"final: {final['state']} after {final['round']} rounds, "
                     f"cost {_vec(session.cost)}")
        payload = {"final": final, "seed": args.seed}
    else:
        run = execute(bundle.cha, therapy, policy, args.steps, args.seed)
        lines.append("trace: " + " ".join(run.states))
        lines.append(f"final: {run.states[-1]}")
        payload = {"trace": list(run.states), "seed": args.seed}
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_translate(args) -> int:
    bundle = _resolve_model(args.model)
    menu = _parse_menu(bundle, args.menu)
    g = translate(bundle.timed_cha, menu)
    states = g.game_states()
    ctrl = g.controllable_edges()
    unctrl = g.uncontrollable_edges()
    lines = [f"game states: {len(states)}",
             f"controllable switch edges: {len(ctrl)}",
             f"uncontrollable progression edges: {len(unctrl)}"]
    payload = {
        "states": [[v, sorted(c)] for v, c in states],
        "controllable": [[[a, sorted(b)], [c, sorted(d)]] for (a, b), (c, d) in ctrl],
        "uncontrollable": [[[a, sorted(b)], i, [c, sorted(d)]]
                           for (a, b), i, (c, d) in unctrl],
    }
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_quotient(args) -> int:
    bundle = _resolve_model(args.model)
    menu = _parse_menu(bundle, args.menu)
    if bundle.timed:
        qg = quotient(discretize(translate(bundle.timed_cha, menu)),
                      bound=args.bound, full=args.full)
    else:
        qg = untimed_game(bundle.cha, menu)
    data = qg.to_json_dict()
    lines = [f"nodes: {len(qg.nodes)}", f"scale: {qg.scale}",
             f"initial: {qg.initial}"]
    counts = qg.region_count_by_state_cocktail()
    for (state, ck), count in sorted(counts.items()):
        lines.append(f"  regions[{state}, {{{ck}}}] = {count}")
    _emit(args, lines, data)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    bundle = _resolve_model(args.model)
    menu = _parse_menu(bundle, args.menu)
    qg = _build_game(bundle, menu, args.bound)
    try:
        result = solve_ctl(qg, args.goal)
    except FragmentUnsupportedError as exc:
        _emit(args, [f"unsupported: {exc}"], {"status": "unsupported", "error": str(exc)})
        return EXIT_UNSUPPORTED
    lines = [f"goal: {result.goal}", f"status: {result.status}",
             f"mode: {result.mode}",
             f"winning nodes: {result.winning_count}/{result.game_nodes}",
             f"iterations: {result.iterations}"]
    for note in result.notes:
        lines.append(f"note: {note}")
    payload = result.to_json_dict()
    if result.strategy is not None:
        lines.append("strategy:")
        lines.append(result.strategy.render_table())
        if args.out:
            Path(args.out).write_text(
                json.dumps(result.strategy.to_json_dict(), indent=2, sort_keys=True) + "\n")
            lines.append(f"strategy written to {args.out}")
        if args.pareto_horizon:
            from .synth import pareto_strategies
            front = pareto_strategies(qg, result, bundle.cost_model,
                                      args.pareto_horizon)
            lines.append(f"cost-Pareto front over winning strategies: {len(front)}")
            payload["pareto_front"] = []
            for i, (strategy, costs) in enumerate(front):
                drugs = ", ".join(sorted(strategy.drugs_administered())) or "-"
                lines.append(f"  option {i}: drugs {{{drugs}}}, "
                             f"{len(costs)} execution costs, "
                             f"min {_vec(costs[0])}, max {_vec(costs[-1])}")
                payload["pareto_front"].append({
                    "strategy": strategy.to_json_dict(),
                    "costs": [list(v) for v in costs],
                })
    _emit(args, lines, payload)
    if result.status == "realizable":
        return EXIT_OK
    if result.status == "strategy-found-but-unverified":
        return EXIT_UNVERIFIED
    return EXIT_UNREALIZABLE


def cmd_verify(args) -> int:
    bundle = _resolve_model(args.model)
    menu = _parse_menu(bundle, args.menu)
    qg = _build_game(bundle, menu, args.bound)
    strategy = Strategy.from_json_dict(json.loads(Path(args.strategy).read_text()))
    outcome = verify_strategy(qg, strategy, args.goal)
    lines = [f"goal: {args.goal}", f"verified: {'true' if outcome.ok else 'false'}"]
    payload = {"verified": outcome.ok}
    if outcome.counterexample:
        lines.append("counterexample:")
        for key in outcome.counterexample:
            lines.append(f"  {key}")
        payload["counterexample"] = [list(k) for k in outcome.counterexample]
    _emit(args, lines, payload)
    return EXIT_OK if outcome.ok else EXIT_DOMAIN


def cmd_serve(args) -> int:
    bundle = _resolve_model(args.model)
    strategy = None
    if args.strategy:
        strategy = Strategy.from_json_dict(json.loads(Path(args.strategy).read_text()))
    from .service import serve
    try:
        serve(bundle, strategy, args.host, args.port)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chakit",
                                     description="progression-automata toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("validate", cmd_validate, help="validate a model file")
    p.add_argument("model")

    p = add("check", cmd_check, help="model-check a CTL formula")
    p.add_argument("model")
    p.add_argument("formula")
    p.add_argument("--therapy", help="memoryless therapy, e.g. 'Avastin@SSG'")
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--bound", type=int, default=None, help="clock bound override")

    p = add("cost", cmd_cost, help="simulate and price one execution")
    p.add_argument("model")
    p.add_argument("--therapy", default="")
    p.add_argument("--policy", default="first-by-order")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--horizon", type=int, default=None)

    p = add("compare", cmd_compare, help="Pareto-compare two therapies")
    p.add_argument("model")
    p.add_argument("--therapy-a", required=True)
    p.add_argument("--therapy-b", required=True)
    p.add_argument("--horizon", type=int, default=6)

    p = add("candidates", cmd_candidates, help="non-dominated memoryless therapies")
    p.add_argument("model")
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--horizon", type=int, default=6)

    p = add("cover", cmd_cover, help="does a therapy set cover a model family?")
    p.add_argument("--family", nargs="+", required=True)
    p.add_argument("--therapy", action="append", required=True)
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--horizon", type=int, default=6)

    p = add("simulate", cmd_simulate, help="run the adversary simulation")
    p.add_argument("model")
    p.add_argument("--therapy", default="")
    p.add_argument("--policy", default="first-by-order")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=12)

    p = add("translate", cmd_translate, help="timed model -> hybrid game summary")
    p.add_argument("model")
    p.add_argument("--menu", action="append", default=[])

    p = add("quotient", cmd_quotient, help="finite region quotient of the game")
    p.add_argument("model")
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--full", action="store_true", help="enumerate all regions")

    p = add("synthesize", cmd_synthesize, help="synthesize a therapy strategy")
    p.add_argument("model")
    p.add_argument("--goal", required=True)
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--out", help="write the strategy JSON here")
    p.add_argument("--pareto-horizon", type=int, default=None,
                   help="also report the cost-Pareto front over winning strategies")

    p = add("verify", cmd_verify, help="verify a strategy against a goal")
    p.add_argument("model")
    p.add_argument("--strategy", required=True)
    p.add_argument("--goal", required=True)
    p.add_argument("--menu", action="append", default=[])
    p.add_argument("--bound", type=int, default=None)

    p = add("serve", cmd_serve, help="start the local explorer service")
    p.add_argument("model")
    p.add_argument("--strategy")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8642)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ModelValidationError as exc:
        print("validation failed:", file=sys.stderr)
        print(str(exc.report), file=sys.stderr)
        return EXIT_DOMAIN
    except ChaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except BrokenPipeError:
        # output consumer (head, less) went away; not an error
        try:
            sys.stdout.close()
        except OSError:
            pass
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
