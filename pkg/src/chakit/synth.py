"""Solving the quotient game: fixpoints over the controllable-predecessor
operator, strategy extraction, and post-hoc strategy verification.

Supported goal fragment: boolean combinations and nesting of AG, AF, AX
and A[.U.] (each with optional step bounds) over state-label predicates,
plus top-level EF goals. Universally quantified operators are solved as
games against the progression player; an EF goal asks for a therapy under
which reaching the target stays *possible* and is solved with a
cooperating environment, then confirmed by model checking. Every
synthesized strategy is re-checked on the closed system; a failed check
downgrades the result instead of being hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from . import kernels
from .ctl import (AF, AG, AU, AX, And, Atom, EF, EG, EU, EX, FalseF, Formula, Implies,
                  Kripke, Not, Or, TrueF, atoms_of, format_formula, model_check, parse_ctl)
from .errors import (ExplosionGuardError, FragmentUnsupportedError,
                     PartialStrategyError)
from .game import CONTROL, CTRL, DELAY, ENV, QuotientGame
from .untimed import Cocktail, cocktail_key

FORCED = "forced"
COOPERATIVE = "cooperative"


# ---------------------------------------------------------------------------
# the controllable-predecessor operator

def cpre(qg: QuotientGame, target, cooperative: bool = False) -> np.ndarray:
    """One game-predecessor step.

    Controller nodes need some move into the target; environment nodes
    every move (or, cooperatively, some move); delay nodes their unique
    successor.
    """
    target = np.asarray(target, dtype=np.uint8)
    out = np.zeros(len(qg.nodes), dtype=np.uint8)
    for v, row in enumerate(qg.edges):
        hits = [target[e.dst] for e in row]
        if qg.turn[v] == CTRL or cooperative:
            out[v] = 1 if any(hits) else 0
        else:
            out[v] = 1 if hits and all(hits) else 0
    return out


def _existential_vector(qg: QuotientGame, mode: str, attacker_env: bool = False):
    """Which owner quantifies existentially in the attractor kernel."""
    ex = np.zeros(len(qg.nodes), dtype=np.uint8)
    if mode == COOPERATIVE:
        ex[:] = 1
    elif attacker_env:
        ex[(qg.turn == ENV) | (qg.turn == DELAY)] = 1
    else:
        ex[qg.turn == CTRL] = 1
    return ex


def _attractor(qg: QuotientGame, target, existential):
    k = qg.to_kripke()
    fi, fx = k._csr("fwd")
    ri, rx = k._csr("rev")
    return kernels.attractor(fi, fx, ri, rx, existential, target)


def _bounded_attractor(qg: QuotientGame, target, bound: int, existential):
    """Layered attractor where weight-1 edges spend one unit of the budget.

    Returns (win, join_order): join_order increases along the computation
    so a choice with a smaller order always makes progress.
    """
    n = len(qg.nodes)
    rows = qg.edges
    weights = [tuple(qg.step_weight(e.kind) for e in row) for row in rows]
    preds0 = [[] for _ in range(n)]
    cnt0 = [0] * n
    for v, row in enumerate(rows):
        for e, w in zip(row, weights[v]):
            if w == 0:
                preds0[e.dst].append(v)
                cnt0[v] += 1
    order = np.full(n, -1, dtype=np.int64)
    counter = 0
    prev = np.zeros(n, dtype=np.uint8)
    cur = np.zeros(n, dtype=np.uint8)
    for _t in range(bound + 1):
        cur = np.asarray(target, dtype=np.uint8).copy()
        need = cnt0.copy()
        queue = []
        for v in range(n):
            if cur[v]:
                queue.append(v)
                continue
            one_hits = [prev[e.dst] for e, w in zip(rows[v], weights[v]) if w == 1]
            if existential[v]:
                if any(one_hits):
                    cur[v] = 1
                    queue.append(v)
            else:
                if all(one_hits) and need[v] == 0 and rows[v]:
                    cur[v] = 1
                    queue.append(v)
            if not existential[v] and one_hits and not all(one_hits):
                need[v] = -10 ** 9  # a 1-edge already escapes; can never join
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            if order[v] < 0:
                order[v] = counter
                counter += 1
            for p in preds0[v]:
                if cur[p]:
                    continue
                if existential[p]:
                    cur[p] = 1
                    queue.append(p)
                else:
                    need[p] -= 1
                    if need[p] == 0:
                        one_hits = [prev[e.dst] for e, w in zip(rows[p], weights[p]) if w == 1]
                        if all(one_hits):
                            cur[p] = 1
                            queue.append(p)
        prev = cur
    return cur, order


# ---------------------------------------------------------------------------
# strategies and results

@dataclass(frozen=True)
class Strategy:
    """Memoryless map from controller nodes of the quotient to cocktails.

    Keys are semantic (state, active-cocktail key, region codes), so a
    strategy can be saved, reloaded and applied to live sessions.
    """

    entries: tuple  # ((state, cocktail_key, region_codes), cocktail) sorted
    scale: int
    bounds: tuple   # ((clock, bound), ...) unscaled
    clocks: tuple
    goal: str = ""

    def table(self) -> dict:
        return dict(self.entries)

    def size(self) -> int:
        return len(self.entries)

    def node_key_for(self, state: str, active: Cocktail, valuation=None):
        codes = []
        bounds = dict(self.bounds)
        if valuation:
            for clock in self.clocks:
                value = Fraction(valuation[clock]) * self.scale
                cap = bounds[clock] * self.scale
                value = min(value, Fraction(cap))
                import math as _math
                lo = _math.floor(value)
                hi = _math.ceil(value)
                codes.append((lo, hi))
        return (state, cocktail_key(active), tuple(codes))

    def recommend(self, state: str, active: Cocktail, valuation=None) -> Optional[Cocktail]:
        return self.table().get(self.node_key_for(state, active, valuation))

    def drugs_administered(self) -> frozenset:
        out = set()
        for _key, c in self.entries:
            out |= c
        return frozenset(out)

    def to_json_dict(self) -> dict:
        return {
            "goal": self.goal,
            "scale": self.scale,
            "clocks": list(self.clocks),
            "bounds": {c: b for c, b in self.bounds},
            "entries": [
                {"state": s, "active": a, "region": [list(x) for x in codes],
                 "cocktail": sorted(c)}
                for (s, a, codes), c in self.entries
            ],
        }

    @staticmethod
    def from_json_dict(data: Mapping) -> "Strategy":
        entries = tuple(sorted(
            ((e["state"], e["active"], tuple(tuple(x) for x in e["region"])),
             frozenset(e["cocktail"]))
            for e in data["entries"]))
        return Strategy(entries, int(data["scale"]),
                        tuple(sorted(data["bounds"].items())),
                        tuple(data["clocks"]), data.get("goal", ""))

    def render_table(self) -> str:
        lines = ["state            active           region          cocktail",
                 "-" * 64]
        for (s, a, codes), c in self.entries:
            region = " ".join(f"{lo}" if lo == hi else f"({lo},{hi})" for lo, hi in codes)
            lines.append(f"{s:<16} {a or '-':<16} {region or '-':<15} "
                         f"{cocktail_key(c) or '-'}")
        return "\n".join(lines)


def _strategy_from_choices(qg: QuotientGame, win, choices: Mapping, goal: str) -> Strategy:
    entries = []
    for v in np.flatnonzero(win):
        v = int(v)
        if qg.turn[v] != CTRL:
            continue
        edge_idx = choices.get(v)
        if edge_idx is None:
            continue
        e = qg.edges[v][edge_idx]
        state, ckey, region, _turn = qg.nodes[v]
        entries.append(((qg.states[state], cocktail_key(qg.menu[ckey]), region),
                        qg.menu[e.payload]))
    bounds = tuple(sorted(qg.bounds.items()))
    return Strategy(tuple(sorted(entries)), qg.scale, bounds, qg.clocks, goal)


@dataclass
class SynthesisResult:
    status: str  # realizable | unrealizable | strategy-found-but-unverified
    goal: str
    winning_count: int
    game_nodes: int
    iterations: int
    strategy: Optional[Strategy] = None
    mode: str = FORCED
    notes: tuple = ()
    counterexample: Optional[tuple] = None
    winning: Optional[np.ndarray] = None
    rank: Optional[np.ndarray] = None

    @property
    def realizable(self) -> bool:
        return self.status == "realizable"

    def to_json_dict(self) -> dict:
        out = {
            "status": self.status,
            "goal": self.goal,
            "mode": self.mode,
            "winning_nodes": self.winning_count,
            "game_nodes": self.game_nodes,
            "iterations": self.iterations,
            "notes": list(self.notes),
        }
        if self.strategy is not None:
            out["strategy"] = self.strategy.to_json_dict()
        if self.counterexample is not None:
            out["counterexample"] = [list(k) for k in self.counterexample]
        return out


def _goal_mask(qg: QuotientGame, atom: str):
    if atom in qg.atom_universe:
        return qg.label_mask(atom), ()
    return np.zeros(len(qg.nodes), dtype=np.uint8), (
        f"atom {atom!r} labels no state; treated as false everywhere",)


def _ctrl_choices_staying(qg: QuotientGame, win) -> dict:
    """Lowest-index move that stays in the winning set (safety tie-break:
    the canonical menu starts with the empty cocktail)."""
    choices = {}
    for v in np.flatnonzero(win):
        v = int(v)
        if qg.turn[v] != CTRL:
            continue
        for i, e in enumerate(qg.edges[v]):
            if win[e.dst]:
                choices[v] = i
                break
    return choices


def _ctrl_choices_progress(qg: QuotientGame, win, rank) -> dict:
    """Lowest-index move that decreases the attractor rank."""
    choices = {}
    for v in np.flatnonzero(win):
        v = int(v)
        if qg.turn[v] != CTRL:
            continue
        best = None
        for i, e in enumerate(qg.edges[v]):
            if win[e.dst] and rank[e.dst] < rank[v]:
                best = i
                break
        if best is None:
            for i, e in enumerate(qg.edges[v]):
                if win[e.dst]:
                    best = i
                    break
        choices[v] = best if best is not None else 0
    return choices


def solve_safety(qg: QuotientGame, bad: str, verify: bool = True) -> SynthesisResult:
    """Greatest fixpoint: keep the bad label unreachable forever."""
    bad_mask, notes = _goal_mask(qg, bad)
    existential = _existential_vector(qg, FORCED, attacker_env=True)
    attr, rank = _attractor(qg, bad_mask, existential)
    win = (1 - attr).astype(np.uint8)
    iterations = int(rank.max()) + 1 if rank.max() >= 0 else 0
    assert iterations <= len(qg.nodes)
    goal = f"AG !{bad}"
    if not win[qg.initial]:
        return SynthesisResult("unrealizable", goal, int(win.sum()), len(qg.nodes),
                               iterations, None, FORCED, notes, winning=win)
    choices = _ctrl_choices_staying(qg, win)
    strategy = _strategy_from_choices(qg, win, choices, goal)
    result = SynthesisResult("realizable", goal, int(win.sum()), len(qg.nodes),
                             iterations, strategy, FORCED, notes, winning=win)
    if verify:
        _post_verify(qg, result, parse_ctl(goal))
    return result


def solve_reachability(qg: QuotientGame, goal_atom: str, bound: Optional[int] = None,
                       mode: str = FORCED, verify: bool = True) -> SynthesisResult:
    """Least fixpoint (attractor) toward the goal label.

    mode='forced' wins against an adversarial progression player;
    mode='cooperative' asks for a therapy that keeps the goal reachable
    (checked as EF on the closed system).
    """
    goal_mask, notes = _goal_mask(qg, goal_atom)
    existential = _existential_vector(qg, mode)
    if bound is None:
        win, rank = _attractor(qg, goal_mask, existential)
    else:
        win, rank = _bounded_attractor(qg, goal_mask, bound, existential)
    iterations = int(rank.max()) + 1 if rank.max() >= 0 else 0
    assert iterations <= len(qg.nodes) * (1 if bound is None else bound + 1)
    suffix = f"<={bound}" if bound is not None else ""
    goal = (f"AF{suffix} {goal_atom}" if mode == FORCED else f"EF{suffix} {goal_atom}")
    if not win[qg.initial]:
        return SynthesisResult("unrealizable", goal, int(win.sum()), len(qg.nodes),
                               iterations, None, mode, notes, winning=win)
    choices = _ctrl_choices_progress(qg, win, rank)
    strategy = _strategy_from_choices(qg, win, choices, goal)
    result = SynthesisResult("realizable", goal, int(win.sum()), len(qg.nodes),
                             iterations, strategy, mode, notes, winning=win,
                             rank=rank)
    if verify:
        _post_verify(qg, result, parse_ctl(goal))
    return result


# ---------------------------------------------------------------------------
# the CTL fragment

def _is_state_predicate(f: Formula) -> bool:
    if isinstance(f, (Atom, TrueF, FalseF)):
        return True
    if isinstance(f, Not):
        return _is_state_predicate(f.sub)
    if isinstance(f, (And, Or, Implies)):
        return _is_state_predicate(f.lhs) and _is_state_predicate(f.rhs)
    return False


def _predicate_mask(qg: QuotientGame, f: Formula) -> np.ndarray:
    n = len(qg.nodes)
    if isinstance(f, Atom):
        return _goal_mask(qg, f.name)[0]
    if isinstance(f, TrueF):
        return np.ones(n, dtype=np.uint8)
    if isinstance(f, FalseF):
        return np.zeros(n, dtype=np.uint8)
    if isinstance(f, Not):
        return (1 - _predicate_mask(qg, f.sub)).astype(np.uint8)
    if isinstance(f, And):
        return _predicate_mask(qg, f.lhs) & _predicate_mask(qg, f.rhs)
    if isinstance(f, Or):
        return _predicate_mask(qg, f.lhs) | _predicate_mask(qg, f.rhs)
    if isinstance(f, Implies):
        return ((1 - _predicate_mask(qg, f.lhs)) | _predicate_mask(qg, f.rhs)).astype(np.uint8)
    raise FragmentUnsupportedError(format_formula(f))


def _merge_choices(primary: Mapping, secondary: Mapping) -> dict:
    out = dict(secondary)
    out.update(primary)
    return out


def _eval_game(qg: QuotientGame, f: Formula):
    """Returns (winning mask, controller choices, iterations)."""
    if _is_state_predicate(f):
        return _predicate_mask(qg, f), {}, 0
    if isinstance(f, Implies) and _is_state_predicate(f.lhs):
        return _eval_game(qg, Or(Not(f.lhs), f.rhs))
    if isinstance(f, (EX, EF, EG, EU)):
        # E-quantified subformulas are assumed during synthesis and only
        # checked on the closed system afterwards
        return np.ones(len(qg.nodes), dtype=np.uint8), {}, 0
    if isinstance(f, And):
        wl, cl, il = _eval_game(qg, f.lhs)
        wr, cr, ir = _eval_game(qg, f.rhs)
        win = wl & wr
        merged = {}
        for v in np.flatnonzero(win):
            v = int(v)
            if qg.turn[v] != CTRL:
                continue
            pick = cl.get(v, cr.get(v))
            if pick is not None and win[qg.edges[v][pick].dst]:
                merged[v] = pick
            else:
                alt = cr.get(v, cl.get(v))
                if alt is not None:
                    merged[v] = alt
        return win, merged, max(il, ir)
    if isinstance(f, Or):
        wl, cl, il = _eval_game(qg, f.lhs)
        wr, cr, ir = _eval_game(qg, f.rhs)
        return (wl | wr).astype(np.uint8), _merge_choices(cl, cr), max(il, ir)
    if isinstance(f, AX):
        wsub, csub, it = _eval_game(qg, f.sub)
        win = cpre(qg, wsub)
        choices = {}
        for v in np.flatnonzero(win):
            v = int(v)
            if qg.turn[v] != CTRL:
                continue
            for i, e in enumerate(qg.edges[v]):
                if wsub[e.dst]:
                    choices[v] = i
                    break
        return win, _merge_choices(choices, csub), it + 1
    if isinstance(f, AG):
        wsub, csub, it = _eval_game(qg, f.sub)
        if f.bound is None:
            existential = _existential_vector(qg, FORCED, attacker_env=True)
            attr, rank = _attractor(qg, (1 - wsub).astype(np.uint8), existential)
            win = (1 - attr).astype(np.uint8)
            iters = it + (int(rank.max()) + 1 if rank.max() >= 0 else 0)
        else:
            # stay inside wsub while the budget lasts: complement of the
            # environment's bounded attractor to the complement
            existential = _existential_vector(qg, FORCED, attacker_env=True)
            reach_bad, order = _bounded_attractor(qg, (1 - wsub).astype(np.uint8),
                                                  f.bound, existential)
            win = (1 - reach_bad).astype(np.uint8)
            iters = it + f.bound + 1
        staying = _ctrl_choices_staying(qg, win)
        merged = {}
        for v, pick in staying.items():
            inner = csub.get(v)
            if inner is not None and win[qg.edges[v][inner].dst]:
                merged[v] = inner
            else:
                merged[v] = pick
        return win, merged, iters
    if isinstance(f, AF):
        wsub, csub, it = _eval_game(qg, f.sub)
        existential = _existential_vector(qg, FORCED)
        if f.bound is None:
            win, rank = _attractor(qg, wsub, existential)
        else:
            win, rank = _bounded_attractor(qg, wsub, f.bound, existential)
        choices = _ctrl_choices_progress(qg, win, rank)
        merged = dict(choices)
        for v in np.flatnonzero(win & wsub):
            v = int(v)
            if qg.turn[v] == CTRL and v in csub:
                merged[v] = csub[v]
        iters = it + (int(rank.max()) + 1 if rank.max() >= 0 else 0)
        return win, merged, iters
    if isinstance(f, AU):
        wl, cl, il = _eval_game(qg, f.lhs)
        wr, cr, ir = _eval_game(qg, f.rhs)
        win, order = _constrained_attractor(qg, wr, wl, f.bound)
        choices = _ctrl_choices_progress(qg, win, order)
        merged = dict(choices)
        for v in np.flatnonzero(win & wr):
            v = int(v)
            if qg.turn[v] == CTRL and v in cr:
                merged[v] = cr[v]
        return win, merged, il + ir + 1
    raise FragmentUnsupportedError(format_formula(f))


def _constrained_attractor(qg: QuotientGame, target, constraint, bound=None):
    """Least fixpoint Z = target | (constraint & cpre(Z)), optionally layered."""
    n = len(qg.nodes)
    existential = _existential_vector(qg, FORCED)
    if bound is not None:
        masked_target = np.asarray(target, dtype=np.uint8)
        win, order = _bounded_attractor_constrained(qg, masked_target, constraint,
                                                    bound, existential)
        return win, order
    win = np.asarray(target, dtype=np.uint8).copy()
    order = np.full(n, -1, dtype=np.int64)
    for v in np.flatnonzero(win):
        order[v] = 0
    counter = 1
    changed = True
    while changed:
        changed = False
        step = cpre(qg, win)
        new = (constraint & step & (1 - win)).astype(np.uint8)
        for v in np.flatnonzero(new):
            win[int(v)] = 1
            order[int(v)] = counter
            counter += 1
            changed = True
    return win, order


def _bounded_attractor_constrained(qg, target, constraint, bound, existential):
    prev = np.zeros(len(qg.nodes), dtype=np.uint8)
    order = np.full(len(qg.nodes), -1, dtype=np.int64)
    counter = 0
    cur = prev
    for _t in range(bound + 1):
        cur = np.asarray(target, dtype=np.uint8).copy()
        stable = False
        while not stable:
            step = _cpre_weighted(qg, cur, prev)
            new = (target | (constraint & step)).astype(np.uint8)
            stable = bool((new == cur).all())
            for v in np.flatnonzero(new & (1 - cur)):
                if order[int(v)] < 0:
                    order[int(v)] = counter
                    counter += 1
            cur = new
        prev = cur
    for v in np.flatnonzero(cur):
        if order[int(v)] < 0:
            order[int(v)] = counter
            counter += 1
    return cur, order


def _cpre_weighted(qg: QuotientGame, same_layer, prev_layer) -> np.ndarray:
    out = np.zeros(len(qg.nodes), dtype=np.uint8)
    for v, row in enumerate(qg.edges):
        hits = []
        for e in row:
            w = qg.step_weight(e.kind)
            hits.append(same_layer[e.dst] if w == 0 else prev_layer[e.dst])
        if qg.turn[v] == CTRL:
            out[v] = 1 if any(hits) else 0
        else:
            out[v] = 1 if hits and all(hits) else 0
    return out


def _fragment_offender(g: Formula):
    """None when g lies in the synthesizable fragment, else the offending
    subformula: nesting of AG/AF/AX/A[.U.] and boolean combinations over
    state predicates, with E-subformulas allowed (verified post hoc) and
    negation only over predicates."""
    if _is_state_predicate(g):
        return None
    if isinstance(g, (EX, EF, EG)):
        return _fragment_offender(g.sub)
    if isinstance(g, EU):
        return _fragment_offender(g.lhs) or _fragment_offender(g.rhs)
    if isinstance(g, (And, Or)):
        return _fragment_offender(g.lhs) or _fragment_offender(g.rhs)
    if isinstance(g, Implies):
        if _is_state_predicate(g.lhs):
            return _fragment_offender(g.rhs)
        return g
    if isinstance(g, (AG, AF, AX)):
        return _fragment_offender(g.sub)
    if isinstance(g, AU):
        return _fragment_offender(g.lhs) or _fragment_offender(g.rhs)
    return g


def _classify_top(f: Formula):
    """'game' for the A-fragment, 'ef' for a top-level EF, else error."""
    if isinstance(f, EF) and _is_state_predicate(f.sub):
        return "ef"
    offender = _fragment_offender(f)
    if offender is not None:
        raise FragmentUnsupportedError(format_formula(offender))
    return "game"


def solve_ctl(qg: QuotientGame, f, verify: bool = True) -> SynthesisResult:
    """Synthesize a strategy for a goal in the supported fragment."""
    if isinstance(f, str):
        f = parse_ctl(f)
    goal_text = format_formula(f)
    kind = _classify_top(f)
    if kind == "ef":
        atom_like = f.sub
        if isinstance(atom_like, Atom):
            return solve_reachability(qg, atom_like.name, f.bound, COOPERATIVE,
                                      verify=verify)
        # general predicate target: run the cooperative attractor directly
        target = _predicate_mask(qg, atom_like)
        existential = _existential_vector(qg, COOPERATIVE)
        if f.bound is None:
            win, rank = _attractor(qg, target, existential)
        else:
            win, rank = _bounded_attractor(qg, target, f.bound, existential)
        iterations = int(rank.max()) + 1 if rank.max() >= 0 else 0
        if not win[qg.initial]:
            return SynthesisResult("unrealizable", goal_text, int(win.sum()),
                                   len(qg.nodes), iterations, None, COOPERATIVE,
                                   winning=win)
        strategy = _strategy_from_choices(qg, win, _ctrl_choices_progress(qg, win, rank),
                                          goal_text)
        result = SynthesisResult("realizable", goal_text, int(win.sum()),
                                 len(qg.nodes), iterations, strategy, COOPERATIVE,
                                 winning=win)
        if verify:
            _post_verify(qg, result, f)
        return result

    win, choices, iterations = _eval_game(qg, f)
    assert iterations <= 2 * len(qg.nodes) + 64
    if not win[qg.initial]:
        return SynthesisResult("unrealizable", goal_text, int(win.sum()),
                               len(qg.nodes), iterations, None, FORCED, winning=win)
    for v in np.flatnonzero(win):
        v = int(v)
        if qg.turn[v] == CTRL and v not in choices:
            for i, e in enumerate(qg.edges[v]):
                if win[e.dst]:
                    choices[v] = i
                    break
            else:
                choices[v] = 0
    strategy = _strategy_from_choices(qg, win, choices, goal_text)
    result = SynthesisResult("realizable", goal_text, int(win.sum()), len(qg.nodes),
                             iterations, strategy, FORCED, winning=win)
    if verify:
        _post_verify(qg, result, f)
    return result


# ---------------------------------------------------------------------------
# closing the game under a strategy, verification

def close_game(qg: QuotientGame, strategy: Strategy, on_undefined: str = "keep") -> Kripke:
    """Kripke over the nodes reachable when the controller follows the
    strategy and the environment keeps all its options.

    Environment deviations can leave the strategy's winning region; at
    controller nodes without an entry the closure keeps the active
    cocktail (on_undefined='keep') or fails (on_undefined='error')."""
    table = strategy.table()

    def ctrl_edge(v: int):
        state, ckey, region, _turn = qg.nodes[v]
        choice = table.get((qg.states[state], cocktail_key(qg.menu[ckey]), region))
        if choice is None:
            if on_undefined == "keep":
                choice = qg.menu[ckey]
            else:
                raise PartialStrategyError(f"strategy undefined at {qg.node_key(v)}")
        for i, e in enumerate(qg.edges[v]):
            if e.kind == CONTROL and qg.menu[e.payload] == choice:
                return i
        raise PartialStrategyError(f"strategy cocktail not in menu at {qg.node_key(v)}")

    index = {qg.initial: 0}
    order = [qg.initial]
    adj = []
    weights = []
    i = 0
    while i < len(order):
        v = order[i]
        if qg.turn[v] == CTRL:
            picks = [qg.edges[v][ctrl_edge(v)]]
        else:
            picks = list(qg.edges[v])
        row = []
        wrow = []
        for e in picks:
            if e.dst not in index:
                index[e.dst] = len(order)
                order.append(e.dst)
            row.append(index[e.dst])
            wrow.append(qg.step_weight(e.kind))
        adj.append(row)
        weights.append(wrow)
        i += 1
    keys = tuple(qg.node_key(v) for v in order)
    labels = [qg.labels[v] for v in order]
    return Kripke(keys, labels, adj, weights, 0, extra_atoms=qg.atom_universe)


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    counterexample: Optional[tuple] = None  # node keys


def verify_strategy(qg: QuotientGame, strategy: Strategy, f) -> VerifyResult:
    """Model-check the goal on the closed system; on failure return a trace
    (path to a violation for safety goals, goal-avoiding lasso for
    reachability goals, otherwise none)."""
    if isinstance(f, str):
        f = parse_ctl(f)
    closed = close_game(qg, strategy)
    closed.atom_universe = frozenset(closed.atom_universe | atoms_of(f))
    verdict = model_check(closed, f)
    if verdict.verdict:
        return VerifyResult(True)
    return VerifyResult(False, _counterexample(closed, f))


def _counterexample(closed: Kripke, f: Formula) -> Optional[tuple]:
    # AG p: a path to some !p node
    if isinstance(f, AG) and f.bound is None:
        bad = 1 - _sat_on(closed, f.sub)
        path = _bfs_path(closed, bad)
        return tuple(closed.keys[v] for v in path) if path else None
    # AF p / EF p: a reachable lasso avoiding p
    if isinstance(f, (AF, EF)) and f.bound is None:
        good = _sat_on(closed, f.sub)
        return _goal_free_lasso(closed, good)
    return None


def _sat_on(closed: Kripke, f: Formula):
    from .ctl import _Labeller
    return _Labeller(closed).sat(f)


def _bfs_path(closed: Kripke, targets) -> Optional[list]:
    from collections import deque
    parent = {closed.initial: None}
    q = deque([closed.initial])
    while q:
        v = q.popleft()
        if targets[v]:
            path = []
            while v is not None:
                path.append(v)
                v = parent[v]
            return path[::-1]
        for m in closed.edges[v]:
            if m not in parent:
                parent[m] = v
                q.append(m)
    return None


def _goal_free_lasso(closed: Kripke, good) -> Optional[tuple]:
    n = len(closed.keys)
    color = [0] * n  # 0 unseen, 1 on stack, 2 done

    def dfs(v, path):
        color[v] = 1
        path.append(v)
        for m in closed.edges[v]:
            if good[m]:
                continue
            if color[m] == 1:
                knot = path.index(m)
                return path[:knot] + path[knot:] + [m]
            if color[m] == 0:
                out = dfs(m, path)
                if out is not None:
                    return out
        color[v] = 2
        path.pop()
        return None

    if good[closed.initial]:
        return None
    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, n + 100))
    try:
        trace = dfs(closed.initial, [])
    finally:
        sys.setrecursionlimit(old)
    return tuple(closed.keys[v] for v in trace) if trace else None


def _post_verify(qg: QuotientGame, result: SynthesisResult, f: Formula):
    check = verify_strategy(qg, result.strategy, f)
    if not check.ok:
        result.status = "strategy-found-but-unverified"
        result.counterexample = check.counterexample


# ---------------------------------------------------------------------------
# cost-aware selection among winning strategies

def _closed_cost_set(qg: QuotientGame, strategy: Strategy, cost_model,
                     horizon: int, cap: int = 50_000) -> tuple:
    """Costs of all executions of the closed game up to `horizon` time steps.

    Timed games integrate exp(-d t) over each unit delay at the delayed
    node's (state, cocktail); untimed games sum delta^t at each progression.
    """
    import math

    table = strategy.table()
    d = cost_model.discount_timed
    delta = cost_model.discount_untimed

    def ctrl_pick(v):
        state, ckey, region, _ = qg.nodes[v]
        choice = table.get((qg.states[state], cocktail_key(qg.menu[ckey]), region))
        if choice is None:
            choice = qg.menu[ckey]
        for e in qg.edges[v]:
            if e.kind == CONTROL and qg.menu[e.payload] == choice:
                return e
        return qg.edges[v][0]

    def position_cost(v) -> tuple:
        state, ckey, _region, _ = qg.nodes[v]
        sc = cost_model.state_cost(qg.states[state])
        cc = cost_model.cocktail_cost(qg.menu[ckey])
        return tuple(a + b for a, b in zip(sc, cc))

    out = set()
    visited_budget = [0]

    def weight(t: int) -> float:
        if qg.sampled:
            return (math.exp(-d * t) - math.exp(-d * (t + 1))) / d
        return delta ** t

    def walk(v: int, t: int, acc: tuple):
        visited_budget[0] += 1
        if visited_budget[0] > cap:
            raise ExplosionGuardError("closed-game cost enumeration exceeded cap")
        if t >= horizon:
            out.add(acc)
            return
        if qg.turn[v] == CTRL:
            walk(ctrl_pick(v).dst, t, acc)
            return
        for e in qg.edges[v]:
            w = qg.step_weight(e.kind)
            if w == 0:
                walk(e.dst, t, acc)
            else:
                step = _vec_add(acc, _vec_scale(position_cost(v), weight(t)))
                walk(e.dst, t + 1, step)

    walk(qg.initial, 0, (0.0,) * cost_model.dimension)
    return tuple(sorted(out))


def _vec_add(x, y):
    return tuple(a + b for a, b in zip(x, y))


def _vec_scale(x, k):
    return tuple(a * k for a in x)


def pareto_strategies(qg: QuotientGame, result: SynthesisResult, cost_model,
                      horizon: int, cap: int = 256) -> tuple:
    """Pareto front over winning-strategy variants of a realizable result.

    Variants keep the winning set: any staying move per controller node for
    safety goals, any rank-decreasing move for reachability. Only runs when
    the variant count stays under `cap`; each variant is scored by the cost
    set of its closed system over `horizon` time steps and the non-dominated
    ones are returned as (strategy, cost set) pairs.
    """
    import itertools

    from .cost import therapy_dominates

    if not result.realizable or result.winning is None:
        return ()
    win = result.winning
    reachable = _reachable_winning_ctrl(qg, win)
    options = {}
    for v in reachable:
        if result.rank is not None:
            good = [i for i, e in enumerate(qg.edges[v])
                    if win[e.dst] and result.rank[e.dst] < result.rank[v]]
            if not good:
                good = [i for i, e in enumerate(qg.edges[v]) if win[e.dst]]
        else:
            good = [i for i, e in enumerate(qg.edges[v]) if win[e.dst]]
        options[v] = good or [0]
    count = 1
    for good in options.values():
        count *= len(good)
        if count > cap:
            return ((result.strategy,
                     _closed_cost_set(qg, result.strategy, cost_model, horizon)),)
    variants = []
    nodes = sorted(options)
    for combo in itertools.product(*(options[v] for v in nodes)):
        choices = dict(zip(nodes, combo))
        strategy = _strategy_from_choices(qg, win, choices, result.goal)
        variants.append((strategy, _closed_cost_set(qg, strategy, cost_model,
                                                    horizon)))
    zero_radii = {}

    def radii(values):
        if values not in zero_radii:
            zero_radii[values] = [(0.0,) * cost_model.dimension] * len(values)
        return zero_radii[values]

    front = []
    for i, (strategy, costs) in enumerate(variants):
        dominated = False
        for j, (_other, other_costs) in enumerate(variants):
            if i != j and therapy_dominates((list(other_costs), radii(other_costs)),
                                            (list(costs), radii(costs))):
                dominated = True
                break
        if not dominated:
            front.append((strategy, costs))
    return tuple(front)


def _reachable_winning_ctrl(qg: QuotientGame, win) -> list:
    """Controller nodes reachable inside the winning region."""
    seen = {qg.initial}
    stack = [qg.initial]
    out = []
    while stack:
        v = stack.pop()
        if qg.turn[v] == CTRL:
            out.append(v)
            nxt = [e.dst for e in qg.edges[v] if win[e.dst]]
        else:
            nxt = [e.dst for e in qg.edges[v]]
        for m in nxt:
            if m not in seen and win[m]:
                seen.add(m)
                stack.append(m)
    return sorted(out)
