"""Shared test fixtures: random model generators and independent oracles.

Oracle code here deliberately avoids the package's kernels and region
machinery: brute-force enumeration, dict-based BFS/DFS, and exact-rational
semantics built only from the timed primitives.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from chakit.ctl import Kripke
from chakit.timed import (ClockConstraint, TimedCha, TimedEdge,
                          effective_clock_bound, rate_vector)
from chakit.untimed import Cha, Edge


# ---------------------------------------------------------------------------
# random untimed models

def random_untimed_cha(rng: random.Random, max_states=5, max_drugs=3,
                       extra_labels=("p", "q")) -> Cha:
    n = rng.randint(2, max_states)
    states = [f"S{i}" for i in range(n)]
    drugs = [f"d{i}" for i in range(rng.randint(1, max_drugs))]
    edges = []
    for s in states:
        for _ in range(rng.randint(1, 3)):
            target = states[rng.randrange(n)]
            inhibitors = frozenset(d for d in drugs if rng.random() < 0.4)
            edges.append(Edge(s, inhibitors, target))
        edges.append(Edge(s, frozenset(), states[rng.randrange(n)]))  # totality
    labels = {s: {s} | {l for l in extra_labels if rng.random() < 0.3} for s in states}
    return Cha(tuple(states), tuple(edges), states[0], tuple(drugs), labels)


# ---------------------------------------------------------------------------
# random timed models

def random_timed_cha(rng: random.Random, max_states=5, max_clocks=2, m=3,
                     denominators=(1, 2, 4), max_drugs=2,
                     extra_labels=("p", "q")) -> TimedCha:
    n = rng.randint(2, max_states)
    states = [f"S{i}" for i in range(n)]
    clocks = [f"x{i}" for i in range(rng.randint(1, max_clocks))]
    drugs = [f"d{i}" for i in range(rng.randint(1, max_drugs))]
    edges = []
    for s in states:
        for _ in range(rng.randint(1, 2)):
            target = states[rng.randrange(n)]
            atoms = tuple((c, rng.randint(0, m)) for c in clocks if rng.random() < 0.6)
            edges.append(TimedEdge(s, ClockConstraint(atoms), target))
    invariants = {}
    for s in states:
        for c in clocks:
            if rng.random() < 0.35:
                limit = rng.randint(1, m - 1) if m > 1 else 1
                invariants[(s, c)] = limit
                # guarantee the invariant-exit rule syntactically
                edges.append(TimedEdge(
                    s, ClockConstraint(((c, rng.randint(0, limit)),)),
                    states[rng.randrange(n)]))
    rates = {}
    for s in states:
        for d in drugs:
            for c in clocks:
                if rng.random() < 0.5:
                    num = rng.randint(0, 3)
                    den = rng.choice(denominators)
                    rates[(s, d, c)] = Fraction(num, den)
    labels = {s: {s} | {l for l in extra_labels if rng.random() < 0.3} for s in states}
    return TimedCha(tuple(states), tuple(clocks), tuple(edges), states[0],
                    tuple(drugs), invariants, rates, labels,
                    {c: m for c in clocks})


# ---------------------------------------------------------------------------
# independent concrete sampled-game semantics (exact rationals, no regions)

CTRL, ENV, DELAY = 0, 1, 2


def concrete_sampled_kripke(tc: TimedCha, menu, bound=None) -> Kripke:
    """The sampled game over exact valuations, built from timed primitives.

    Mirrors the documented round semantics: controller picks a cocktail,
    the environment fires an enabled edge or passes when the unit delay
    respects the invariants, then the unit delay runs; clock values
    saturate at the per-clock bound. Frozen configurations self-loop with
    a time-weighted edge.
    """
    bounds = effective_clock_bound(tc)
    if isinstance(bound, int):
        bounds = {c: max(bound, bounds[c]) for c in tc.clocks}
    caps = {c: Fraction(bounds[c]) for c in tc.clocks}
    menu = tuple(menu)

    def delay_legal(state, ci, values):
        rates = rate_vector(tc, state, menu[ci])
        for clock, value, r in zip(tc.clocks, values, rates):
            limit = tc.invariant(state, clock)
            if limit is not None and value + r > limit:
                return False
        return True

    def advanced(state, ci, values):
        rates = rate_vector(tc, state, menu[ci])
        return tuple(min(v + r, caps[c]) for c, v, r in zip(tc.clocks, values, rates))

    def enabled(state, values):
        val = dict(zip(tc.clocks, values))
        return [i for i in tc.outgoing(state) if tc.edges[i].guard.satisfied_by(val)]

    zero = tuple(Fraction(0) for _ in tc.clocks)
    initial = (tc.initial, 0, zero, CTRL)

    def moves(node):
        state, ci, values, turn = node
        if turn == CTRL:
            return [((state, c2, values, ENV), 0) for c2 in range(len(menu))]
        if turn == ENV:
            out = [((tc.edges[ei].target, ci, zero, DELAY), 0)
                   for ei in enabled(state, values)]
            if delay_legal(state, ci, values):
                out.append(((state, ci, values, DELAY), 0))
            if not out:
                out.append((node, 1))  # frozen
            return out
        if delay_legal(state, ci, values):
            return [((state, ci, advanced(state, ci, values), CTRL), 1)]
        return [(node, 1)]  # frozen

    index = {initial: 0}
    order = [initial]
    adjacency = []
    weights = []
    i = 0
    while i < len(order):
        row, wrow = [], []
        for dst, w in moves(order[i]):
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
            row.append(index[dst])
            wrow.append(w)
        adjacency.append(row)
        weights.append(wrow)
        i += 1
    labels = [tc.labels[node[0]] for node in order]
    return Kripke(tuple(range(len(order))), labels, adjacency, weights, 0,
                  extra_atoms=tc.label_universe())


# ---------------------------------------------------------------------------
# random CTL formulas over a label universe

def random_formula(rng: random.Random, atoms, depth=3, allow_bounds=True):
    from chakit.ctl import (AF, AG, AU, AX, And, Atom, EF, EG, EU, EX, Implies,
                            Not, Or)
    if depth == 0 or rng.random() < 0.25:
        return Atom(rng.choice(sorted(atoms)))
    bound = rng.randint(0, 4) if (allow_bounds and rng.random() < 0.4) else None
    kind = rng.randrange(12)
    sub = lambda: random_formula(rng, atoms, depth - 1, allow_bounds)
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return And(sub(), sub())
    if kind == 2:
        return Or(sub(), sub())
    if kind == 3:
        return Implies(sub(), sub())
    if kind == 4:
        return EX(sub())
    if kind == 5:
        return AX(sub())
    if kind == 6:
        return EF(sub(), bound)
    if kind == 7:
        return AF(sub(), bound)
    if kind == 8:
        return EG(sub(), bound)
    if kind == 9:
        return AG(sub(), bound)
    if kind == 10:
        return EU(sub(), sub(), bound)
    return AU(sub(), sub(), bound)


# ---------------------------------------------------------------------------
# closed-system verdicts by naive graph search (strategy-enumeration oracle)

def oracle_safety_holds(adjacency, initial, bad_mask) -> bool:
    """No bad node reachable (plain BFS over dict adjacency)."""
    seen = {initial}
    stack = [initial]
    while stack:
        v = stack.pop()
        if bad_mask[v]:
            return False
        for m in adjacency[v]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return True


def oracle_af_holds(adjacency, initial, goal_mask) -> bool:
    """Every infinite path reaches the goal: the goal-free reachable
    subgraph must be cycle-free (all nodes have successors by totality)."""
    color = {}

    def dfs(v):
        color[v] = 1
        for m in adjacency[v]:
            if goal_mask[m]:
                continue
            c = color.get(m)
            if c == 1:
                return False
            if c is None and not dfs(m):
                return False
        color[v] = 2
        return True

    if goal_mask[initial]:
        return True
    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(10000 + len(adjacency) * 2)
    try:
        return dfs(initial)
    finally:
        sys.setrecursionlimit(old)


def enumerate_memoryless_verdict(qg, goal_atom: str, kind: str, cap=50_000):
    """Exhaustive enumeration over all memoryless controller strategies.

    Returns True iff some assignment of a menu cocktail to every
    controller node makes the closed system satisfy the goal (AG !atom for
    kind='safety', AF atom for kind='reach'). Independent of the package's
    solver: plain dict graphs and the two oracle predicates above.
    """
    ctrl_nodes = [i for i in range(len(qg.nodes)) if qg.nodes[i][3] == 0]
    combos = len(qg.menu) ** len(ctrl_nodes)
    if combos > cap:
        raise ValueError(f"{combos} strategies exceed oracle cap")
    goal_mask = [goal_atom in qg.labels[i] for i in range(len(qg.nodes))]
    base_rows = [[e.dst for e in row] for row in qg.edges]
    ctrl_edges = {v: [e.dst for e in qg.edges[v]] for v in ctrl_nodes}
    for assignment in itertools.product(range(len(qg.menu)), repeat=len(ctrl_nodes)):
        adjacency = list(base_rows)
        for v, choice in zip(ctrl_nodes, assignment):
            adjacency[v] = [ctrl_edges[v][choice]]
        if kind == "safety":
            ok = oracle_safety_holds(adjacency, qg.initial, goal_mask)
        else:
            ok = oracle_af_holds(adjacency, qg.initial, goal_mask)
        if ok:
            return True
    return False


@pytest.fixture
def rng():
    return random.Random(20260809)
