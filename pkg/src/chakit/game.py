"""Translation of timed models into two-player games and their finite
region quotient.

The translation makes cocktail switches controllable moves and progression
edges uncontrollable ones, one copy of each state per cocktail. Sampling
forces one round per time unit; a round is serialized as: controller move
(switch cocktail or keep it), environment move (fire an enabled edge, or
pass when the coming unit delay respects the invariants), then the unit
delay itself.

Rational rates are handled by value scaling: with L the lcm of all
cocktail rate denominators, clock values are tracked as multiples of 1/L,
every constant is multiplied by L, and all scaled rates are integers. Unit
delays then map integer grid points to integer grid points, so the
floor/ceiling region abstraction is exact: guards, invariant legality and
delay successors are uniform per region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .ctl import Kripke
from .errors import RegionSplitError, UnboundedClockError, UnknownIdError
from .timed import TimedCha, TimedEdge, effective_clock_bound, rate_vector
from .untimed import Cha, Cocktail, EMPTY_COCKTAIL, cocktail_key, successors

CTRL, ENV, DELAY = 0, 1, 2
TURN_NAMES = ("controller", "environment", "delay")

# edge kinds
CONTROL, PROGRESS, PASS, TICK, HALT = "control", "progress", "pass", "delay", "halt"


def canonical_menu(menu: Iterable, drugs: Sequence[str]) -> tuple:
    """Sorted, deduplicated menu; must contain the empty cocktail."""
    universe = frozenset(drugs)
    out = set()
    for c in menu:
        c = frozenset(c)
        unknown = c - universe
        if unknown:
            raise UnknownIdError(f"menu uses unknown drugs: {', '.join(sorted(unknown))}")
        out.add(c)
    if EMPTY_COCKTAIL not in out:
        raise ValueError("cocktail menu must contain the empty cocktail")
    return tuple(sorted(out, key=lambda c: (len(c), sorted(c))))


def default_menu(drugs: Sequence[str]) -> tuple:
    """Empty cocktail plus each single drug."""
    return canonical_menu([frozenset()] + [frozenset({d}) for d in drugs], drugs)


def full_menu(drugs: Sequence[str]) -> tuple:
    """All 2^|D| cocktails; exponential, build on purpose only."""
    out = [frozenset()]
    for d in drugs:
        out += [c | {d} for c in list(out)]
    return canonical_menu(out, drugs)


@dataclass
class HybridGame:
    """Rectangular-game view of a timed model: one node per (state, cocktail).

    Controllable edges switch cocktails (no guards, no resets);
    uncontrollable edges replicate the model's progression edges per
    cocktail. `sampled` marks the one-move-per-time-unit discretization.
    """

    base: TimedCha
    menu: tuple
    sampled: bool = False
    sampling_clock: Optional[str] = None
    view: Optional[TimedCha] = None  # base with the sampling clock woven in

    def game_states(self) -> tuple:
        return tuple((v, c) for v in self.base.states for c in self.menu)

    def controllable_edges(self) -> tuple:
        out = []
        for v in self.base.states:
            for c in self.menu:
                for c2 in self.menu:
                    if c2 != c:
                        out.append(((v, c), (v, c2)))
        return tuple(out)

    def uncontrollable_edges(self) -> tuple:
        out = []
        for c in self.menu:
            for i, e in enumerate(self.base.edges):
                out.append(((e.source, c), i, (e.target, c)))
        return tuple(out)

    def rate_of(self, state: str, c: Cocktail, clock: str) -> Fraction:
        from .timed import cocktail_rate
        return cocktail_rate(self.base, state, c, clock)


def translate(tc: TimedCha, menu: Iterable) -> HybridGame:
    """Build the game: per-cocktail state copies, switch edges, fixed rates."""
    return HybridGame(tc, canonical_menu(menu, tc.drugs))


def _fresh_clock_name(taken: Sequence[str]) -> str:
    name = "tick"
    while name in taken:
        name += "_"
    return name


def discretize(g: HybridGame) -> HybridGame:
    """Sampling game: players move once per time unit.

    A fresh clock with rate 1 everywhere gets invariant 1 at every state,
    every guard is conjoined with `tick >= 1`, and (like every clock) the
    tick resets on each discrete transition.
    """
    tc = g.base
    tick = _fresh_clock_name(tc.clocks)
    invariants = dict(tc.invariants)
    for v in tc.states:
        invariants[(v, tick)] = 1
    edges = tuple(TimedEdge(e.source, e.guard.conjoin(tick, 1), e.target)
                  for e in tc.edges)
    view = TimedCha(tc.states, tc.clocks + (tick,), edges, tc.initial, tc.drugs,
                    invariants, dict(tc.rates), dict(tc.labels),
                    dict(tc.clock_bounds), tc.name)
    return HybridGame(tc, g.menu, sampled=True, sampling_clock=tick, view=view)


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class Region:
    """Per clock either an integer point (j, j) or an open interval (j, j+1)."""

    codes: tuple

    def __post_init__(self):
        for lo, hi in self.codes:
            if not (lo == hi or hi == lo + 1):
                raise ValueError(f"bad region code ({lo}, {hi})")

    def __str__(self):
        parts = [f"{lo}" if lo == hi else f"({lo},{hi})" for lo, hi in self.codes]
        return "[" + " ".join(parts) + "]"


def region_of(valuation: Mapping, bound, cap: bool = True) -> Region:
    """Floor/ceiling region of a valuation, clocks saturated at the bound.

    `bound` is an int applied to every clock or a per-clock mapping. With
    cap=False a value above its bound is an error.
    """
    codes = []
    for clock in sorted(valuation):
        value = Fraction(valuation[clock])
        m = bound[clock] if isinstance(bound, Mapping) else int(bound)
        if value > m:
            if not cap:
                raise UnboundedClockError(f"clock {clock!r} value {value} above bound {m}")
            value = Fraction(m)
        lo = math.floor(value)
        hi = math.ceil(value)
        codes.append((lo, hi))
    return Region(tuple(codes))


def all_region_codes(bound: int) -> tuple:
    """Every per-clock code up to the bound: the 2*bound+1 points/intervals."""
    out = []
    for j in range(bound + 1):
        out.append((j, j))
        if j < bound:
            out.append((j, j + 1))
    return tuple(out)


def _advance_code(code, rate: int, cap: int):
    lo, hi = code
    if lo == hi:
        nv = min(lo + rate, cap)
        return (nv, nv)
    if lo + rate >= cap:
        return (cap, cap)
    return (lo + rate, hi + rate)


def _code_satisfies(code, scaled_k: int) -> bool:
    return code[0] >= scaled_k


def _delay_legal_code(code, rate: int, scaled_limit: int) -> bool:
    lo, hi = code
    endpoint = lo + rate if lo == hi else lo + 1 + rate
    return endpoint <= scaled_limit


# ---------------------------------------------------------------------------
# quotient game

@dataclass(frozen=True)
class QEdge:
    dst: int
    kind: str
    payload: int  # menu index (control), edge index (progress), -1 otherwise


@dataclass
class QuotientGame:
    """Explicit finite game over (state, cocktail, region, turn) nodes."""

    nodes: tuple              # (state_idx, menu_idx, region_codes, turn)
    edges: tuple              # tuple of tuples of QEdge
    initial: int
    menu: tuple
    states: tuple
    clocks: tuple
    labels: tuple             # frozenset per node
    scale: int
    bounds: dict              # unscaled per-clock bound
    atom_universe: frozenset
    sampled: bool = True

    def __post_init__(self):
        self.turn = np.fromiter((n[3] for n in self.nodes), dtype=np.int8,
                                count=len(self.nodes))
        self._kripke = None

    def __len__(self):
        return len(self.nodes)

    def node_key(self, i: int):
        v, c, region, turn = self.nodes[i]
        return (self.states[v], cocktail_key(self.menu[c]), str(Region(region)),
                TURN_NAMES[turn])

    def controller_nodes(self) -> np.ndarray:
        return (self.turn == CTRL).astype(np.uint8)

    def label_mask(self, atom: str) -> np.ndarray:
        return np.fromiter((atom in l for l in self.labels), dtype=np.uint8,
                           count=len(self.labels))

    def step_weight(self, kind: str) -> int:
        """Time weight of an edge kind: sampled games spend a unit on delay
        edges, untimed games on each progression."""
        if self.sampled:
            return 1 if kind in (TICK, HALT) else 0
        return 1 if kind in (PROGRESS, HALT) else 0

    def to_kripke(self) -> Kripke:
        if self._kripke is None:
            adj = [tuple(e.dst for e in row) for row in self.edges]
            weights = [tuple(self.step_weight(e.kind) for e in row)
                       for row in self.edges]
            keys = tuple(range(len(self.nodes)))
            self._kripke = Kripke(keys, self.labels, adj, weights, self.initial,
                                  extra_atoms=self.atom_universe)
        return self._kripke

    def region_count_by_state_cocktail(self) -> dict:
        out = {}
        for v, c, region, _turn in self.nodes:
            out.setdefault((self.states[v], cocktail_key(self.menu[c])), set()).add(region)
        return {k: len(s) for k, s in sorted(out.items())}

    def to_json_dict(self) -> dict:
        nodes = []
        for i, (v, c, region, turn) in enumerate(self.nodes):
            nodes.append({
                "id": i,
                "state": self.states[v],
                "cocktail": sorted(self.menu[c]),
                "region": [list(code) for code in region],
                "turn": TURN_NAMES[turn],
                "labels": sorted(self.labels[i]),
            })
        edges = []
        for src, row in enumerate(self.edges):
            for e in row:
                edges.append({"from": src, "to": e.dst, "kind": e.kind,
                              "payload": e.payload})
        return {
            "initial": self.initial,
            "scale": self.scale,
            "clocks": list(self.clocks),
            "bounds": {c: self.bounds[c] for c in self.clocks} if self.bounds else {},
            "menu": [sorted(c) for c in self.menu],
            "nodes": nodes,
            "edges": edges,
        }


def _scaled_rates(tc: TimedCha, menu) -> tuple:
    """(scale L, rates[state_idx][menu_idx][clock_idx] as ints)."""
    raw = {}
    scale = 1
    for vi, v in enumerate(tc.states):
        for ci, c in enumerate(menu):
            vec = rate_vector(tc, v, c)
            raw[(vi, ci)] = vec
            for r in vec:
                scale = scale * r.denominator // math.gcd(scale, r.denominator)
    rates = {}
    for (vi, ci), vec in raw.items():
        scaled = []
        for r in vec:
            value = r * scale
            if value.denominator != 1:
                raise RegionSplitError(f"rate {r} does not scale to an integer with L={scale}")
        rates[(vi, ci)] = tuple(int(r * scale) for r in vec)
    return scale, rates


def quotient(g: HybridGame, bound=None, full: bool = False) -> QuotientGame:
    """Finite region quotient of the sampled game.

    `bound` (int or per-clock mapping) saturates clock values; it must
    cover every guard constant and strictly exceed every invariant limit.
    With full=True the entire region space is enumerated per
    (state, cocktail); otherwise only the part reachable from the initial
    node is built.
    """
    if not g.sampled:
        raise ValueError("quotient needs the sampled game; call discretize first")
    tc = g.base
    menu = g.menu
    bounds = dict(effective_clock_bound(tc))
    if bound is not None:
        for clock in tc.clocks:
            wanted = bound[clock] if isinstance(bound, Mapping) else int(bound)
            if wanted < bounds[clock]:
                raise UnboundedClockError(
                    f"bound {wanted} for clock {clock!r} below required {bounds[clock]}")
            bounds[clock] = wanted

    scale, rates = _scaled_rates(tc, menu)
    caps = tuple(bounds[c] * scale for c in tc.clocks)
    guard_scaled = []
    for e in tc.edges:
        guard_scaled.append(tuple((tc.clock_order(c), k * scale) for c, k in e.guard.atoms))
    invariant_scaled = {}
    for vi, v in enumerate(tc.states):
        inv = []
        for xi, clock in enumerate(tc.clocks):
            limit = tc.invariant(v, clock)
            if limit is not None:
                inv.append((xi, limit * scale))
        invariant_scaled[vi] = tuple(inv)

    zero_region = tuple((0, 0) for _ in tc.clocks)
    state_index = {v: i for i, v in enumerate(tc.states)}
    outgoing = {vi: tc.outgoing(v) for vi, v in enumerate(tc.states)}
    targets = tuple(state_index[e.target] for e in tc.edges)

    def guard_ok(ei: int, region) -> bool:
        return all(_code_satisfies(region[xi], k) for xi, k in guard_scaled[ei])

    def delay_ok(vi: int, ci: int, region) -> bool:
        rate = rates[(vi, ci)]
        return all(_delay_legal_code(region[xi], rate[xi], limit)
                   for xi, limit in invariant_scaled[vi])

    def advanced(vi: int, ci: int, region) -> tuple:
        rate = rates[(vi, ci)]
        return tuple(_advance_code(code, rate[xi], caps[xi])
                     for xi, code in enumerate(region))

    def node_moves(node):
        vi, ci, region, turn = node
        if turn == CTRL:
            return [((vi, c2, region, ENV), CONTROL, c2) for c2 in range(len(menu))]
        if turn == ENV:
            moves = [((targets[ei], ci, zero_region, DELAY), PROGRESS, ei)
                     for ei in outgoing[vi] if guard_ok(ei, region)]
            if delay_ok(vi, ci, region):
                moves.append(((vi, ci, region, DELAY), PASS, -1))
            if not moves:
                moves.append((node, HALT, -1))
            return moves
        if delay_ok(vi, ci, region):
            return [((vi, ci, advanced(vi, ci, region), CTRL), TICK, -1)]
        return [(node, HALT, -1)]

    initial = (state_index[tc.initial], menu.index(EMPTY_COCKTAIL), zero_region, CTRL)

    if full:
        # region space over scaled codes; with scale 1 this is the plain grid
        per_clock = [all_region_codes(bounds[c] * scale) for c in tc.clocks]
        region_space = [()]
        for codes in per_clock:
            region_space = [r + (code,) for r in region_space for code in codes]
        order = []
        for vi in range(len(tc.states)):
            for ci in range(len(menu)):
                for region in region_space:
                    for turn in (CTRL, ENV, DELAY):
                        order.append((vi, ci, region, turn))
        index = {n: i for i, n in enumerate(order)}
        if initial not in index:
            raise RegionSplitError("initial node missing from full enumeration")
    else:
        index = {initial: 0}
        order = [initial]
        i = 0
        while i < len(order):
            for dst, _kind, _payload in node_moves(order[i]):
                if dst not in index:
                    index[dst] = len(order)
                    order.append(dst)
            i += 1

    edges = []
    for node in order:
        row = []
        for dst, kind, payload in node_moves(node):
            if dst not in index:
                # full enumeration can step outside only by a bug
                raise RegionSplitError(f"successor {dst} missing from node table")
            row.append(QEdge(index[dst], kind, payload))
        edges.append(tuple(row))

    labels = tuple(tc.labels[tc.states[n[0]]] for n in order)
    qg = QuotientGame(tuple(order), tuple(edges), index[initial], menu, tc.states,
                      tc.clocks, labels, scale, bounds, tc.label_universe())
    _assert_round_structure(qg)
    return qg


def _assert_round_structure(qg: QuotientGame):
    """Every cycle must spend time: the 0-weight move subgraph is acyclic."""
    n = len(qg.nodes)
    indeg = [0] * n
    adj = [[] for _ in range(n)]
    for src, row in enumerate(qg.edges):
        for e in row:
            if e.kind not in (TICK, HALT):
                adj[src].append(e.dst)
                indeg[e.dst] += 1
    queue = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for m in adj[v]:
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    if seen != n:
        raise RegionSplitError("instantaneous-move cycle found in the quotient")


# ---------------------------------------------------------------------------
# untimed models as games

def untimed_game(cha: Cha, menu: Iterable) -> QuotientGame:
    """Two-layer game for untimed models: pick a cocktail, then an edge.

    No clocks and no delay layer; each environment move is one time step.
    """
    menu = canonical_menu(menu, cha.drugs)
    state_index = {v: i for i, v in enumerate(cha.states)}
    initial = (state_index[cha.initial], 0, (), CTRL)

    def node_moves(node):
        vi, ci, _, turn = node
        if turn == CTRL:
            return [((vi, c2, (), ENV), CONTROL, c2) for c2 in range(len(menu))]
        succ = successors(cha, cha.states[vi], menu[ci])
        if not succ:
            return [(node, HALT, -1)]
        return [((state_index[s], 0, (), CTRL), PROGRESS, state_index[s]) for s in succ]

    index = {initial: 0}
    order = [initial]
    i = 0
    while i < len(order):
        for dst, _k, _p in node_moves(order[i]):
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
        i += 1
    edges = tuple(tuple(QEdge(index[dst], kind, payload)
                        for dst, kind, payload in node_moves(node))
                  for node in order)
    labels = tuple(cha.labels[cha.states[n[0]]] for n in order)
    qg = QuotientGame(tuple(order), edges, 0, menu, cha.states, (), labels,
                      1, {}, cha.label_universe(), sampled=False)
    return qg
