"""Untimed progression automata: states, drug-inhibitable edges, runs.

A model is a finite automaton whose edges carry inhibitor sets: a cocktail
(set of drugs) disables an edge iff it intersects the edge's inhibitor set.
Everything here is read-only after construction.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DeadEndError, ExplosionGuardError, ModelValidationError, UnknownIdError

Cocktail = frozenset
EMPTY_COCKTAIL: Cocktail = frozenset()


def cocktail(*drugs: str) -> Cocktail:
    return frozenset(drugs)


def cocktail_key(c: Iterable[str]) -> str:
    """Canonical text form of a cocktail ('' for the empty one)."""
    return "+".join(sorted(c))


@dataclass(frozen=True)
class Edge:
    source: str
    inhibitors: Cocktail
    target: str


@dataclass
class Cha:
    """Untimed model. Treated as immutable once built."""

    states: tuple
    edges: tuple
    initial: str
    drugs: tuple
    labels: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        self.states = tuple(self.states)
        self.edges = tuple(
            e if isinstance(e, Edge) else Edge(e[0], frozenset(e[1]), e[2]) for e in self.edges
        )
        self.drugs = tuple(self.drugs)
        self._order = {s: i for i, s in enumerate(self.states)}
        self._outgoing = {s: [] for s in self.states}
        for i, e in enumerate(self.edges):
            if e.source in self._outgoing:
                self._outgoing[e.source].append(i)
        self.labels = {s: frozenset(self.labels.get(s, {s})) for s in self.states}

    def state_order(self, state: str) -> int:
        try:
            return self._order[state]
        except KeyError:
            raise UnknownIdError(f"unknown state {state!r}") from None

    def outgoing(self, state: str):
        self.state_order(state)
        return tuple(self._outgoing[state])

    def label_universe(self) -> frozenset:
        atoms = set()
        for labels in self.labels.values():
            atoms |= labels
        return frozenset(atoms)

    def with_self_loops(self) -> "Cha":
        """Copy with an uninhibitable self-loop added to every state."""
        extra = [Edge(s, EMPTY_COCKTAIL, s) for s in self.states]
        return Cha(self.states, self.edges + tuple(extra), self.initial, self.drugs,
                   dict(self.labels), self.name)


def is_inhibited(edge_inhibitors: Iterable[str], given: Iterable[str]) -> bool:
    """An edge is disabled iff the cocktail hits its inhibitor set."""
    return not frozenset(edge_inhibitors).isdisjoint(given)


def successors(cha: Cha, state: str, given: Cocktail) -> tuple:
    """Targets of the non-inhibited edges out of `state`, in state order."""
    cha.state_order(state)
    seen = {cha.edges[i].target for i in cha.outgoing(state)
            if not is_inhibited(cha.edges[i].inhibitors, given)}
    return tuple(sorted(seen, key=cha.state_order))


@dataclass(frozen=True)
class Finding:
    kind: str
    subject: str
    detail: str
    cocktail: Optional[Cocktail] = None

    def __str__(self):
        extra = f" cocktail={{{cocktail_key(self.cocktail)}}}" if self.cocktail is not None else ""
        return f"[{self.kind}] {self.subject}: {self.detail}{extra}"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple

    @property
    def ok(self) -> bool:
        return not self.findings

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(f) for f in self.findings)


def _minimal_hitting_sets(families, cap=4096):
    """All inclusion-minimal drug sets hitting every family member.

    Families are non-empty inhibitor sets; one representative drug per
    distinct set is enough to enumerate candidates.
    """
    distinct = sorted({frozenset(f) for f in families}, key=lambda s: sorted(s))
    candidates = {frozenset()}
    for fam in distinct:
        nxt = set()
        for cand in candidates:
            if cand & fam:
                nxt.add(cand)
            else:
                for drug in sorted(fam):
                    nxt.add(cand | {drug})
            if len(nxt) > cap:
                return None
        candidates = nxt
    minimal = [c for c in candidates if not any(o < c for o in candidates)]
    return sorted(set(minimal), key=lambda s: (len(s), sorted(s)))


def validate(cha: Cha) -> ValidationReport:
    """Well-formedness report: ids, duplicates, and totality violations.

    Totality is reported as (state, minimal inhibiting cocktail) pairs:
    for each state, the minimal cocktails that would disable every
    outgoing edge. Models with an uninhibitable edge per state are total.
    """
    findings = []
    seen = set()
    for s in cha.states:
        if s in seen:
            findings.append(Finding("duplicate-state", s, "state id appears twice"))
        seen.add(s)
    drug_set = set(cha.drugs)
    if cha.initial not in seen:
        findings.append(Finding("unknown-initial", cha.initial, "initial state not declared"))
    for i, e in enumerate(cha.edges):
        for endpoint in (e.source, e.target):
            if endpoint not in seen:
                findings.append(Finding("dangling-edge", f"edge#{i}", f"unknown state {endpoint!r}"))
        for d in sorted(e.inhibitors):
            if d not in drug_set:
                findings.append(Finding("unknown-inhibitor", f"edge#{i}", f"unknown drug {d!r}"))
    if findings:
        return ValidationReport(tuple(findings))

    for s in cha.states:
        inhibitor_sets = [cha.edges[i].inhibitors for i in cha.outgoing(s)]
        if not inhibitor_sets:
            findings.append(Finding("totality", s, "no outgoing edge", EMPTY_COCKTAIL))
            continue
        if any(not inh for inh in inhibitor_sets):
            continue
        hitting = _minimal_hitting_sets(inhibitor_sets)
        if hitting is None:
            findings.append(Finding("totality", s, "minimal-cocktail enumeration capped; state may be dead-endable"))
            continue
        for c in hitting:
            findings.append(Finding("totality", s, "cocktail disables every outgoing edge", c))
    return ValidationReport(tuple(findings))


def ensure_valid(cha: Cha) -> Cha:
    report = validate(cha)
    if not report.ok:
        raise ModelValidationError(report)
    return cha


@dataclass(frozen=True)
class Run:
    """A finite or lasso-shaped path. `cycle_start` marks the lasso knot:
    after the last state the run repeats states[cycle_start:] forever."""

    states: tuple
    cocktails: Optional[tuple] = None
    cycle_start: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if self.cocktails is not None:
            object.__setattr__(self, "cocktails", tuple(frozenset(c) for c in self.cocktails))
        if self.cycle_start is not None and not (0 <= self.cycle_start < len(self.states)):
            raise ValueError("cycle_start out of range")

    @property
    def infinite(self) -> bool:
        return self.cycle_start is not None

    def state_at(self, i: int) -> str:
        """Position i of the (possibly unrolled) state sequence."""
        n = len(self.states)
        if i < n:
            return self.states[i]
        if self.cycle_start is None:
            raise IndexError(i)
        period = n - self.cycle_start
        return self.states[self.cycle_start + (i - self.cycle_start) % period]

    def is_path_of(self, cha: Cha) -> bool:
        pairs = [(self.states[i], self.states[i + 1]) for i in range(len(self.states) - 1)]
        if self.cycle_start is not None:
            pairs.append((self.states[-1], self.states[self.cycle_start]))
        present = {(e.source, e.target) for e in cha.edges}
        return all(p in present for p in pairs)


@dataclass(frozen=True)
class AdversaryPolicy:
    """How edge nondeterminism is resolved during simulation."""

    kind: str  # first-by-order | uniform-random | adversarial-toward
    goal: Optional[str] = None

    KINDS = ("first-by-order", "uniform-random", "adversarial-toward")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind == "adversarial-toward" and not self.goal:
            raise ValueError("adversarial-toward needs a goal label")

    @staticmethod
    def parse(text: str) -> "AdversaryPolicy":
        if text.startswith("adversarial-toward:"):
            return AdversaryPolicy("adversarial-toward", text.split(":", 1)[1])
        return AdversaryPolicy(text)

    def __str__(self):
        return f"{self.kind}:{self.goal}" if self.goal else self.kind


def _distance_to_label(cha: Cha, goal: str) -> dict:
    """BFS distance (over all edges, inhibitors ignored) to a goal-labeled state."""
    dist = {}
    frontier = deque()
    for s in cha.states:
        if goal in cha.labels[s]:
            dist[s] = 0
            frontier.append(s)
    preds = {s: set() for s in cha.states}
    for e in cha.edges:
        preds[e.target].add(e.source)
    while frontier:
        v = frontier.popleft()
        for p in sorted(preds[v], key=cha.state_order):
            if p not in dist:
                dist[p] = dist[v] + 1
                frontier.append(p)
    return dist


def execute(cha: Cha, therapy, policy: AdversaryPolicy, max_steps: int, seed: int = 0) -> Run:
    """Simulate one possible execution of the therapy, length <= max_steps.

    Reproducible: the policy's choices are driven by `seed` only.
    """
    rng = random.Random(seed)
    dist = _distance_to_label(cha, policy.goal) if policy.kind == "adversarial-toward" else {}
    states = [cha.initial]
    given = []
    for _ in range(max_steps):
        c = therapy.cocktail_for(states)
        succ = successors(cha, states[-1], c)
        if not succ:
            raise DeadEndError(f"state {states[-1]!r} has no move under {{{cocktail_key(c)}}}")
        if policy.kind == "first-by-order":
            nxt = succ[0]
        elif policy.kind == "uniform-random":
            nxt = succ[rng.randrange(len(succ))]
        else:
            nxt = min(succ, key=lambda v: (dist.get(v, len(cha.states) + 1), cha.state_order(v)))
        given.append(c)
        states.append(nxt)
    return Run(tuple(states), tuple(given))


def possible_executions(cha: Cha, therapy, horizon: int, cap: int = 200_000) -> tuple:
    """All runs of exactly `horizon` steps consistent with the therapy.

    Deterministic (depth-first in successor order). Refuses when the
    crude bound |V|^horizon exceeds `cap`.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(cha.states) ** horizon > cap:
        raise ExplosionGuardError(
            f"|V|^horizon = {len(cha.states)}^{horizon} exceeds cap {cap}")
    out = []

    def walk(states, given):
        if len(given) == horizon:
            out.append(Run(tuple(states), tuple(given)))
            return
        c = therapy.cocktail_for(states)
        succ = successors(cha, states[-1], c)
        if not succ:
            raise DeadEndError(f"state {states[-1]!r} has no move under {{{cocktail_key(c)}}}")
        for nxt in succ:
            walk(states + [nxt], given + [c])

    walk([cha.initial], [])
    return tuple(out)
