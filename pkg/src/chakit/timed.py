"""Timed progression automata: clocks, guards, invariants, drug-scaled rates.

Clocks are exact rationals (`fractions.Fraction`); guards are conjunctions
of lower bounds `x >= k` with natural constants; invariants are per-state
upper limits on clocks. Drugs rescale clock rates multiplicatively. All
clocks reset to zero on every state transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .errors import (EdgeNotFoundError, GuardUnsatisfiedError, InvariantViolationError,
                     UnboundedClockError, UnknownIdError)
from .untimed import Cocktail, EMPTY_COCKTAIL, Finding, ValidationReport

ZERO = Fraction(0)
ONE = Fraction(1)

#: a clock valuation maps every model clock to a non-negative exact rational
ClockValuation = dict


def as_fraction(value) -> Fraction:
    """Accepts Fraction, int, or 'p/q' strings. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"exact rational expected, got {type(value).__name__}")


@dataclass(frozen=True)
class ClockConstraint:
    """Conjunction of atoms `clock >= constant` (the whole guard grammar)."""

    atoms: tuple  # ((clock, int), ...) sorted by clock

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted((c, int(k)) for c, k in self.atoms)))
        for c, k in self.atoms:
            if k < 0:
                raise ValueError(f"guard constant for {c!r} must be a natural number")

    @staticmethod
    def of(mapping: Mapping) -> "ClockConstraint":
        return ClockConstraint(tuple(mapping.items()))

    @property
    def trivial(self) -> bool:
        return not self.atoms

    def failing_atoms(self, valuation: Mapping) -> tuple:
        return tuple((c, k) for c, k in self.atoms if valuation[c] < k)

    def satisfied_by(self, valuation: Mapping) -> bool:
        return not self.failing_atoms(valuation)

    def conjoin(self, clock: str, k: int) -> "ClockConstraint":
        others = tuple(a for a in self.atoms if a[0] != clock)
        mine = max([k] + [a[1] for a in self.atoms if a[0] == clock])
        return ClockConstraint(others + ((clock, mine),))

    def __str__(self):
        if not self.atoms:
            return "true"
        return " & ".join(f"{c} >= {k}" for c, k in self.atoms)


@dataclass(frozen=True)
class TimedEdge:
    source: str
    guard: ClockConstraint
    target: str


@dataclass
class TimedCha:
    """Timed model. Treated as immutable once built."""

    states: tuple
    clocks: tuple
    edges: tuple
    initial: str
    drugs: tuple
    invariants: dict = field(default_factory=dict)   # (state, clock) -> int
    rates: dict = field(default_factory=dict)        # (state, drug, clock) -> Fraction
    labels: dict = field(default_factory=dict)
    clock_bounds: dict = field(default_factory=dict)  # declared per-clock bound, optional
    name: str = ""

    def __post_init__(self):
        self.states = tuple(self.states)
        self.clocks = tuple(self.clocks)
        self.edges = tuple(self.edges)
        self.drugs = tuple(self.drugs)
        self.invariants = {k: int(v) for k, v in self.invariants.items()}
        self.rates = {k: as_fraction(v) for k, v in self.rates.items()}
        self._state_order = {s: i for i, s in enumerate(self.states)}
        self._clock_order = {c: i for i, c in enumerate(self.clocks)}
        self._outgoing = {s: [] for s in self.states}
        for i, e in enumerate(self.edges):
            if e.source in self._outgoing:
                self._outgoing[e.source].append(i)
        self.labels = {s: frozenset(self.labels.get(s, {s})) for s in self.states}

    def state_order(self, state: str) -> int:
        try:
            return self._state_order[state]
        except KeyError:
            raise UnknownIdError(f"unknown state {state!r}") from None

    def clock_order(self, clock: str) -> int:
        try:
            return self._clock_order[clock]
        except KeyError:
            raise UnknownIdError(f"unknown clock {clock!r}") from None

    def outgoing(self, state: str) -> tuple:
        self.state_order(state)
        return tuple(self._outgoing[state])

    def invariant(self, state: str, clock: str) -> Optional[int]:
        return self.invariants.get((state, clock))

    def drug_rate(self, state: str, drug: str, clock: str) -> Fraction:
        self.state_order(state)
        self.clock_order(clock)
        if drug not in self.drugs:
            raise UnknownIdError(f"unknown drug {drug!r}")
        return self.rates.get((state, drug, clock), ONE)

    def label_universe(self) -> frozenset:
        atoms = set()
        for labels in self.labels.values():
            atoms |= labels
        return frozenset(atoms)

    def zero_state(self) -> "TimedState":
        return TimedState(self.initial, (ZERO,) * len(self.clocks))


@dataclass(frozen=True)
class TimedState:
    """A state paired with exact clock values (aligned with model clocks)."""

    state: str
    values: tuple

    def valuation(self, tc: TimedCha) -> dict:
        return dict(zip(tc.clocks, self.values))


def cocktail_rate(tc: TimedCha, state: str, given: Cocktail, clock: str) -> Fraction:
    """Product of the per-drug factors; 1 for the empty cocktail."""
    rate = ONE
    for d in sorted(given):
        rate *= tc.drug_rate(state, d, clock)
    tc.state_order(state)
    tc.clock_order(clock)
    return rate


def rate_vector(tc: TimedCha, state: str, given: Cocktail) -> tuple:
    return tuple(cocktail_rate(tc, state, given, c) for c in tc.clocks)


def delay(tc: TimedCha, ts: TimedState, dur, given: Cocktail = EMPTY_COCKTAIL) -> TimedState:
    """Let `dur` time pass under the cocktail: each clock advances by
    dur * rate. Raises if any state invariant would be exceeded."""
    dur = as_fraction(dur)
    if dur <= 0:
        raise ValueError("delay must be positive")
    rates = rate_vector(tc, ts.state, given)
    advanced = tuple(v + dur * r for v, r in zip(ts.values, rates))
    for clock, value in zip(tc.clocks, advanced):
        limit = tc.invariant(ts.state, clock)
        if limit is not None and value > limit:
            raise InvariantViolationError(clock, limit)
    return TimedState(ts.state, advanced)


def enabled_edges(tc: TimedCha, ts: TimedState) -> tuple:
    """Indices of outgoing edges whose guards hold, in declaration order."""
    val = ts.valuation(tc)
    return tuple(i for i in tc.outgoing(ts.state) if tc.edges[i].guard.satisfied_by(val))


def fire(tc: TimedCha, ts: TimedState, edge_index: int) -> TimedState:
    """Take an enabled edge; every clock resets to zero."""
    edge = tc.edges[edge_index]
    if edge.source != ts.state:
        raise EdgeNotFoundError(f"edge #{edge_index} does not leave {ts.state!r}")
    failing = edge.guard.failing_atoms(ts.valuation(tc))
    if failing:
        raise GuardUnsatisfiedError(failing)
    return TimedState(edge.target, (ZERO,) * len(tc.clocks))


def inhibition_clock_name(drug: str, target: str) -> str:
    return f"x_{drug}_{target}"


def emulate_inhibitor_edge(tc: TimedCha, source: str, target: str, drug: str,
                           z: int) -> TimedCha:
    """Emulate a drug-inhibitable edge with clocks.

    Adds a clock frozen by the drug at `source` (rate 0) and conjoins
    `clock >= z` to every source->target edge: giving the drug before the
    clock reaches z blocks the transition; once the clock has passed z the
    transition can no longer be blocked.
    """
    if z <= 0:
        raise ValueError("z must be positive")
    tc.state_order(source)
    tc.state_order(target)
    if drug not in tc.drugs:
        raise UnknownIdError(f"unknown drug {drug!r}")
    matching = [i for i in tc.outgoing(source) if tc.edges[i].target == target]
    if not matching:
        raise EdgeNotFoundError(f"no edge {source!r} -> {target!r}")
    clock = inhibition_clock_name(drug, target)
    clocks = tc.clocks if clock in tc.clocks else tc.clocks + (clock,)
    edges = list(tc.edges)
    for i in matching:
        edges[i] = TimedEdge(source, edges[i].guard.conjoin(clock, z), target)
    rates = dict(tc.rates)
    rates[(source, drug, clock)] = ZERO
    return TimedCha(tc.states, clocks, tuple(edges), tc.initial, tc.drugs,
                    dict(tc.invariants), rates, dict(tc.labels),
                    dict(tc.clock_bounds), tc.name)


@dataclass(frozen=True)
class DelayStep:
    duration: Fraction
    cocktail: Cocktail

    is_delay = True

    def __post_init__(self):
        object.__setattr__(self, "duration", as_fraction(self.duration))
        object.__setattr__(self, "cocktail", frozenset(self.cocktail))
        if self.duration <= 0:
            raise ValueError("delay duration must be positive")


@dataclass(frozen=True)
class JumpStep:
    edge_index: int
    target: str

    is_delay = False


@dataclass(frozen=True)
class TimedRun:
    """Alternating delay/state transitions from (initial_state, all zeros).

    A lasso repeats steps[cycle_start:] forever; such cycles must contain
    total delay >= 1 so the run cannot be Zeno.
    """

    initial_state: str
    steps: tuple
    cycle_start: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.cycle_start is not None:
            if not (0 <= self.cycle_start < len(self.steps)):
                raise ValueError("cycle_start out of range")
            total = sum((s.duration for s in self.steps[self.cycle_start:] if s.is_delay),
                        start=ZERO)
            if total < 1:
                raise ValueError("lasso cycle has total delay < 1 (Zeno)")

    @property
    def infinite(self) -> bool:
        return self.cycle_start is not None


def duration(run_or_steps) -> Fraction:
    """Total delay of a finite prefix; state transitions contribute zero."""
    steps = run_or_steps.steps if isinstance(run_or_steps, TimedRun) else run_or_steps
    return sum((s.duration for s in steps if s.is_delay), start=ZERO)


def trace(tc: TimedCha, run: TimedRun):
    """Yield the timed state after each step, validating transitions."""
    ts = TimedState(run.initial_state, (ZERO,) * len(tc.clocks))
    for step in run.steps:
        if step.is_delay:
            ts = delay(tc, ts, step.duration, step.cocktail)
        else:
            ts = fire(tc, ts, step.edge_index)
            if ts.state != step.target:
                raise EdgeNotFoundError(
                    f"edge #{step.edge_index} targets {ts.state!r}, run says {step.target!r}")
        yield ts


@dataclass(frozen=True)
class ExecutionCheck:
    ok: bool
    reason: Optional[str] = None


def _probe_offsets(tc: TimedCha, ts: TimedState, step: DelayStep) -> list:
    """Offsets in [0, duration) at which the therapy is sampled.

    Includes 0, every instant a clock crosses an integer, and midpoints
    between consecutive sample points; exact for therapies that only
    depend on the visited states and the clocks' integer parts.
    """
    rates = rate_vector(tc, ts.state, step.cocktail)
    points = {ZERO}
    for value, rate in zip(ts.values, rates):
        if rate <= 0:
            continue
        end = value + step.duration * rate
        k = int(value) + 1
        while k < end:
            offset = (Fraction(k) - value) / rate
            if 0 < offset < step.duration:
                points.add(offset)
            k += 1
    ordered = sorted(points) + [step.duration]
    mids = [(a + b) / 2 for a, b in zip(ordered, ordered[1:])]
    return sorted(set(sorted(points) + mids))


def check_timed_execution(tc: TimedCha, run: TimedRun, therapy) -> ExecutionCheck:
    """Verify the run is a possible execution of the therapy.

    Each delay step's cocktail must equal the therapy's choice on every
    intermediate prefix of the delay, and every transition must be legal.
    """
    ts = TimedState(run.initial_state, (ZERO,) * len(tc.clocks))
    visited = [run.initial_state]
    for idx, step in enumerate(run.steps):
        if step.is_delay:
            rates = rate_vector(tc, ts.state, step.cocktail)
            for offset in _probe_offsets(tc, ts, step):
                partial = tuple(v + offset * r for v, r in zip(ts.values, rates))
                want = therapy.cocktail_for_timed(visited, dict(zip(tc.clocks, partial)))
                if want != step.cocktail:
                    return ExecutionCheck(False,
                                          f"step {idx}: therapy gives {{{'+'.join(sorted(want))}}} "
                                          f"at offset {offset}, run delays under "
                                          f"{{{'+'.join(sorted(step.cocktail))}}}")
            try:
                ts = delay(tc, ts, step.duration, step.cocktail)
            except InvariantViolationError as exc:
                return ExecutionCheck(False, f"step {idx}: {exc}")
        else:
            try:
                ts = fire(tc, ts, step.edge_index)
            except (GuardUnsatisfiedError, EdgeNotFoundError, IndexError) as exc:
                return ExecutionCheck(False, f"step {idx}: {exc}")
            if ts.state != step.target:
                return ExecutionCheck(False, f"step {idx}: wrong target")
            visited.append(ts.state)
    return ExecutionCheck(True)


def validate_timed(tc: TimedCha) -> ValidationReport:
    """Id integrity, grammar restrictions, and the invariant-exit rule.

    The exit rule is syntactic: whenever a clock x may hit its limit
    L = invariant(v, x), some outgoing edge of v must be enabled at every
    valuation with x = L; with lower-bound-only guards that means an edge
    whose atoms on other clocks are absent (or have constant 0) and whose
    x atom, if any, has constant <= L.
    """
    findings = []
    seen_states = set()
    for s in tc.states:
        if s in seen_states:
            findings.append(Finding("duplicate-state", s, "state id appears twice"))
        seen_states.add(s)
    seen_clocks = set()
    for c in tc.clocks:
        if c in seen_clocks:
            findings.append(Finding("duplicate-clock", c, "clock id appears twice"))
        seen_clocks.add(c)
    if tc.initial not in seen_states:
        findings.append(Finding("unknown-initial", tc.initial, "initial state not declared"))
    for i, e in enumerate(tc.edges):
        for endpoint in (e.source, e.target):
            if endpoint not in seen_states:
                findings.append(Finding("dangling-edge", f"edge#{i}", f"unknown state {endpoint!r}"))
        for clock, k in e.guard.atoms:
            if clock not in seen_clocks:
                findings.append(Finding("unknown-clock", f"edge#{i}", f"unknown clock {clock!r}"))
    for (s, clock), limit in sorted(tc.invariants.items()):
        if s not in seen_states or clock not in seen_clocks:
            findings.append(Finding("dangling-invariant", f"{s}/{clock}", "unknown state or clock"))
        elif limit < 0:
            findings.append(Finding("bad-invariant", f"{s}/{clock}", "limit must be natural"))
    for (s, d, clock), r in sorted(tc.rates.items()):
        if s not in seen_states or clock not in seen_clocks or d not in tc.drugs:
            findings.append(Finding("dangling-rate", f"{s}/{d}/{clock}", "unknown id"))
        elif r < 0:
            findings.append(Finding("bad-rate", f"{s}/{d}/{clock}", "rate must be >= 0"))
    if findings:
        return ValidationReport(tuple(findings))

    for (s, clock), limit in sorted(tc.invariants.items()):
        witnesses = []
        for i in tc.outgoing(s):
            atoms = tc.edges[i].guard.atoms
            if all((c == clock and k <= limit) or k == 0 for c, k in atoms):
                witnesses.append(i)
        if not witnesses:
            findings.append(Finding(
                "invariant-exit", f"{s}/{clock}",
                f"no outgoing edge is guaranteed enabled when {clock} reaches {limit}"))
    for clock, bound in sorted(tc.clock_bounds.items()):
        floor = minimum_clock_bound(tc).get(clock, 1)
        if bound < floor:
            findings.append(Finding(
                "clock-bound", clock,
                f"declared bound {bound} below required minimum {floor}"))
    return ValidationReport(tuple(findings))


def minimum_clock_bound(tc: TimedCha) -> dict:
    """Smallest usable saturation bound per clock.

    Must cover every guard constant and strictly exceed every invariant
    limit, so saturated arithmetic never masks a guard or an expiry.
    """
    bound = {c: 1 for c in tc.clocks}
    for e in tc.edges:
        for clock, k in e.guard.atoms:
            if clock in bound:
                bound[clock] = max(bound[clock], k)
    for (s, clock), limit in tc.invariants.items():
        if clock in bound:
            bound[clock] = max(bound[clock], limit + 1)
    return bound


def effective_clock_bound(tc: TimedCha) -> dict:
    """Declared bounds where given, otherwise the per-clock minimum."""
    floor = minimum_clock_bound(tc)
    out = {}
    for clock in tc.clocks:
        declared = tc.clock_bounds.get(clock)
        if declared is not None and declared < floor[clock]:
            raise UnboundedClockError(
                f"declared bound {declared} for clock {clock!r} is below minimum {floor[clock]}")
        out[clock] = declared if declared is not None else floor[clock]
    return out
