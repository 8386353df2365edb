"""Cost vectors, discounted execution costs, Pareto comparison of therapies.

Costs are n-dimensional float vectors (toxicity, money, discomfort, ...).
Untimed executions are discounted geometrically per step; timed executions
exponentially in elapsed time. Therapies are compared by Pareto dominance
lifted to their sets of possible execution costs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (DimensionMismatchError, DivergenceError, DomainMismatchError,
                     ExplosionGuardError)
from .therapy import MemorylessTherapy, Therapy
from .untimed import Cha, Run, cocktail_key, possible_executions

Vector = tuple

#: comparisons of float cost values are documented to this tolerance
COST_TOLERANCE = 1e-9


def zero_vector(n: int) -> Vector:
    return (0.0,) * n


def _add(x: Vector, y: Vector) -> Vector:
    return tuple(a + b for a, b in zip(x, y))


def _scale(x: Vector, k: float) -> Vector:
    return tuple(a * k for a in x)


@dataclass
class CostModel:
    dimension: int = 1
    state_costs: dict = field(default_factory=dict)
    drug_costs: dict = field(default_factory=dict)
    cocktail_overrides: dict = field(default_factory=dict)  # cocktail_key -> vector
    discount_untimed: float = 0.5
    discount_timed: float = 1.0

    def __post_init__(self):
        if not 0 < self.discount_untimed <= 1:
            raise ValueError("discount_untimed must lie in (0, 1]")
        if not 0 < self.discount_timed <= 1:
            raise ValueError("discount_timed must lie in (0, 1]")
        for name, vec in [*self.state_costs.items(), *self.drug_costs.items(),
                          *self.cocktail_overrides.items()]:
            if len(vec) != self.dimension:
                raise DimensionMismatchError(f"cost vector for {name!r} has wrong dimension")
            if any(v < 0 for v in vec):
                raise ValueError(f"negative cost entry for {name!r}")

    def state_cost(self, state: str) -> Vector:
        return tuple(self.state_costs.get(state, zero_vector(self.dimension)))

    def cocktail_cost(self, c) -> Vector:
        """Explicit override if listed, otherwise the sum of per-drug costs."""
        key = cocktail_key(c)
        if key in self.cocktail_overrides:
            return tuple(self.cocktail_overrides[key])
        total = zero_vector(self.dimension)
        for d in sorted(c):
            total = _add(total, tuple(self.drug_costs.get(d, zero_vector(self.dimension))))
        return total


@dataclass(frozen=True)
class CostResult:
    value: Vector
    tail_radius: Vector

    def entry(self, i=0) -> float:
        return self.value[i]


def untimed_cost(run: Run, therapy: Therapy, model: CostModel,
                 horizon: Optional[int] = None, tol: float = 1e-12,
                 max_positions: int = 1_000_000) -> CostResult:
    """Geometric-discount cost of an execution.

    Sums discount^i * (state cost + cocktail cost) over run positions i.
    A horizon is required when the discount is 1. For lasso runs with
    discount < 1 the result carries a rigorous bound on the missing tail.
    """
    delta = model.discount_untimed
    if horizon is None and delta == 1.0:
        raise DivergenceError("discount 1 requires an explicit horizon")

    def positions():
        i = 0
        while True:
            try:
                yield run.state_at(i)
            except IndexError:
                return
            i += 1

    total = zero_vector(model.dimension)
    factor = 1.0
    prefix = []
    per_position = []
    count = 0
    for state in positions():
        prefix.append(state)
        step_cost = _add(model.state_cost(state), model.cocktail_cost(therapy.cocktail_for(prefix)))
        per_position.append(step_cost)
        if horizon is not None and count >= horizon:
            per_position.pop()
            break
        total = _add(total, _scale(step_cost, factor))
        factor *= delta
        count += 1
        if horizon is None and run.infinite:
            bound = max(max(c) for c in per_position) * factor / (1.0 - delta)
            if bound < tol or count >= max_positions:
                break
        if horizon is not None and count >= horizon:
            break

    if not run.infinite or delta == 1.0:
        radius = zero_vector(model.dimension)
    else:
        # extend one extra period so the sup covers the periodic regime
        period = len(run.states) - run.cycle_start
        probe_prefix = list(prefix)
        for j in range(count, count + period):
            probe_prefix.append(run.state_at(j))
            per_position.append(_add(model.state_cost(probe_prefix[-1]),
                                     model.cocktail_cost(therapy.cocktail_for(probe_prefix))))
        sup = tuple(max(c[i] for c in per_position) for i in range(model.dimension))
        radius = _scale(sup, factor / (1.0 - delta))
    return CostResult(total, radius)


def timed_cost(run, model: CostModel, therapy: Optional[Therapy] = None) -> Vector:
    """Exponential-discount cost of a finite timed execution.

    Each delay of duration u spent at state v under cocktail C over elapsed
    time [t, t+u] contributes (exp(-d*t) - exp(-d*(t+u)))/d * (c(v)+c(C)),
    i.e. the integral of exp(-d*s)(c(v)+c(C)) over the interval. Instant
    state transitions contribute nothing. When a therapy is given it is
    queried on the visited-state history, otherwise the run's own cocktail
    annotations are used.
    """
    d = model.discount_timed
    total = zero_vector(model.dimension)
    tau = 0.0
    states = [run.initial_state]
    for step in run.steps:
        if step.is_delay:
            u = float(step.duration)
            c = therapy.cocktail_for(states) if therapy is not None else step.cocktail
            weight = (math.exp(-d * tau) - math.exp(-d * (tau + u))) / d
            total = _add(total, _scale(_add(model.state_cost(states[-1]),
                                            model.cocktail_cost(c)), weight))
            tau += u
        else:
            states.append(step.target)
    return total


def pareto_dominates(x: Sequence[float], y: Sequence[float]) -> bool:
    """Componentwise <= with at least one strict <. Irreflexive by design."""
    if len(x) != len(y):
        raise DimensionMismatchError(f"dimensions {len(x)} vs {len(y)}")
    return all(a <= b for a, b in zip(x, y)) and any(a < b for a, b in zip(x, y))


def _dominates_with_radius(x, rx, y, ry) -> bool:
    """Dominance certain even if each value moves within its tail radius."""
    if len(x) != len(y):
        raise DimensionMismatchError(f"dimensions {len(x)} vs {len(y)}")
    hi_x = [a + r for a, r in zip(x, rx)]
    lo_y = [a - r for a, r in zip(y, ry)]
    return all(a <= b for a, b in zip(hi_x, lo_y)) and any(a < b for a, b in zip(hi_x, lo_y))


@dataclass(frozen=True)
class TherapySpace:
    """Finite space: memoryless therapies over a restricted cocktail menu."""

    menu: tuple  # cocktails, canonical order

    def __post_init__(self):
        object.__setattr__(self, "menu", tuple(frozenset(c) for c in self.menu))

    def size(self, cha: Cha) -> int:
        return len(self.menu) ** len(cha.states)

    def therapies(self, cha: Cha, cap: int = 100_000):
        if self.size(cha) > cap:
            raise ExplosionGuardError(
                f"therapy space has {self.size(cha)} members, cap is {cap}")
        for combo in itertools.product(self.menu, repeat=len(cha.states)):
            yield MemorylessTherapy.from_dict(dict(zip(cha.states, combo)))


def therapy_cost_set(cha: Cha, therapy: Therapy, model: CostModel,
                     horizon: int, cap: int = 200_000):
    """Sorted, deduplicated cost set over all possible executions to `horizon`.

    Returns (values, radii) aligned lists.
    """
    runs = possible_executions(cha, therapy, horizon, cap)
    seen = {}
    for r in runs:
        res = untimed_cost(r, therapy, model, horizon=horizon)
        seen[res.value] = res.tail_radius
    values = sorted(seen)
    return values, [seen[v] for v in values]


def therapy_dominates(costs_a, costs_b, use_radius=False) -> bool:
    """Every cost of A dominates every cost of B.

    The all-pairs weak inequality is equivalent to a bounding-box check
    (max of A against min of B per coordinate), so the quadratic pair loop
    only runs in the boundary case where no coordinate is globally strict.
    """
    va, ra = costs_a
    vb, rb = costs_b
    if not va or not vb:
        return False
    if len(va[0]) != len(vb[0]):
        raise DimensionMismatchError(f"dimensions {len(va[0])} vs {len(vb[0])}")
    n = len(va[0])
    if use_radius:
        hi_a = [max(x[i] + r[i] for x, r in zip(va, ra)) for i in range(n)]
        lo_b = [min(y[i] - r[i] for y, r in zip(vb, rb)) for i in range(n)]
    else:
        hi_a = [max(x[i] for x in va) for i in range(n)]
        lo_b = [min(y[i] for y in vb) for i in range(n)]
    if any(a > b for a, b in zip(hi_a, lo_b)):
        return False
    if any(a < b for a, b in zip(hi_a, lo_b)):
        return True
    for x, rx in zip(va, ra):
        for y, ry in zip(vb, rb):
            ok = (_dominates_with_radius(x, rx, y, ry) if use_radius
                  else pareto_dominates(x, y))
            if not ok:
                return False
    return True


@dataclass(frozen=True)
class CandidateReport:
    therapies: tuple          # the full space, canonical order
    candidates: tuple         # members not Pareto-dominated
    inconclusive: tuple       # (dominator idx, dominated idx) pairs a tail bound could overturn

    def candidate_set(self):
        return frozenset(self.candidates)


def candidate_therapies(cha: Cha, model: CostModel, space: TherapySpace,
                        horizon: int, cap: int = 200_000) -> CandidateReport:
    """Therapies of the space not Pareto-dominated by any other member.

    Dominance compares cost sets over all executions up to `horizon`
    (an under-approximation of the unbounded definition; decisions that a
    tail bound could overturn are reported as inconclusive).
    """
    therapies = tuple(space.therapies(cha))
    costs = [therapy_cost_set(cha, t, model, horizon, cap) for t in therapies]
    dominated = set()
    inconclusive = []
    for i, j in itertools.permutations(range(len(therapies)), 2):
        plain = therapy_dominates(costs[i], costs[j], use_radius=False)
        certain = therapy_dominates(costs[i], costs[j], use_radius=True)
        if certain:
            dominated.add(j)
        elif plain:
            inconclusive.append((i, j))
    candidates = tuple(t for k, t in enumerate(therapies) if k not in dominated)
    return CandidateReport(therapies, candidates, tuple(inconclusive))


def _check_same_universe(family: Sequence[Cha]):
    if not family:
        raise DomainMismatchError("empty family")
    base = frozenset(family[0].states)
    for h in family[1:]:
        if frozenset(h.states) != base:
            raise DomainMismatchError(
                f"state universes differ: {sorted(base)} vs {sorted(h.states)}")


def universal_candidates(family: Sequence[Cha], model: CostModel, space: TherapySpace,
                         horizon: int, cap: int = 200_000) -> tuple:
    """Therapies that are candidates in every member of the family."""
    _check_same_universe(family)
    sets = [candidate_therapies(h, model, space, horizon, cap).candidate_set()
            for h in family]
    inter = frozenset.intersection(*sets)
    ordering = {t: i for i, t in enumerate(space.therapies(family[0]))}
    return tuple(sorted(inter, key=lambda t: ordering[t]))


def covers(therapies: Iterable[Therapy], family: Sequence[Cha], model: CostModel,
           space: TherapySpace, horizon: int, cap: int = 200_000) -> bool:
    """True iff the set intersects every member's candidate set."""
    _check_same_universe(family)
    pool = frozenset(therapies)
    for h in family:
        if not (pool & candidate_therapies(h, model, space, horizon, cap).candidate_set()):
            return False
    return True


def prune_maximin(cost_sets: Mapping, key=None) -> tuple:
    """Optional post-filter: keep therapies whose worst aggregated cost is best."""
    key = key or sum
    worst = {t: max(key(v) for v in values) for t, (values, _) in cost_sets.items()}
    best = min(worst.values())
    return tuple(t for t, w in worst.items() if w == best)


def prune_maximax(cost_sets: Mapping, key=None) -> tuple:
    """Optional post-filter: keep therapies whose best aggregated cost is best."""
    key = key or sum
    best_case = {t: min(key(v) for v in values) for t, (values, _) in cost_sets.items()}
    best = min(best_case.values())
    return tuple(t for t, w in best_case.items() if w == best)
