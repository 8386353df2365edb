import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from chakit.cost import (CostModel, TherapySpace, candidate_therapies, covers,
                         pareto_dominates, prune_maximax, prune_maximin,
                         therapy_cost_set, timed_cost,
                         universal_candidates, untimed_cost)
from chakit.errors import DimensionMismatchError, DivergenceError, DomainMismatchError
from chakit.therapy import MemorylessTherapy
from chakit.timed import DelayStep, JumpStep, TimedRun
from chakit.untimed import Cha, Edge, Run

from conftest import random_untimed_cha

EMPTY = MemorylessTherapy.from_dict({})


def scalar_model(state_costs, delta=0.5, drug_costs=None, d=1.0):
    return CostModel(1, {k: (v,) for k, v in state_costs.items()},
                     {k: (v,) for k, v in (drug_costs or {}).items()},
                     {}, delta, d)


# ---------------------------------------------------------------------------
# untimed discounted cost

class TestUntimedCost:
    def test_absorbing_state_geometric_series(self):
        # oracle first: sum delta^i * 1 -> 1/(1-delta) = 2
        oracle = sum(0.5 ** i for i in range(200))
        run = Run(("v",), cycle_start=0)
        res = untimed_cost(run, EMPTY, scalar_model({"v": 1.0}), horizon=200)
        assert res.value[0] == pytest.approx(oracle, abs=1e-12)
        assert res.value[0] == pytest.approx(2.0, abs=1e-9)

    def test_all_zero_costs(self):
        run = Run(("a", "b", "a"), cycle_start=0)
        res = untimed_cost(run, EMPTY, scalar_model({}), horizon=50)
        assert res.value == (0.0,)

    def test_two_state_lasso(self):
        # oracle: 1 + sum_{i>=1} 2 * 0.5^i = 3
        oracle = 1.0 + sum(2.0 * 0.5 ** i for i in range(1, 400))
        run = Run(("v0", "v1"), cycle_start=1)
        res = untimed_cost(run, EMPTY, scalar_model({"v0": 1.0, "v1": 2.0}))
        assert res.value[0] == pytest.approx(oracle, abs=1e-9)
        assert res.value[0] == pytest.approx(3.0, abs=1e-9)

    def test_divergence_without_horizon(self):
        run = Run(("v",), cycle_start=0)
        with pytest.raises(DivergenceError):
            untimed_cost(run, EMPTY, scalar_model({"v": 1.0}, delta=1.0))

    def test_partial_sum_oracle_random(self, rng):
        for _ in range(100):
            states = [f"s{i}" for i in range(rng.randint(1, 4))]
            costs = {s: rng.uniform(0, 5) for s in states}
            drug_cost = rng.uniform(0, 2)
            delta = rng.uniform(0.2, 0.95)
            model = scalar_model(costs, delta, {"d": drug_cost})
            therapy = MemorylessTherapy.from_dict(
                {s: frozenset({"d"}) for s in states if rng.random() < 0.5})
            seq = [states[rng.randrange(len(states))] for _ in range(rng.randint(1, 8))]
            horizon = rng.randint(1, len(seq))
            run = Run(tuple(seq))
            res = untimed_cost(run, therapy, model, horizon=horizon)
            oracle = 0.0
            for i in range(horizon):
                c = therapy.cocktail_for(seq[:i + 1])
                oracle += delta ** i * (costs[seq[i]] + (drug_cost if c else 0.0))
            assert res.value[0] == pytest.approx(oracle, abs=1e-9)

    def test_monotone_in_state_costs(self, rng):
        run = Run(("a", "b"), cycle_start=0)
        base = scalar_model({"a": 1.0, "b": 2.0})
        raised = scalar_model({"a": 1.5, "b": 2.0})
        lo = untimed_cost(run, EMPTY, base, horizon=30)
        hi = untimed_cost(run, EMPTY, raised, horizon=30)
        assert all(h >= l for h, l in zip(hi.value, lo.value))

    def test_tail_bound_covers_horizon_extension(self, rng):
        for _ in range(80):
            states = ("a", "b", "c")
            costs = {s: rng.uniform(0, 4) for s in states}
            model = scalar_model(costs, rng.uniform(0.3, 0.9))
            run = Run(states, cycle_start=rng.randrange(3))
            h = rng.randint(2, 6)
            res = untimed_cost(run, EMPTY, model, horizon=h)
            for extra in (1, 3, 10):
                longer = untimed_cost(run, EMPTY, model, horizon=h + extra)
                assert longer.value[0] <= res.value[0] + res.tail_radius[0] + 1e-12
                assert longer.value[0] >= res.value[0] - 1e-12


# ---------------------------------------------------------------------------
# timed exponential-discount cost

class TestTimedCost:
    def test_single_segment_against_quadrature(self):
        # oracle: integral of 3*exp(-t) over [0, 2]
        oracle, _err = quad(lambda t: 3.0 * math.exp(-t), 0.0, 2.0)
        run = TimedRun("v", (DelayStep(Fraction(2), frozenset()),))
        value = timed_cost(run, scalar_model({"v": 3.0}))
        assert value[0] == pytest.approx(oracle, abs=1e-6)
        assert value[0] == pytest.approx(3.0 * (1 - math.exp(-2)), abs=1e-6)

    def test_zero_duration_run(self):
        run = TimedRun("v", ())
        assert timed_cost(run, scalar_model({"v": 3.0})) == (0.0,)

    def test_transition_between_two_costs(self):
        # segments [0,1] at cost 1 and [1,2] at cost 2
        run = TimedRun("a", (DelayStep(Fraction(1), frozenset()),
                             JumpStep(0, "b"),
                             DelayStep(Fraction(1), frozenset())))
        value = timed_cost(run, scalar_model({"a": 1.0, "b": 2.0}))
        oracle = (quad(lambda t: math.exp(-t), 0, 1)[0]
                  + quad(lambda t: 2 * math.exp(-t), 1, 2)[0])
        assert value[0] == pytest.approx(oracle, abs=1e-6)
        expected = (1 - math.exp(-1)) + 2 * (math.exp(-1) - math.exp(-2))
        assert value[0] == pytest.approx(expected, abs=1e-6)

    def test_quadrature_oracle_random_runs(self, rng):
        for _ in range(100):
            n_states = rng.randint(1, 4)
            costs = {f"s{i}": rng.uniform(0, 5) for i in range(n_states)}
            drug_cost = rng.uniform(0, 3)
            d = rng.uniform(0.3, 1.0)
            model = scalar_model(costs, 0.5, {"drug": drug_cost}, d)
            steps = []
            segments = []  # (t0, t1, rate)
            tau = Fraction(0)
            state = "s0"
            for _k in range(rng.randint(1, 6)):
                dur = Fraction(rng.randint(1, 8), rng.randint(1, 4))
                c = frozenset({"drug"}) if rng.random() < 0.5 else frozenset()
                steps.append(DelayStep(dur, c))
                segments.append((float(tau), float(tau + dur),
                                 costs[state] + (drug_cost if c else 0.0)))
                tau += dur
                if rng.random() < 0.6:
                    state = f"s{rng.randrange(n_states)}"
                    steps.append(JumpStep(0, state))
            run = TimedRun("s0", tuple(steps))
            value = timed_cost(run, model)
            oracle = sum(quad(lambda t, r=r: r * math.exp(-d * t), t0, t1)[0]
                         for t0, t1, r in segments)
            assert value[0] == pytest.approx(oracle, abs=1e-6)

    def test_additive_over_concatenation(self, rng):
        # splitting a delay at a rational point never changes the total
        for _ in range(50):
            dur = Fraction(rng.randint(2, 9), rng.randint(1, 3))
            cut = dur * Fraction(rng.randint(1, 3), 4)
            model = scalar_model({"v": rng.uniform(0.1, 4)}, 0.5, {}, rng.uniform(0.2, 1))
            whole = TimedRun("v", (DelayStep(dur, frozenset()),))
            split = TimedRun("v", (DelayStep(cut, frozenset()),
                                   DelayStep(dur - cut, frozenset())))
            assert timed_cost(whole, model)[0] == pytest.approx(
                timed_cost(split, model)[0], abs=1e-12)


# ---------------------------------------------------------------------------
# Pareto dominance

class TestPareto:
    def test_examples(self):
        assert pareto_dominates((1, 2), (2, 2))
        assert not pareto_dominates((1, 3), (2, 2))
        assert not pareto_dominates((2, 2), (2, 2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            pareto_dominates((1,), (1, 2))

    @given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=5))
    def test_irreflexive(self, v):
        assert not pareto_dominates(tuple(v), tuple(v))

    @settings(max_examples=300)
    @given(st.integers(1, 5), st.data())
    def test_transitive(self, n, data):
        vec = st.tuples(*([st.floats(0, 10, allow_nan=False)] * n))
        x, y, z = data.draw(vec), data.draw(vec), data.draw(vec)
        if pareto_dominates(x, y) and pareto_dominates(y, z):
            assert pareto_dominates(x, z)

    def test_bulk_random_properties(self):
        # 10^4 random pairs/triples with a fixed seed
        r = random.Random(7)
        for _ in range(10_000):
            n = r.randint(1, 4)
            x = tuple(r.uniform(0, 10) for _ in range(n))
            y = tuple(r.uniform(0, 10) for _ in range(n))
            z = tuple(r.uniform(0, 10) for _ in range(n))
            assert not pareto_dominates(x, x)
            if pareto_dominates(x, y):
                assert not pareto_dominates(y, x)  # asymmetry
            if pareto_dominates(x, y) and pareto_dominates(y, z):
                assert pareto_dominates(x, z)


# ---------------------------------------------------------------------------
# candidate therapies, universal candidates, covers

def two_path_model():
    """From v, drug-free goes to the expensive state, d-blocked path to cheap."""
    return Cha(("v", "bad", "ok"),
               (Edge("v", frozenset({"d"}), "bad"),
                Edge("v", frozenset({"e"}), "ok"),
                Edge("bad", frozenset(), "bad"),
                Edge("ok", frozenset(), "ok")),
               "v", ("d", "e"), {})


def mirrored_model():
    return Cha(("v", "bad", "ok"),
               (Edge("v", frozenset({"e"}), "bad"),
                Edge("v", frozenset({"d"}), "ok"),
                Edge("bad", frozenset(), "bad"),
                Edge("ok", frozenset(), "ok")),
               "v", ("d", "e"), {})


COSTS = {"v": 0.0, "bad": 10.0, "ok": 0.0}


def restricted_space():
    # deliberately excludes the empty cocktail so domination can happen
    return TherapySpace((frozenset({"d"}), frozenset({"e"})))


class TestCandidates:
    def test_single_therapy_space(self):
        cha = two_path_model()
        space = TherapySpace((frozenset({"d"}),))
        report = candidate_therapies(cha, scalar_model(COSTS), space, 4)
        assert len(report.candidates) == len(report.therapies) > 0

    def test_cheaper_singleton_wins(self):
        # two fixed therapies whose scalar cost sets are {low} and {high}
        cha = Cha(("a",), (Edge("a", frozenset(), "a"),), "a", ("d",), {})
        model = scalar_model({"a": 1.0}, 0.5, {"d": 5.0})
        space = TherapySpace((frozenset(), frozenset({"d"})))
        report = candidate_therapies(cha, model, space, 4)
        assert len(report.candidates) == 1
        assert report.candidates[0].cocktail_for(["a"]) == frozenset()

    def test_matches_bruteforce_double_loop(self, rng):
        for _ in range(15):
            cha = random_untimed_cha(rng, max_states=3, max_drugs=2)
            from chakit.untimed import validate
            if not validate(cha).ok:
                continue
            model = scalar_model({s: rng.uniform(0, 3) for s in cha.states},
                                 0.5, {d: rng.uniform(0, 2) for d in cha.drugs})
            menu = (frozenset(),) + tuple(frozenset({d}) for d in cha.drugs)
            space = TherapySpace(menu)
            horizon = 4
            report = candidate_therapies(cha, model, space, horizon)

            therapies = list(space.therapies(cha))
            costs = [therapy_cost_set(cha, t, model, horizon) for t in therapies]
            dominated = set()
            for i, j in itertools.permutations(range(len(therapies)), 2):
                if all(pareto_dominates(x, y)
                       for x in costs[i][0] for y in costs[j][0]):
                    dominated.add(j)
            oracle = {therapies[k] for k in range(len(therapies)) if k not in dominated}
            assert set(report.candidates) == oracle

    def test_universal_intersection(self):
        h1, h2 = two_path_model(), mirrored_model()
        model = scalar_model(COSTS, 0.5, {"d": 0.5, "e": 0.5})
        space = restricted_space()
        c1 = candidate_therapies(h1, model, space, 6).candidate_set()
        c2 = candidate_therapies(h2, model, space, 6).candidate_set()
        union_check = universal_candidates([h1, h2], model, space, 6)
        assert set(union_check) == (c1 & c2)
        assert universal_candidates([h1], model, space, 6) == tuple(
            sorted(c1, key=lambda t: list(space.therapies(h1)).index(t)))

    def test_universal_subset_of_each_member(self, rng):
        for _ in range(10):
            base = random_untimed_cha(rng, max_states=3, max_drugs=2)
            from chakit.untimed import validate
            if not validate(base).ok:
                continue
            # second member: same states, different edges
            other = random_untimed_cha(rng, max_states=3, max_drugs=2)
            if sorted(other.states) != sorted(base.states):
                continue
            model = scalar_model({s: rng.uniform(0, 3) for s in base.states})
            space = TherapySpace((frozenset(),) + tuple(frozenset({d})
                                                        for d in base.drugs))
            try:
                uni = set(universal_candidates([base, other], model, space, 4))
            except DomainMismatchError:
                continue
            for h in (base, other):
                assert uni <= candidate_therapies(h, model, space, 4).candidate_set()

    def test_domain_mismatch(self):
        h1 = two_path_model()
        h2 = Cha(("x",), (Edge("x", frozenset(), "x"),), "x", ("d", "e"), {})
        with pytest.raises(DomainMismatchError):
            universal_candidates([h1, h2], scalar_model(COSTS), restricted_space(), 4)


class TestCovers:
    def setup_method(self):
        self.h1, self.h2 = two_path_model(), mirrored_model()
        self.model = scalar_model(COSTS, 0.5, {"d": 0.5, "e": 0.5})
        self.space = restricted_space()
        self.theta_d = MemorylessTherapy.from_dict(
            {s: frozenset({"d"}) for s in self.h1.states})
        self.theta_e = MemorylessTherapy.from_dict(
            {s: frozenset({"e"}) for s in self.h1.states})

    def test_disjoint_candidate_sets(self):
        c1 = candidate_therapies(self.h1, self.model, self.space, 6).candidate_set()
        c2 = candidate_therapies(self.h2, self.model, self.space, 6).candidate_set()
        assert self.theta_d in c1 and self.theta_d not in c2
        assert self.theta_e in c2 and self.theta_e not in c1

    def test_pair_covers_but_singletons_do_not(self):
        family = [self.h1, self.h2]
        assert covers([self.theta_d, self.theta_e], family, self.model, self.space, 6)
        assert not covers([self.theta_d], family, self.model, self.space, 6)
        assert not covers([self.theta_e], family, self.model, self.space, 6)
        assert not covers([], family, self.model, self.space, 6)

    def test_universal_member_singleton_covers(self):
        family = [self.h1, self.h1]
        uni = universal_candidates(family, self.model, self.space, 6)
        assert uni
        assert covers([uni[0]], family, self.model, self.space, 6)

    def test_therapy_equality_is_representation_free(self):
        # a sparse therapy and its fully spelled-out twin are the same
        # function and must intersect candidate sets identically
        sparse = MemorylessTherapy.from_dict({"v": frozenset({"d"})})
        dense = MemorylessTherapy.from_dict(
            {s: (frozenset({"d"}) if s == "v" else frozenset())
             for s in self.h1.states})
        assert sparse == dense
        space = TherapySpace((frozenset(), frozenset({"d"}), frozenset({"e"})))
        model = scalar_model(COSTS, 0.5, {"d": 0.5, "e": 0.5})
        c1 = candidate_therapies(self.h1, model, space, 6).candidate_set()
        assert (sparse in c1) == (dense in c1)


class TestPruning:
    def test_maximin_maximax(self):
        cost_sets = {"a": ([(1.0,), (9.0,)], [(0.0,), (0.0,)]),
                     "b": ([(4.0,), (5.0,)], [(0.0,), (0.0,)])}
        assert prune_maximin(cost_sets) == ("b",)
        assert prune_maximax(cost_sets) == ("a",)
