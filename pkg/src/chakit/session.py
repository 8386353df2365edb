"""Interactive round-based sessions against a seeded adversary.

One round: the caller (or a loaded strategy) picks the cocktail, the
adversary fires an enabled progression edge or passes, then one time unit
elapses (timed models; untimed rounds are a single transition). Sessions
replay deterministically from (policy, seed, cocktail history); the
adversary's randomness at round r depends only on (seed, r), so dry-run
previews cannot perturb the trajectory.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .cost import zero_vector
from .errors import SessionError
from .game import discretize, quotient, translate, untimed_game
from .modelfile import ModelBundle
from .synth import Strategy
from .timed import TimedState, delay as timed_delay, enabled_edges, fire
from .untimed import AdversaryPolicy, _distance_to_label
from .errors import InvariantViolationError

PASS_MOVE = "pass"
HALT_MOVE = "halt"


@dataclass
class MoveRecord:
    round: int
    cocktail: tuple
    env_move: str  # "edge:<index>" | "pass" | "halt"
    state_after: str
    cost_delta: tuple


class Session:
    """Single-owner mutable simulation of one model."""

    def __init__(self, bundle: ModelBundle, policy: AdversaryPolicy, seed: int,
                 strategy: Optional[Strategy] = None, session_id: str = "local"):
        self.bundle = bundle
        self.policy = policy
        self.seed = int(seed)
        self.strategy = strategy
        self.session_id = session_id
        self._goal_distance = None
        self.reset()

    # ------------------------------------------------------------------
    def reset(self):
        self.round = 0
        self.halted = False
        self.active_cocktail = frozenset()
        self.cost = zero_vector(self.bundle.cost_model.dimension)
        self.history = []
        if self.bundle.timed:
            tc = self.bundle.timed_cha
            self.current = TimedState(tc.initial, (Fraction(0),) * len(tc.clocks))
        else:
            self.current = self.bundle.cha.initial

    # ------------------------------------------------------------------
    def _rng(self, round_index: int) -> random.Random:
        return random.Random(f"{self.seed}:{round_index}")

    def _distance_map(self):
        """Game-graph distance to the policy goal, adversary guidance only."""
        if self._goal_distance is not None:
            return self._goal_distance
        if self.bundle.timed:
            g = translate(self.bundle.timed_cha, self.bundle.menu)
            qg = quotient(discretize(g))
        else:
            qg = untimed_game(self.bundle.cha, self.bundle.menu)
        goal_nodes = [i for i in range(len(qg.nodes))
                      if self.policy.goal in qg.labels[i]]
        dist = {i: 0 for i in goal_nodes}
        preds = [[] for _ in range(len(qg.nodes))]
        for src, row in enumerate(qg.edges):
            for e in row:
                preds[e.dst].append(src)
        frontier = deque(goal_nodes)
        while frontier:
            v = frontier.popleft()
            for p in preds[v]:
                if p not in dist:
                    dist[p] = dist[v] + 1
                    frontier.append(p)
        self._goal_distance = (qg, dist)
        return self._goal_distance

    # ------------------------------------------------------------------
    def _env_options_timed(self, given):
        """(label, description) pairs: enabled edges then pass if legal."""
        tc = self.bundle.timed_cha
        options = [("edge", i) for i in enabled_edges(tc, self.current)]
        try:
            timed_delay(tc, self.current, 1, given)
            options.append((PASS_MOVE, None))
        except InvariantViolationError:
            pass
        return options

    def _pick(self, options, given):
        if not options:
            return None
        if self.policy.kind == "first-by-order":
            return options[0]
        if self.policy.kind == "uniform-random":
            return options[self._rng(self.round).randrange(len(options))]
        # adversarial-toward: minimize distance of the resulting configuration
        if self.bundle.timed:
            qg, dist = self._distance_map()
            tc = self.bundle.timed_cha

            def score(option):
                kind, payload = option
                if kind == "edge":
                    target = tc.edges[payload].target
                    key = (tc.state_order(target), )
                    # distance of any node at the target state, optimistic
                    best = min((dist.get(i) for i in range(len(qg.nodes))
                                if qg.states[qg.nodes[i][0]] == target
                                and dist.get(i) is not None), default=math.inf)
                    return best
                best = min((dist.get(i) for i in range(len(qg.nodes))
                            if qg.states[qg.nodes[i][0]] == self.current.state
                            and dist.get(i) is not None), default=math.inf)
                return best + 0.5  # prefer moving when it helps equally
            return min(options, key=lambda o: (score(o), options.index(o)))
        cha = self.bundle.cha
        dist = _distance_to_label(cha, self.policy.goal)
        return min(options, key=lambda o: (dist.get(cha.edges[o[1]].target
                                                    if o[0] == "edge" else self.current,
                                                    math.inf), options.index(o)))

    # ------------------------------------------------------------------
    def step(self, given, dry_run: bool = False) -> dict:
        """Apply one round: controller cocktail, adversary move, unit delay."""
        if self.halted:
            raise SessionError("session is terminated (no moves remain)")
        given = frozenset(given)
        unknown = given - frozenset(self.bundle.model.drugs)
        if unknown:
            from .errors import UnknownIdError
            raise UnknownIdError(f"unknown drugs: {', '.join(sorted(unknown))}")
        if self.bundle.timed:
            result = self._step_timed(given)
        else:
            result = self._step_untimed(given)
        if not dry_run:
            self.round, self.current, self.active_cocktail, self.cost, self.halted = (
                result["_round"], result["_current"], given, result["_cost"],
                result["_halted"])
            self.history.append(MoveRecord(self.round - 1, tuple(sorted(given)),
                                           result["env_move"], self._state_name(),
                                           tuple(result["cost_delta"])))
        return {k: v for k, v in result.items() if not k.startswith("_")}

    def _state_name(self):
        return self.current.state if self.bundle.timed else self.current

    def _step_untimed(self, given):
        cha = self.bundle.cha
        cm = self.bundle.cost_model
        here = self.current
        delta = tuple((cm.discount_untimed ** self.round) * x
                      for x in self._round_cost(here, given))
        options = [("edge", i) for i in cha.outgoing(here)
                   if not (cha.edges[i].inhibitors & given)]
        pick = self._pick(options, given)
        if pick is None:
            return self._result(self.round + 1, here, delta, HALT_MOVE, True)
        target = cha.edges[pick[1]].target
        return self._result(self.round + 1, target, delta, f"edge:{pick[1]}", False)

    def _step_timed(self, given):
        tc = self.bundle.timed_cha
        d = self.bundle.cost_model.discount_timed
        options = self._env_options_timed(given)
        pick = self._pick(options, given)
        if pick is None:
            # frozen configuration: time passes, nothing changes
            delta = self._timed_delta(self.current.state, given, d)
            return self._result(self.round + 1, self.current, delta, HALT_MOVE, True)
        if pick[0] == "edge":
            after_move = fire(tc, self.current, pick[1])
            move = f"edge:{pick[1]}"
        else:
            after_move = self.current
            move = PASS_MOVE
        delta = self._timed_delta(after_move.state, given, d)
        try:
            after_delay = timed_delay(tc, after_move, 1, given)
            halted = False
        except InvariantViolationError:
            after_delay = after_move
            halted = True
            move = HALT_MOVE if move == PASS_MOVE else move + "+halt"
        return self._result(self.round + 1, after_delay, delta, move, halted)

    def _timed_delta(self, state, given, d):
        cm = self.bundle.cost_model
        tau = float(self.round)
        weight = (math.exp(-d * tau) - math.exp(-d * (tau + 1.0))) / d
        return tuple(weight * x for x in self._round_cost(state, given))

    def _round_cost(self, state, given):
        cm = self.bundle.cost_model
        sc = cm.state_cost(state)
        cc = cm.cocktail_cost(given)
        return tuple(a + b for a, b in zip(sc, cc))

    def _result(self, new_round, new_current, delta, move, halted):
        cost = tuple(a + b for a, b in zip(self.cost, delta))
        return {
            "_round": new_round,
            "_current": new_current,
            "_cost": cost,
            "_halted": halted,
            "env_move": move,
            "cost_delta": list(delta),
            "state": (new_current.state if self.bundle.timed else new_current),
            "halted": halted,
            "round": new_round,
        }

    # ------------------------------------------------------------------
    def recommend(self):
        if self.strategy is None:
            return None
        if self.bundle.timed:
            tc = self.bundle.timed_cha
            valuation = self.current.valuation(tc)
            return self.strategy.recommend(self.current.state, self.active_cocktail,
                                           valuation)
        return self.strategy.recommend(self.current, self.active_cocktail, None)

    def enabled_edge_info(self) -> list:
        out = []
        if self.bundle.timed:
            tc = self.bundle.timed_cha
            val = self.current.valuation(tc)
            for i in tc.outgoing(self.current.state):
                e = tc.edges[i]
                out.append({"index": i, "to": e.target, "guard": str(e.guard),
                            "enabled": e.guard.satisfied_by(val)})
        else:
            cha = self.bundle.cha
            for i in cha.outgoing(self.current):
                e = cha.edges[i]
                out.append({"index": i, "to": e.target,
                            "inhibitors": sorted(e.inhibitors),
                            "enabled": not (e.inhibitors & self.active_cocktail)})
        return out

    def snapshot(self) -> dict:
        if self.bundle.timed:
            tc = self.bundle.timed_cha
            valuation = {c: _frac_str(v) for c, v in
                         zip(tc.clocks, self.current.values)}
        else:
            valuation = {}
        return {
            "id": self.session_id,
            "round": self.round,
            "state": self._state_name(),
            "valuation": valuation,
            "active_cocktail": sorted(self.active_cocktail),
            "cost": list(self.cost),
            "halted": self.halted,
            "policy": str(self.policy),
            "seed": self.seed,
            "history": [
                {"round": m.round, "cocktail": list(m.cocktail), "env_move": m.env_move,
                 "state_after": m.state_after, "cost_delta": list(m.cost_delta)}
                for m in self.history
            ],
        }

    def replay_check(self) -> bool:
        """History + seed fully determine the state: replay and compare."""
        twin = Session(self.bundle, self.policy, self.seed, self.strategy, "replay")
        for m in self.history:
            twin.step(frozenset(m.cocktail))
        return twin.snapshot() == {**self.snapshot(), "id": twin.session_id}


def _frac_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
