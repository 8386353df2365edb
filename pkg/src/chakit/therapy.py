"""Finite therapy representations.

A therapy maps progression histories to cocktails. Arbitrary functions are
not representable, so three finite forms are supported: memoryless (per
state), bounded-memory (per history suffix) and tabular (explicit map from
finite histories).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ChaError
from .untimed import Cocktail, EMPTY_COCKTAIL, cocktail_key


class TherapyDomainError(ChaError):
    """The therapy is undefined on a queried history."""


def _freeze_items(mapping):
    return tuple(sorted((k, frozenset(v)) for k, v in mapping.items()))


class Therapy:
    """Base interface: `cocktail_for` takes the state sequence so far."""

    kind = "abstract"

    def cocktail_for(self, states: Sequence[str]) -> Cocktail:
        raise NotImplementedError

    def cocktail_for_timed(self, states: Sequence[str], valuation=None) -> Cocktail:
        """Hook for clock-aware therapies; default ignores the valuation."""
        return self.cocktail_for(states)

    def cocktails_used(self) -> frozenset:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class MemorylessTherapy(Therapy):
    assignments: tuple  # sorted (state, cocktail) pairs, defaults stripped
    default: Cocktail = EMPTY_COCKTAIL

    kind = "memoryless"

    def __post_init__(self):
        # canonical form: equal functions compare equal, so entries that
        # just restate the default are dropped
        object.__setattr__(self, "default", frozenset(self.default))
        object.__setattr__(
            self, "assignments",
            tuple(sorted((s, frozenset(c)) for s, c in self.assignments
                         if frozenset(c) != self.default)))

    @staticmethod
    def from_dict(mapping: Mapping, default=EMPTY_COCKTAIL) -> "MemorylessTherapy":
        return MemorylessTherapy(_freeze_items(mapping), frozenset(default))

    def as_dict(self) -> dict:
        return dict(self.assignments)

    def cocktail_for(self, states):
        return self.as_dict().get(states[-1], self.default)

    def cocktails_used(self):
        return frozenset(c for _, c in self.assignments) | {self.default}

    def describe(self):
        parts = [f"{{{cocktail_key(c)}}}@{s}" for s, c in self.assignments if c]
        return ", ".join(parts) if parts else "(no drugs)"


@dataclass(frozen=True)
class FiniteMemoryTherapy(Therapy):
    """Keyed by the history suffix of length <= window (shorter near the start)."""

    window: int
    assignments: tuple  # sorted (suffix tuple, cocktail) pairs
    default: Cocktail = EMPTY_COCKTAIL

    kind = "finite-memory"

    def __post_init__(self):
        object.__setattr__(self, "default", frozenset(self.default))
        object.__setattr__(
            self, "assignments",
            tuple(sorted((tuple(k), frozenset(c)) for k, c in self.assignments
                         if frozenset(c) != self.default)))

    @staticmethod
    def from_dict(window: int, mapping: Mapping, default=EMPTY_COCKTAIL) -> "FiniteMemoryTherapy":
        items = tuple(sorted((tuple(k), frozenset(v)) for k, v in mapping.items()))
        return FiniteMemoryTherapy(window, items, frozenset(default))

    def cocktail_for(self, states):
        suffix = tuple(states[-self.window:])
        return dict(self.assignments).get(suffix, self.default)

    def cocktails_used(self):
        return frozenset(c for _, c in self.assignments) | {self.default}

    def describe(self):
        return f"finite-memory(window={self.window}, {len(self.assignments)} entries)"


@dataclass(frozen=True)
class TabularTherapy(Therapy):
    """Explicit map from full histories to cocktails; total on its table only."""

    assignments: tuple  # sorted (history tuple, cocktail) pairs

    kind = "tabular"

    @staticmethod
    def from_dict(mapping: Mapping) -> "TabularTherapy":
        items = tuple(sorted((tuple(k), frozenset(v)) for k, v in mapping.items()))
        return TabularTherapy(items)

    def cocktail_for(self, states):
        key = tuple(states)
        table = dict(self.assignments)
        if key not in table:
            raise TherapyDomainError(f"therapy undefined on history {key}")
        return table[key]

    def cocktails_used(self):
        return frozenset(c for _, c in self.assignments)

    def describe(self):
        return f"tabular({len(self.assignments)} histories)"


def validate_therapy(therapy: Therapy, drug_universe) -> None:
    """Every assigned cocktail must draw from the model's drugs."""
    universe = frozenset(drug_universe)
    for c in therapy.cocktails_used():
        unknown = c - universe
        if unknown:
            raise TherapyDomainError(
                f"therapy uses unknown drugs: {', '.join(sorted(unknown))}")


def parse_therapy_spec(text: str, default=EMPTY_COCKTAIL) -> MemorylessTherapy:
    """Parse the CLI mini-language 'd@S1,a+b@S2' into a memoryless therapy.

    An empty string means the always-empty therapy.
    """
    mapping = {}
    if text.strip():
        for part in text.split(","):
            part = part.strip()
            if "@" not in part:
                raise TherapyDomainError(f"bad therapy entry {part!r}; expected drugs@state")
            drugs, state = part.split("@", 1)
            names = frozenset(d for d in drugs.split("+") if d)
            mapping[state.strip()] = names
    return MemorylessTherapy.from_dict(mapping, default)
