"""JSON model files: one format for untimed and timed models.

Untimed models carry inhibitor sets on edges; timed models carry guard
atoms, clocks, invariants and rational rates (written as "p/q" strings).
A timed file may still list inhibitors on edges together with a top-level
`emulate_inhibitors` section, in which case the loader rewrites them into
the frozen-clock construction. Serialization is canonical: sorted keys,
declaration order preserved, rationals as "p/q".
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional

from .cost import CostModel
from .errors import ModelFormatError, ModelValidationError
from .game import canonical_menu, default_menu
from .timed import (ClockConstraint, TimedCha, TimedEdge, as_fraction,
                    emulate_inhibitor_edge, validate_timed)
from .untimed import Cha, Edge, validate

FORMAT = "cha/1"


@dataclass
class ModelBundle:
    model: object  # Cha | TimedCha
    cost_model: CostModel
    menu: tuple
    timed: bool
    name: str = ""
    description: str = ""
    source: Optional[str] = None

    @property
    def cha(self) -> Cha:
        if self.timed:
            raise ModelFormatError("model is timed; untimed operation requested")
        return self.model

    @property
    def timed_cha(self) -> TimedCha:
        if not self.timed:
            raise ModelFormatError("model is untimed; timed operation requested")
        return self.model


def _require(data: Mapping, key: str, where: str):
    if key not in data:
        raise ModelFormatError(f"missing key {key!r}", where)
    return data[key]


def _parse_rational(text, where: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ModelFormatError(f"bad rational {text!r}: {exc}", where) from None


def parse_model(data: Mapping, source: Optional[str] = None) -> ModelBundle:
    if data.get("format") != FORMAT:
        raise ModelFormatError(f"unsupported format {data.get('format')!r}; expected {FORMAT}")
    name = data.get("name", "")
    description = data.get("description", "")
    drugs = []
    drug_costs = {}
    for i, entry in enumerate(_require(data, "drugs", "drugs")):
        drug_id = _require(entry, "id", f"drugs[{i}]")
        if not re.fullmatch(r"[A-Za-z0-9_-]+", str(drug_id)):
            raise ModelFormatError(f"bad drug id {drug_id!r}", f"drugs[{i}]")
        drugs.append(drug_id)
        if "cost" in entry:
            drug_costs[drug_id] = tuple(float(x) for x in entry["cost"])
    states = []
    labels = {}
    state_costs = {}
    for i, entry in enumerate(_require(data, "states", "states")):
        state_id = _require(entry, "id", f"states[{i}]")
        states.append(state_id)
        labels[state_id] = frozenset(entry.get("labels", [state_id]))
        if "cost" in entry:
            state_costs[state_id] = tuple(float(x) for x in entry["cost"])
    initial = _require(data, "initial", "initial")
    timed = bool(data.get("timed", False))

    cm_data = data.get("cost_model", {})
    dimension = int(cm_data.get("dimension", 1))
    cost_model = CostModel(
        dimension=dimension,
        state_costs={s: v for s, v in state_costs.items()},
        drug_costs={d: v for d, v in drug_costs.items()},
        cocktail_overrides={k: tuple(float(x) for x in v)
                            for k, v in cm_data.get("cocktail_costs", {}).items()},
        discount_untimed=float(cm_data.get("discount_untimed", 0.5)),
        discount_timed=float(cm_data.get("discount_timed", 1.0)),
    )

    if timed:
        model = _parse_timed(data, states, labels, initial, drugs, name)
        report = validate_timed(model)
    else:
        edges = []
        for i, entry in enumerate(_require(data, "edges", "edges")):
            edges.append(Edge(_require(entry, "from", f"edges[{i}]"),
                              frozenset(entry.get("inhibitors", [])),
                              _require(entry, "to", f"edges[{i}]")))
        model = Cha(tuple(states), tuple(edges), initial, tuple(drugs), labels, name)
        if data.get("implicit_self_loops", False):
            model = model.with_self_loops()
        report = validate(model)
    if not report.ok:
        raise ModelValidationError(report)

    if "cocktail_menu" in data:
        menu = canonical_menu([frozenset(c) for c in data["cocktail_menu"]], drugs)
    else:
        menu = default_menu(drugs)
    return ModelBundle(model, cost_model, menu, timed, name, description, source)


def _parse_timed(data, states, labels, initial, drugs, name) -> TimedCha:
    clocks = list(_require(data, "clocks", "clocks"))
    edges = []
    inhibited = []  # (edge position, inhibitor drugs)
    for i, entry in enumerate(_require(data, "edges", "edges")):
        guard = ClockConstraint(tuple((c, int(k))
                                      for c, k in sorted(entry.get("guard", {}).items())))
        edges.append(TimedEdge(_require(entry, "from", f"edges[{i}]"), guard,
                               _require(entry, "to", f"edges[{i}]")))
        if entry.get("inhibitors"):
            inhibited.append((i, tuple(entry["inhibitors"])))
    invariants = {}
    for state, per_clock in data.get("invariants", {}).items():
        for clock, limit in per_clock.items():
            invariants[(state, clock)] = int(limit)
    rates = {}
    for state, per_drug in data.get("rates", {}).items():
        for drug, per_clock in per_drug.items():
            for clock, value in per_clock.items():
                rates[(state, drug, clock)] = _parse_rational(
                    value, f"rates/{state}/{drug}/{clock}")
    clock_bounds = {c: int(m) for c, m in data.get("clock_bounds", {}).items()}
    model = TimedCha(tuple(states), tuple(clocks), tuple(edges), initial,
                     tuple(drugs), invariants, rates, labels, clock_bounds, name)
    if inhibited:
        spec = data.get("emulate_inhibitors")
        if not spec:
            raise ModelFormatError(
                "timed edges list inhibitors but no emulate_inhibitors section is present")
        z = int(spec.get("z", 1))
        for pos, inhibitor_drugs in inhibited:
            e = model.edges[pos]
            for drug in inhibitor_drugs:
                model = emulate_inhibitor_edge(model, e.source, e.target, drug, z)
    return model


def load_model(path) -> ModelBundle:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFormatError(str(exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}",
                               f"{path.name}:{exc.lineno}:{exc.colno}") from None
    return parse_model(data, source=str(path))


def _rational_str(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def serialize_model(bundle: ModelBundle) -> dict:
    """Canonical dict form; load(serialize(x)) == x up to ordering."""
    model = bundle.model
    cm = bundle.cost_model
    data = {
        "format": FORMAT,
        "name": bundle.name,
        "description": bundle.description,
        "timed": bundle.timed,
        "initial": model.initial,
        "drugs": [
            {"id": d, **({"cost": list(cm.drug_costs[d])} if d in cm.drug_costs else {})}
            for d in model.drugs
        ],
        "states": [
            {"id": s, "labels": sorted(model.labels[s]),
             **({"cost": list(cm.state_costs[s])} if s in cm.state_costs else {})}
            for s in model.states
        ],
        "cost_model": {
            "dimension": cm.dimension,
            "discount_untimed": cm.discount_untimed,
            "discount_timed": cm.discount_timed,
            **({"cocktail_costs": {k: list(v) for k, v in sorted(cm.cocktail_overrides.items())}}
               if cm.cocktail_overrides else {}),
        },
        "cocktail_menu": [sorted(c) for c in bundle.menu],
    }
    if bundle.timed:
        tc = model
        data["clocks"] = list(tc.clocks)
        data["edges"] = [
            {"from": e.source, "to": e.target,
             **({"guard": {c: k for c, k in e.guard.atoms}} if e.guard.atoms else {})}
            for e in tc.edges
        ]
        invariants = {}
        for (s, c), limit in sorted(tc.invariants.items()):
            invariants.setdefault(s, {})[c] = limit
        if invariants:
            data["invariants"] = invariants
        rates = {}
        for (s, d, c), r in sorted(tc.rates.items()):
            rates.setdefault(s, {}).setdefault(d, {})[c] = _rational_str(r)
        if rates:
            data["rates"] = rates
        if tc.clock_bounds:
            data["clock_bounds"] = dict(sorted(tc.clock_bounds.items()))
    else:
        data["edges"] = [
            {"from": e.source, "to": e.target,
             **({"inhibitors": sorted(e.inhibitors)} if e.inhibitors else {})}
            for e in model.edges
        ]
    return data


def dump_model(bundle: ModelBundle, path) -> None:
    Path(path).write_text(json.dumps(serialize_model(bundle), indent=2, sort_keys=True) + "\n")


def packaged_model_path(name: str) -> Path:
    """Path of one of the shipped example models (fig1/fig2/fig3)."""
    return Path(__file__).parent / "models" / f"{name}.json"
