"""chakit: modeling, model checking and therapy synthesis for
drug-controllable disease-progression automata.

Untimed models are finite automata with drug-inhibitable edges; timed
models add exact-rational clocks whose rates drugs can rescale. Goals are
CTL formulas (optionally step-bounded); therapies are synthesized by
solving fixpoints on the floor/ceiling region quotient of the sampled
two-player game, and every synthesized strategy is re-verified by model
checking the closed system.
"""

from .untimed import (AdversaryPolicy, Cha, Cocktail, Edge, Run, cocktail,
                      execute, is_inhibited, possible_executions, successors,
                      validate)
from .therapy import (FiniteMemoryTherapy, MemorylessTherapy, TabularTherapy,
                      Therapy, parse_therapy_spec, validate_therapy)
from .cost import (CostModel, CostResult, TherapySpace, candidate_therapies,
                   covers, pareto_dominates, therapy_cost_set, timed_cost,
                   universal_candidates, untimed_cost)
from .ctl import (CheckResult, Formula, Kripke, close_system, format_formula,
                  model_check, parse_ctl)
from .timed import (ClockConstraint, ClockValuation, DelayStep, JumpStep, TimedCha,
                    TimedEdge, TimedRun, TimedState, check_timed_execution,
                    cocktail_rate, delay, duration, emulate_inhibitor_edge,
                    enabled_edges, fire, validate_timed)
from .game import (HybridGame, QuotientGame, Region, all_region_codes,
                   canonical_menu, default_menu, discretize, full_menu,
                   quotient, region_of, translate, untimed_game)
from .synth import (Strategy, SynthesisResult, VerifyResult, cpre,
                    pareto_strategies, solve_ctl, solve_reachability,
                    solve_safety, verify_strategy)
from .modelfile import (ModelBundle, dump_model, load_model, packaged_model_path,
                        parse_model, serialize_model)
from .session import Session
from . import errors, kernels

__version__ = "0.1.0"
